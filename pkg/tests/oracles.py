"""Independent reference computations for the test suite.

Each oracle is written from the defining formula with plain loops or
closed forms and shares no numerical code with the package.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import defaultdict

import numpy as np
from scipy import integrate, special


def hat(t, eps):
    """Scaled 1D hat: (2/eps) max(0, 1 - |2t/eps|)."""
    return (2.0 / eps) * max(0.0, 1.0 - abs(2.0 * t / eps))


def bump(x, eps):
    return math.prod(hat(t, eps) for t in x)


def bump_ft(xi, eps):
    """Transform of the scaled tensor hat: prod (sin(pi eps xi/2) / (pi eps xi/2))^2."""
    out = 1.0
    for z in xi:
        u = math.pi * eps * z / 2
        out *= 1.0 if u == 0 else (math.sin(u) / u) ** 2
    return out


def ft_direct(points, weights, xi):
    return sum(w * cmath.exp(-2j * math.pi * sum(a * b for a, b in zip(x, xi)))
               for x, w in zip(points, weights))


def convolve_loops(pa, wa, pb, wb, ndigits=9):
    acc = defaultdict(float)
    for x, u in zip(pa, wa):
        for y, v in zip(pb, wb):
            key = tuple(round(a + b, ndigits) for a, b in zip(x, y))
            acc[key] += u * v
    return dict(acc)


def ifs_compositions_1d(maps, depth, seed=0.0):
    """All depth-fold compositions f_{i1} o ... o f_{id}(seed) for maps (r, t)."""
    pts = [seed]
    for _ in range(depth):
        pts = [r * x + t for (r, t) in maps for x in pts]
    return sorted(pts)


def box_count_dimension(points, scales):
    """Slope of log N(delta) against log(1/delta) for occupied grid boxes."""
    counts = []
    for s in scales:
        keys = {tuple(np.floor(p / s + 1e-9).astype(int)) for p in np.atleast_2d(points)}
        counts.append(len(keys))
    return float(np.polyfit(np.log(1 / np.asarray(scales)), np.log(counts), 1)[0])


def mollified_l2_gl(points, weights, eps):
    """int (mu * phi^eps)^2 by Gauss-Legendre on the cells between hat
    breakpoints; the integrand is a polynomial of degree <= 2 per axis on each
    cell, so two nodes per axis are exact."""
    points = np.atleast_2d(points)
    d = points.shape[1]
    xg, wg = np.polynomial.legendre.leggauss(2)
    axes_nodes, axes_w = [], []
    for i in range(d):
        br = np.unique(np.concatenate([points[:, i] + s for s in (-eps / 2, 0.0, eps / 2)]))
        a, b = br[:-1], br[1:]
        axes_nodes.append(((b - a)[:, None] / 2 * xg + (a + b)[:, None] / 2).ravel())
        axes_w.append(((b - a)[:, None] / 2 * wg).ravel())
    # separable evaluation of the density on the tensor node grid
    factors = []
    for i in range(d):
        t = axes_nodes[i][:, None] - points[None, :, i]
        factors.append((2 / eps) * np.clip(1 - np.abs(2 * t / eps), 0, None))
    if d == 1:
        dens = factors[0] @ weights
        return float(np.sum(axes_w[0] * dens**2))
    dens = np.einsum("ak,bk,k->ab", factors[0], factors[1], weights)
    return float(np.einsum("a,b,ab->", axes_w[0], axes_w[1], dens**2))


def poisson_ft_grid(points, weights, eps, h, xi, M=6):
    """Riemann-sum transform of mu*phi^eps on the lattice hZ^d via Poisson
    summation: sum_m mu_hat(xi + m/h) phi_hat(eps (xi + m/h))."""
    d = len(xi)
    total = 0j
    for m in itertools.product(range(-M, M + 1), repeat=d):
        z = [a + b / h for a, b in zip(xi, m)]
        total += ft_direct(points, weights, z) * bump_ft(z, eps)
    return total


def riemann_ft_grid(points, weights, eps, h, xi):
    """h^d sum over lattice nodes of (mu * phi^eps)(node) exp(-2 pi i node . xi)."""
    points = np.atleast_2d(points)
    d = points.shape[1]
    ranges = [range(math.floor((points[:, i].min() - eps) / h), math.ceil((points[:, i].max() + eps) / h) + 1)
              for i in range(d)]
    total = 0j
    for idx in itertools.product(*ranges):
        node = [h * k for k in idx]
        val = sum(w * bump([a - b for a, b in zip(node, p)], eps) for p, w in zip(points, weights))
        if val:
            total += val * cmath.exp(-2j * math.pi * sum(a * b for a, b in zip(node, xi)))
    return total * h**d


def two_point_spherical_average(sep, r):
    """Normalized S^1 average of |mu_hat(r w)|^2 for 1/2(delta_a + delta_b),
    by adaptive quadrature."""
    f = lambda th: 0.5 + 0.5 * math.cos(2 * math.pi * r * (sep[0] * math.cos(th) + sep[1] * math.sin(th)))
    val, _ = integrate.quad(f, 0, 2 * math.pi, limit=2000, epsabs=1e-13, epsrel=1e-13)
    return val / (2 * math.pi)


def two_point_spherical_average_bessel(sep_len, r):
    return 0.5 + 0.5 * special.j0(2 * math.pi * r * sep_len)


def sinc2_energy(R):
    """int_{-R}^{R} sinc(xi)^2 d xi (uniform measure on [0,1])."""
    val, _ = integrate.quad(lambda x: np.sinc(x) ** 2, -R, R, limit=4000)
    return val


def midpoint_grid_ft(n, xi):
    """Closed form of the transform of the n-cell midpoint grid on [0,1]."""
    if abs(math.sin(math.pi * xi / n)) < 1e-15:
        return cmath.exp(-1j * math.pi * xi) * (1.0 if round(xi / n) % 2 == 0 else (-1) ** (n - 1))
    return cmath.exp(-1j * math.pi * xi) * math.sin(math.pi * xi) / (n * math.sin(math.pi * xi / n))


def enumerate_distance_hist(points, weights, bw):
    """Exact bin masses of |x - y| for independent atoms (no jitter)."""
    acc = defaultdict(float)
    for (x, u), (y, v) in itertools.product(zip(points, weights), repeat=2):
        t = math.dist(x, y)
        acc[math.floor(t / bw)] += u * v
    return dict(acc)


def rotation_correlation_dense(points, weights, eps, n_angles=4096, h_factor=16):
    """O(2) group integral of int mu^eps(x) mu^eps(g x) dx on a fine grid with
    exact density values, averaged over both components of O(2)."""
    points = np.asarray(points, float)
    h = eps / h_factor
    lo = points.min(0) - eps
    hi = points.max(0) + eps
    ax = [np.arange(lo[i], hi[i] + h, h) for i in range(2)]
    X, Y = np.meshgrid(*ax, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], 1)

    def dens(q):
        out = np.zeros(len(q))
        for p, w in zip(points, weights):
            t = q - p
            out += w * np.prod((2 / eps) * np.clip(1 - np.abs(2 * t / eps), 0, None), axis=1)
        return out

    base = dens(nodes)
    keep = base > 0
    nodes, base = nodes[keep], base[keep]
    total = 0.0
    for k in range(n_angles):
        th = 2 * math.pi * (k + 0.5) / n_angles
        c, s = math.cos(th), math.sin(th)
        for refl in (1.0, -1.0):
            g = np.array([[c, -s * refl], [s, c * refl]])
            total += np.sum(base * dens(nodes @ g.T)) * h * h
    return total / (2 * n_angles)


def probe_dense(x, y, xi, eta, cutoff, C=2.0, n=(96, 96, 128)):
    """Brute-force 3D midpoint rule for the SL2 probe over (theta, log a, b)."""
    nt, na, nb = n
    la = math.log(C)
    total = 0j
    ths = 2 * math.pi * (np.arange(nt) + 0.5) / nt
    ss = -la + 2 * la * (np.arange(na) + 0.5) / na
    bs = -C + 2 * C * (np.arange(nb) + 0.5) / nb
    A, B = np.meshgrid(np.exp(ss), bs, indexing="ij")
    a, b = A.ravel(), B.ravel()
    psi = cutoff(np.stack([np.zeros(a.size), a, b], 1))
    x, y, xi, eta = map(np.asarray, (x, y, xi, eta))
    for th in ths:
        c, s = math.cos(th), math.sin(th)
        # g = k p with p = [[a, b], [0, 1/a]]
        g11, g12 = c * a, c * b - s / a
        g21, g22 = s * a, s * b + c / a
        gxi = np.stack([g11 * xi[0] + g12 * xi[1], g21 * xi[0] + g22 * xi[1]], 1)
        geta = np.stack([g11 * eta[0] + g12 * eta[1], g21 * eta[0] + g22 * eta[1]], 1)
        ph = gxi @ x + geta @ y
        total += np.sum(np.exp(-2j * math.pi * ph) * psi * a)
    return total / nt * (2 * la / na) * (2 * C / nb)
