"""Fourier transforms of measures and the energy functionals built on them.

Convention: ``mu_hat(xi) = int exp(-2 pi i x.xi) dmu(x)``. Spherical averages
are returned normalized (probability measure on the sphere); the surface
area ``|S^{d-1}|`` is applied explicitly wherever unnormalized ``d omega``
integrals are needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial.transform import Rotation

from .common import Estimate, PreconditionError, as_rng, loglog_slope
from .measures import GridDensity, Mollifier, PointMassMeasure

_CHUNK = 1 << 22  # frequencies x atoms per block


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere ``S^{d-1}``."""
    return 2 * pi ** (d / 2) / gamma(d / 2)


def ball_volume(d: int, r: float = 1.0) -> float:
    return pi ** (d / 2) / gamma(d / 2 + 1) * r**d


@dataclass(frozen=True, eq=False)
class ClosedFormMeasure:
    """A probability density known only through its Fourier transform.

    Used as a smooth reference object in quadrature tests.
    """

    dim: int
    name: str
    transform: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    radial: bool = False

    @classmethod
    def fejer(cls, dim: int, scale: float = 1.0) -> "ClosedFormMeasure":
        """Tensor Fejer density ``prod scale * sinc(scale x_i)^2``; transform is a
        tent supported in ``|xi_i| <= scale``."""
        def ft(xi):
            return np.prod(np.clip(1 - np.abs(xi) / scale, 0, None), axis=-1).astype(complex)
        return cls(dim, f"fejer(scale={scale})", ft)

    @classmethod
    def gaussian(cls, dim: int, sigma: float = 0.25) -> "ClosedFormMeasure":
        def ft(xi):
            return np.exp(-2 * pi**2 * sigma**2 * np.sum(xi**2, axis=-1)).astype(complex)
        return cls(dim, f"gaussian(sigma={sigma})", ft, radial=True)


def _as_freqs(xi, dim: int) -> tuple[np.ndarray, bool]:
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim <= 1
    xi = xi.reshape(-1, dim) if xi.ndim <= 1 else xi
    if xi.shape[-1] != dim:
        raise ValueError(f"frequency dim {xi.shape[-1]} does not match measure dim {dim}")
    return xi, single


def _ft_atoms(points: np.ndarray, weights: np.ndarray, xi: np.ndarray) -> np.ndarray:
    out = np.empty(xi.shape[0], dtype=complex)
    step = max(1, _CHUNK // max(1, points.shape[0]))
    for s in range(0, xi.shape[0], step):
        phase = xi[s:s + step] @ points.T
        phase -= np.round(phase)
        out[s:s + step] = np.exp(-2j * pi * phase) @ weights
    return out


def ft_point(mu: PointMassMeasure, xi) -> np.ndarray | complex:
    """``sum_k w_k exp(-2 pi i x_k . xi)`` for one frequency or an (n, d) array.

    Product measures are transformed factor by factor.
    """
    xi, single = _as_freqs(xi, mu.dim)
    if mu.factors:
        out = np.ones(xi.shape[0], dtype=complex)
        c = 0
        for f in mu.factors:
            out *= _ft_atoms(f.points, f.weights, xi[:, c:c + f.dim])
            c += f.dim
    else:
        out = _ft_atoms(mu.points, mu.weights, xi)
    return complex(out[0]) if single else out


def ft_grid(rho: GridDensity, xi) -> np.ndarray | complex:
    """Riemann-sum transform ``h^d sum values(node) exp(-2 pi i node . xi)``.

    Separable over axes, so the cost is ``n_freq * grid_size``. The result
    is periodic with period ``1/h`` per axis and carries an aliasing error
    of relative size about ``3 (|xi| h)^2`` against the continuous transform
    of a tensor-hat mollified measure.
    """
    xi, single = _as_freqs(xi, rho.dim)
    axes = rho.axes()
    out = np.empty(xi.shape[0], dtype=complex)
    step = max(1, _CHUNK // max(1, rho.values.size))
    for s in range(0, xi.shape[0], step):
        blk = xi[s:s + step]
        ph = [np.exp(-2j * pi * np.outer(blk[:, i], axes[i])) for i in range(rho.dim)]
        t = np.einsum("na,a...->n...", ph[0], rho.values.astype(complex))
        for i in range(1, rho.dim):
            t = np.einsum("na,na...->n...", ph[i], t)
        out[s:s + step] = t * rho.cell_volume
    return complex(out[0]) if single else out


def fourier_transform(mu, xi) -> np.ndarray:
    """Dispatch on the measure representation; always returns an array."""
    if isinstance(mu, PointMassMeasure):
        f = ft_point(mu, xi)
    elif isinstance(mu, GridDensity):
        f = ft_grid(mu, xi)
    elif isinstance(mu, ClosedFormMeasure):
        f = mu.transform(_as_freqs(xi, mu.dim)[0])
    else:
        raise TypeError(f"no Fourier transform for {type(mu).__name__}")
    return np.atleast_1d(f)


def power(mu, xi, mollifier: Mollifier | None = None) -> np.ndarray:
    """``|mu_hat(xi)|^2``, times ``phi_hat(eps xi)^2`` when a mollifier is given."""
    p = np.abs(fourier_transform(mu, xi)) ** 2
    if mollifier is not None:
        xi = _as_freqs(xi, mu.dim)[0]
        p = p * mollifier.ft(xi) ** 2
    return p


def reciprocal_lattice_energy(rho: GridDensity, use_fft: bool = True) -> tuple[float, float]:
    """Both sides of the discrete Plancherel identity for a grid density.

    Returns ``(sum_k |rho_hat(k / (N h))|^2 / prod(N h), h^d sum rho^2)`` where
    ``k`` runs over one period of the reciprocal lattice.
    """
    N = np.array(rho.shape)
    L = N * rho.spacing
    if use_fft:
        spec = np.abs(np.fft.fftn(rho.values) * rho.cell_volume) ** 2
        lhs = spec.sum() / np.prod(L)
    else:
        ks = np.stack(np.meshgrid(*[np.arange(n) / l for n, l in zip(N, L)], indexing="ij"), -1)
        lhs = np.sum(np.abs(ft_grid(rho, ks.reshape(-1, rho.dim))) ** 2) / np.prod(L)
    return float(lhs), rho.l2_norm_sq()


# ---------------------------------------------------------------------------
# Directions and spherical averages


def sphere_directions(d: int, n: int, seed=None) -> np.ndarray:
    """Equal-weight nodes on ``S^{d-1}``: a uniform angle lattice for d=2,
    spherical Fibonacci points for d=3. A seed applies a random rotation."""
    if d == 2:
        off = 0.0 if seed is None else as_rng(seed).uniform()
        th = 2 * pi * (np.arange(n) + off) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if d == 3:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = pi * (3 - np.sqrt(5)) * k
        s = np.sqrt(1 - z**2)
        u = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
        if seed is not None:
            u = u @ Rotation.random(random_state=as_rng(seed).integers(2**32)).as_matrix().T
        return u
    raise PreconditionError(f"sphere quadrature supports d in {{2, 3}}, got {d}")


def spherical_average(mu, r: float, n_dirs: int = 256, seed=None,
                      mollifier: Mollifier | None = None) -> float:
    """Normalized average of ``|mu_hat(r omega)|^2`` over ``n_dirs`` directions."""
    if mu.dim not in (2, 3):
        raise PreconditionError(f"spherical_average needs d in {{2, 3}}, got {mu.dim}")
    if n_dirs < 16:
        raise PreconditionError("n_dirs must be >= 16")
    u = sphere_directions(mu.dim, n_dirs, seed)
    return float(np.mean(power(mu, r * u, mollifier)))


def _radial_profile(mu, radii: np.ndarray, n_dirs: int, mollifier=None, seed=None) -> np.ndarray:
    """``A(r)`` for many radii at once; shape (len(radii), n_dirs) raw powers."""
    u = sphere_directions(mu.dim, n_dirs, seed)
    xi = (radii[:, None, None] * u[None]).reshape(-1, mu.dim)
    return power(mu, xi, mollifier).reshape(len(radii), n_dirs)


@dataclass(frozen=True, eq=False)
class SphericalAverageCurve:
    radii: np.ndarray
    values: np.ndarray
    n_dirs: int
    stderr: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and increasing")
        if np.shape(self.values) != r.shape:
            raise ValueError("one value per radius")

    def rows(self):
        for r, v, e in zip(self.radii, self.values, self.stderr):
            yield float(r), float(v), float(e)


def spherical_average_curve(mu, radii, n_dirs: int = 256, mollifier=None) -> SphericalAverageCurve:
    """Curve of normalized spherical averages; the error bar is the change
    from halving the direction count."""
    if mu.dim not in (2, 3):
        raise PreconditionError(f"spherical averages need d in {{2, 3}}, got {mu.dim}")
    radii = np.asarray(radii, dtype=float)
    full = _radial_profile(mu, radii, n_dirs, mollifier).mean(axis=1)
    if mu.dim == 2:
        half = _radial_profile(mu, radii, n_dirs, mollifier)[:, ::2].mean(axis=1)
    else:
        half = _radial_profile(mu, radii, n_dirs // 2, mollifier).mean(axis=1)
    return SphericalAverageCurve(radii, full, n_dirs, np.abs(full - half))


# ---------------------------------------------------------------------------
# Frequency sets


@dataclass(frozen=True, eq=False)
class FrequencySet:
    """Quadrature nodes for integrals over a ball in frequency space.

    ``weights`` are volume weights, so ``sum(weights * f(frequencies))``
    estimates ``int f``. ``strata`` labels Monte Carlo strata (-1 marks
    deterministic nodes). ``recipe`` holds what is needed to rebuild the set.
    """

    dim: int
    frequencies: np.ndarray
    weights: np.ndarray
    strata: np.ndarray
    scheme: str
    radius: float
    seed: int | None = None
    recipe: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float).reshape(-1, self.dim)
        if f.shape[0] == 0:
            raise ValueError("frequency set is empty")
        if self.scheme not in ("lattice", "dyadic-annulus-MC", "sphere-quadrature", "composite"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if np.any(np.asarray(self.strata) >= 0) and self.seed is None:
            raise ValueError("stochastic frequency sets must record a seed")
        for name, a in (("frequencies", f), ("weights", np.asarray(self.weights, float)),
                        ("strata", np.asarray(self.strata, int))):
            a = np.array(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.frequencies.shape[0]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.frequencies, axis=1)

    # -- constructors -------------------------------------------------------

    @classmethod
    def lattice(cls, dim: int, radius: float, spacing: float = 0.25) -> "FrequencySet":
        """Cell-centred lattice ``spacing (Z + 1/2)^d`` inside the ball."""
        m = int(np.ceil(radius / spacing))
        ax = spacing * (np.arange(-m, m) + 0.5)
        g = np.stack(np.meshgrid(*([ax] * dim), indexing="ij"), -1).reshape(-1, dim)
        g = g[np.linalg.norm(g, axis=1) <= radius]
        return cls(dim, g, np.full(len(g), spacing**dim), np.full(len(g), -1), "lattice",
                   radius, None, ("lattice", dim, radius, spacing))

    @classmethod
    def polar(cls, dim: int, radius: float, n_dirs: int = 128, panel_width: float = 0.25,
              order: int = 8, r_min: float = 0.0) -> "FrequencySet":
        """Tensor quadrature: Gauss-Legendre panels in r times equal-weight directions."""
        r, wr = radial_nodes(r_min, radius, panel_width, order)
        u = sphere_directions(dim, n_dirs)
        xi = (r[:, None, None] * u[None]).reshape(-1, dim)
        w = (wr * r ** (dim - 1))[:, None] * np.full(n_dirs, sphere_area(dim) / n_dirs)
        return cls(dim, xi, w.reshape(-1), np.full(len(xi), -1), "sphere-quadrature", radius,
                   None, ("polar", dim, radius, n_dirs, panel_width, order, r_min))

    @classmethod
    def annuli(cls, dim: int, r_inner: float, radius: float, n_per_annulus: int = 4096,
               seed: int = 0) -> "FrequencySet":
        """Stratified Monte Carlo on the dyadic annuli between ``r_inner`` and ``radius``.

        In d <= 3 each annulus is cut into equal-volume polar cells with one
        jittered sample per cell; in higher dimension samples are i.i.d.
        """
        rng = as_rng(seed)
        edges = [r_inner] if r_inner > 0 else [0.0, min(1.0, radius)]
        while edges[-1] < radius * (1 - 1e-12):
            edges.append(min(2 * edges[-1], radius))
        xs, ws, ss = [], [], []
        for j, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            n = n_per_annulus
            if dim <= 3:
                m = max(1, int(round(n ** (1 / dim))))
                n = m**dim
                cells = np.stack(np.meshgrid(*([np.arange(m)] * dim), indexing="ij"), -1).reshape(-1, dim)
                v = (cells + rng.uniform(size=(n, dim))) / m
            else:
                v = rng.uniform(size=(n, dim))
            r = (a**dim + v[:, 0] * (b**dim - a**dim)) ** (1 / dim)
            if dim == 1:
                u = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)[:, None]
            elif dim == 2:
                th = 2 * pi * v[:, 1]
                u = np.stack([np.cos(th), np.sin(th)], 1)
            elif dim == 3:
                z = 2 * v[:, 1] - 1
                ph = 2 * pi * v[:, 2]
                s = np.sqrt(1 - z**2)
                u = np.stack([s * np.cos(ph), s * np.sin(ph), z], 1)
            else:
                u = rng.standard_normal((n, dim))
                u /= np.linalg.norm(u, axis=1, keepdims=True)
            xs.append(r[:, None] * u)
            ws.append(np.full(n, (ball_volume(dim, b) - ball_volume(dim, a)) / n))
            ss.append(np.full(n, j))
        return cls(dim, np.concatenate(xs), np.concatenate(ws), np.concatenate(ss),
                   "dyadic-annulus-MC", radius, int(seed),
                   ("annuli", dim, r_inner, radius, n_per_annulus, int(seed)))

    @classmethod
    def default(cls, dim: int, radius: float, seed: int = 0, inner: float = 16.0,
                spacing: float = 0.25, n_per_annulus: int = 4096) -> "FrequencySet":
        """Lattice inside ``|xi| <= inner`` (or the whole ball) plus dyadic-annulus
        Monte Carlo beyond it."""
        if radius <= inner:
            return cls.lattice(dim, radius, spacing)
        return cls.concat(cls.lattice(dim, inner, spacing),
                          cls.annuli(dim, inner, radius, n_per_annulus, seed))

    @classmethod
    def ball(cls, dim: int, radius: float, n_per_annulus: int = 4096, seed: int = 0) -> "FrequencySet":
        """Monte Carlo over the whole ball: the unit ball plus dyadic annuli."""
        return cls.annuli(dim, 0.0, radius, n_per_annulus, seed)

    @classmethod
    def concat(cls, a: "FrequencySet", b: "FrequencySet") -> "FrequencySet":
        if a.dim != b.dim:
            raise ValueError("dimension mismatch")
        shift = a.strata.max() + 1 if np.any(a.strata >= 0) else 0
        sb = np.where(b.strata >= 0, b.strata + shift, -1)
        seed = b.seed if b.seed is not None else a.seed
        return cls(a.dim, np.concatenate([a.frequencies, b.frequencies]),
                   np.concatenate([a.weights, b.weights]), np.concatenate([a.strata, sb]),
                   "composite", max(a.radius, b.radius), seed, ("concat", a.recipe, b.recipe))

    @classmethod
    def from_recipe(cls, recipe) -> "FrequencySet":
        kind, *args = recipe
        if kind == "concat":
            return cls.concat(cls.from_recipe(args[0]), cls.from_recipe(args[1]))
        return {"lattice": cls.lattice, "polar": cls.polar, "annuli": cls.annuli}[kind](*args)

    # -- integration --------------------------------------------------------

    def integrate(self, values, mask=None) -> Estimate:
        """``int f`` from values at the nodes, with a stratified standard error."""
        f = np.asarray(values, dtype=float)
        if mask is not None:
            f = np.where(mask, f, 0.0)
        wf = self.weights * f
        det = self.strata < 0
        total = float(wf[det].sum())
        var = 0.0
        for s in np.unique(self.strata[~det]):
            sel = self.strata == s
            x = wf[sel]
            total += float(x.sum())
            if x.size > 1:
                var += float(x.size * np.var(x, ddof=1))
        return Estimate(total, float(np.sqrt(var)))


def radial_nodes(r_min: float, r_max: float, panel_width: float, order: int):
    """Gauss-Legendre nodes on fixed-width panels anchored at 0, clipped to
    ``[r_min, r_max]``; a panel grid independent of ``r_max`` keeps truncated
    integrals of nonnegative integrands monotone."""
    x, w = leggauss(order)
    edges = np.arange(np.floor(r_min / panel_width), np.ceil(r_max / panel_width) + 1) * panel_width
    edges = np.clip(edges, r_min, r_max)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    r = (0.5 * (b - a))[:, None] * x + (0.5 * (a + b))[:, None]
    wr = (0.5 * (b - a))[:, None] * w
    return r.reshape(-1), wr.reshape(-1)


# ---------------------------------------------------------------------------
# Energies and slopes


def annulus_energy(mu, R: float, sampler: FrequencySet | None = None, seed: int = 0,
                   mollifier: Mollifier | None = None) -> Estimate:
    """``int_{|xi| <= R} |mu_hat(xi)|^2 d xi`` with a standard error.

    Nodes of a larger sampler outside the ball are masked out.
    """
    if sampler is None:
        sampler = FrequencySet.default(mu.dim, R, seed)
    if sampler.radius < R * (1 - 1e-12):
        raise PreconditionError(f"sampler radius {sampler.radius} does not cover R={R}")
    mask = sampler.norms <= R * (1 + 1e-12)
    vals = np.zeros(len(sampler))
    vals[mask] = power(mu, sampler.frequencies[mask], mollifier)
    return sampler.integrate(vals, mask)


def decay_slope(samples) -> float:
    """Log-log least-squares slope of ``(R, value)`` pairs."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2:
        raise ValueError("samples must be (R, value) pairs")
    if s.shape[0] < 4:
        raise PreconditionError("need at least 4 sample points")
    if np.any(s[:, 1] <= 0) or np.any(s[:, 0] <= 0):
        raise PreconditionError("decay_slope needs positive radii and values")
    if len(np.unique(s[:, 0])) != s.shape[0]:
        raise PreconditionError("radii must be distinct")
    return loglog_slope(s[:, 0], s[:, 1])


def classic_mattila_integral(mu, r_max: float, n_radii: int = 32, n_dirs: int = 128,
                             mollifier: Mollifier | None = None, order: int = 8) -> Estimate:
    """Truncated ``int_0^{r_max} (int_S |mu_hat(r w)|^2 dw)^2 r^{d-1} dr``.

    ``dw`` is unnormalized surface measure. ``n_radii`` is the number of
    radial Gauss-Legendre nodes per unit length; panels are anchored at 0.
    With a mollifier both transform factors carry ``phi_hat(eps xi)``.
    The error bar is the change from halving the direction count.
    """
    if mu.dim not in (2, 3):
        raise PreconditionError(f"classic Mattila integral needs d in {{2, 3}}, got {mu.dim}")
    d = mu.dim
    r, wr = radial_nodes(0.0, r_max, order / n_radii, order)
    S = sphere_area(d)
    raw = _radial_profile(mu, r, n_dirs, mollifier)
    full = S * raw.mean(axis=1)
    if d == 2:
        half = S * raw[:, ::2].mean(axis=1)
    else:
        half = S * _radial_profile(mu, r, n_dirs // 2, mollifier).mean(axis=1)
    wgt = wr * r ** (d - 1)
    val = float(np.sum(wgt * full**2))
    return Estimate(val, float(abs(val - np.sum(wgt * half**2))))
