"""Both sides of the group-correlation identity, the polar/group Mattila
comparison, and the SL2 decay and oscillatory-probe experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, pi
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.ndimage import map_coordinates
from scipy.spatial import cKDTree
from scipy.special import j0

from .common import DegenerateMeasureError, Estimate, PreconditionError, stage_seed
from .configmaps import (ConfigMap, dot_sum_to_signed_area, l2_density_norm, orbit_weighted_l2,
                         perp, pushforward)
from .fourier import (FrequencySet, fourier_transform, power, radial_nodes, sphere_area,
                      sphere_directions)
from .groups import (ChartCutoff, GroupWindow, HaarSample, haar_quadrature, haar_sample,
                     sl2_cutoff, sl2_matrix)
from .measures import GridDensity, Mollifier, PointMassMeasure, convolve, mollify, product_measure

DEFAULT_LADDER = (2.0**-4, 2.0**-5, 2.0**-6)


# ---------------------------------------------------------------------------
# Spatial group-correlation integral


def mollified_l2_sq(mu: PointMassMeasure, m: Mollifier, chunk: int = 1 << 22) -> float:
    """``||mu * phi^eps||_2^2`` from the closed-form bump overlap."""
    n = mu.n_atoms
    step = max(1, chunk // n)
    total = 0.0
    for s in range(0, n, step):
        diff = mu.points[s:s + step, None, :] - mu.points[None, :, :]
        total += float(mu.weights[s:s + step] @ (m.overlap(diff) @ mu.weights))
    return total


def _self_correlation(rho: GridDensity, mats: np.ndarray, batch_nodes: int = 1 << 22) -> np.ndarray:
    """``int rho(x) rho(g x) dx`` for each matrix in a stack (Riemann sum,
    multilinear interpolation of the moved density)."""
    nodes, vals = rho.nonzero_nodes()
    out = np.empty(mats.shape[0])
    B = max(1, batch_nodes // nodes.shape[0])
    for s in range(0, mats.shape[0], B):
        g = mats[s:s + B]
        moved = np.einsum("bij,nj->bni", g, nodes).reshape(-1, rho.dim)
        f = rho.evaluate(moved).reshape(g.shape[0], -1)
        out[s:s + B] = rho.cell_volume * (f @ vals)
    return out


def exact_density(mu: PointMassMeasure, m: Mollifier, y: np.ndarray) -> np.ndarray:
    """``(mu * phi^eps)(y)`` summed over the atoms whose bump box contains ``y``."""
    tree = cKDTree(mu.points)
    hits = tree.query_ball_point(y, r=m.half_width, p=np.inf)
    lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
    if lens.sum() == 0:
        return np.zeros(y.shape[0])
    q = np.repeat(np.arange(y.shape[0]), lens)
    a = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits if h])
    vals = mu.weights[a] * m.density(y[q] - mu.points[a])
    return np.bincount(q, weights=vals, minlength=y.shape[0])


def rhs_group_correlation(measures: Sequence[PointMassMeasure], mollifier: Mollifier,
                          window: GroupWindow, n_group: int = 20_000, grid_spacing: float | None = None,
                          seed=0, quadrature: str = "mc") -> Estimate:
    """``int_G prod_j int mu_j^eps(x) mu_j^eps(g x) dx d lambda(g)``.

    The trivial group uses the analytic overlap of the bump and involves no
    sampling or grids. Otherwise each factor is a Riemann sum over the
    mollified grid density (spacing ``eps/4`` by default) and the group
    integral is a Haar Monte Carlo average (``quadrature='mc'``) or, for
    O(2), an equally spaced angle rule (``quadrature='deterministic'``).
    The grid path carries an O(h/eps) bias from interpolating the moved
    density. ``quadrature='exact-mc'`` is unbiased: each Haar draw is paired
    with one draw ``X`` from every ``mu_j^eps`` and the moved density
    ``mu_j^eps(g X)`` is evaluated exactly (slower, higher variance).
    """
    measures = list(measures)
    if any(m.dim != window.dim for m in measures):
        raise ValueError("measure dims do not match the group action")
    if mollifier.dim != window.dim:
        raise ValueError("mollifier dim does not match the group action")
    if window.kind == "trivial":
        return Estimate(float(np.prod([mollified_l2_sq(m, mollifier) for m in measures])), 0.0,
                        ("analytic",))
    if quadrature == "exact-mc":
        rng = np.random.default_rng(seed)
        s = haar_sample(window, n_group, rng)
        vals = s.weights.copy()
        for mu in measures:
            k = rng.choice(mu.n_atoms, size=n_group, p=mu.weights)
            x = mu.points[k] + mollifier.sample(n_group, rng)
            vals *= exact_density(mu, mollifier, np.einsum("gij,gj->gi", s.matrices, x))
        return Estimate(float(vals.sum()), float(np.sqrt(n_group * np.var(vals, ddof=1))),
                        ("exact-monte-carlo",))
    if window.dim > 3:
        raise PreconditionError("grid correlation supports dim <= 3")
    h = grid_spacing or mollifier.epsilon / 4
    grids = [mollify(m, mollifier, h) for m in measures]

    def run(sample: HaarSample) -> np.ndarray:
        vals = np.ones(len(sample))
        for g in grids:
            vals *= _self_correlation(g, sample.matrices)
        return sample.weights * vals

    if quadrature == "deterministic":
        wv = run(haar_quadrature(window, n_group))
        half = run(haar_quadrature(window, n_group // 2))
        val = float(wv.sum())
        return Estimate(val, abs(val - float(half.sum())), ("deterministic",))
    wv = run(haar_sample(window, n_group, seed))
    return Estimate(float(wv.sum()), float(np.sqrt(n_group * np.var(wv, ddof=1))), ("monte-carlo",))


# ---------------------------------------------------------------------------
# Fourier form


def _orthogonal_inner(mu, radii: np.ndarray, n_dirs: int, mollifier=None, chunk: int = 1 << 21):
    """Normalized direction averages of ``|mu_hat|^2`` (and of the damped
    power) at each radius."""
    u = sphere_directions(mu.dim, n_dirs, None if mu.dim == 2 else 12345)
    plain = np.empty(radii.size)
    damped = np.empty(radii.size)
    step = max(1, chunk // (n_dirs * max(1, getattr(mu, "n_atoms", 1))))
    for s in range(0, radii.size, step):
        r = radii[s:s + step]
        xi = (r[:, None, None] * u[None]).reshape(-1, mu.dim)
        p = power(mu, xi).reshape(r.size, n_dirs)
        plain[s:s + step] = p.mean(axis=1)
        if mollifier is not None:
            damped[s:s + step] = (p * mollifier.ft(xi).reshape(r.size, n_dirs) ** 2).mean(axis=1)
    return plain, (damped if mollifier is not None else plain)


def _radial_inner(mu, r: np.ndarray, n_dirs: int, mollifier=None, exact: bool = False):
    """Direction average of the (optionally damped) power at radii ``r``.

    For point masses the profile is band-limited in ``r`` (bandwidth at most
    the diameter, plus ``2 eps sqrt(d)`` with damping), so it is sampled at
    an eighth of the band period and interpolated by a quintic spline.
    """
    if exact or not isinstance(mu, PointMassMeasure):
        key, inv = np.unique(np.round(r, 12), return_inverse=True)
        plain, damped = _orthogonal_inner(mu, key, n_dirs, mollifier)
        return damped[inv.reshape(-1)]
    band = mu.diameter_bound() + (2 * mollifier.epsilon * np.sqrt(mu.dim) if mollifier else 0.0)
    step = 1.0 / (8 * max(band, 1e-3))
    grid = np.arange(0.0, r.max() + 6 * step, step)
    if grid.size >= np.unique(np.round(r, 12)).size:
        return _radial_inner(mu, r, n_dirs, mollifier, exact=True)
    _, damped = _orthogonal_inner(mu, grid, n_dirs, mollifier)
    return make_interp_spline(grid, damped, k=5)(r)


def _group_inner(mu, freqs: np.ndarray, sample: HaarSample, mollifier=None, damped=False,
                 chunk: int = 1 << 20) -> np.ndarray:
    """``sum_g w_g |mu_hat(g xi)|^2`` for each frequency."""
    n_g = len(sample)
    out = np.empty(freqs.shape[0])
    step = max(1, chunk // n_g)
    for s in range(0, freqs.shape[0], step):
        xi = freqs[s:s + step]
        moved = np.einsum("gij,nj->ngi", sample.matrices, xi).reshape(-1, mu.dim)
        if sample.seed is None:
            # deterministic rules map lattice-aligned nodes onto shared frequencies
            r = np.ascontiguousarray(np.round(moved, 11) + 0.0)
            _, first, inv = np.unique(r.view(np.dtype((np.void, r.itemsize * mu.dim))).ravel(),
                                      return_index=True, return_inverse=True)
            p = power(mu, moved[first], mollifier if damped else None)[inv.reshape(-1)]
        else:
            p = power(mu, moved, mollifier if damped else None)
        p = p.reshape(xi.shape[0], n_g)
        out[s:s + step] = p @ sample.weights
    return out


def corollary_energy(mu, window: GroupWindow, mollifier: Mollifier | None = None,
                     sampler: FrequencySet | None = None, damping: str | None = "outer",
                     n_group: int = 256, n_dirs: int = 256, seed=0,
                     inner: str = "auto") -> Estimate:
    """``int |mu_hat(xi)|^2 (int_G |mu_hat(g xi)|^2 d lambda(g)) d xi``.

    ``damping``: ``'outer'`` multiplies the outer factor by ``phi_hat(eps xi)^2``;
    ``'both'`` damps inner and outer transforms (the transform of
    ``mu * phi^eps`` in both places); ``None`` applies no damping.
    For orthogonal windows the inner integral is a function of ``|xi|``: it
    is interpolated from a uniform radial grid (``inner='radial'``) or
    evaluated at every distinct radius (``inner='radial-exact'``); otherwise
    a shared Haar sample of size ``n_group`` is used.

    The flag ``volume-dominated`` is raised when more than half of the value
    comes from the outer half-radius shell of the sampler.
    """
    if damping not in (None, "outer", "both"):
        raise ValueError("damping must be None, 'outer' or 'both'")
    if damping is not None and mollifier is None:
        raise PreconditionError("damping requires a mollifier")
    if window.dim != mu.dim:
        raise ValueError("window and measure dims differ")
    if sampler is None:
        R = 16.0 / mollifier.epsilon if mollifier is not None else 64.0
        sampler = FrequencySet.default(mu.dim, R, seed=stage_seed(seed, 0))
    xi = sampler.frequencies
    outer = power(mu, xi, mollifier if damping is not None else None)
    mode = inner
    if mode == "auto":
        mode = "radial" if window.kind in ("orthogonal2", "orthogonal3") else "group"
    if window.kind == "trivial":
        inner_vals = power(mu, xi, mollifier if damping == "both" else None)
    elif mode in ("radial", "radial-exact"):
        if window.kind not in ("orthogonal2", "orthogonal3"):
            raise PreconditionError("radial inner reduction needs an orthogonal window")
        inner_vals = _radial_inner(mu, sampler.norms, n_dirs,
                                   mollifier if damping == "both" else None,
                                   exact=mode == "radial-exact")
    else:
        if window.kind == "orthogonal2" and mode == "quadrature":
            sample = haar_quadrature(window, n_group)
        else:
            sample = haar_sample(window, n_group, stage_seed(seed, 1))
        inner_vals = _group_inner(mu, xi, sample, mollifier, damping == "both")
    vals = outer * inner_vals
    est = sampler.integrate(vals)
    shell = sampler.integrate(vals, sampler.norms > sampler.radius / 2).value
    flags = ("volume-dominated",) if est.value > 0 and shell > 0.5 * est.value else ()
    return Estimate(est.value, est.stderr, flags)


class PolarGroupComparison(NamedTuple):
    polar: float
    group: float
    ratio: float


def polar_mattila_compare(mu, mollifier: Mollifier | None = None, r_max: float = 32.0,
                          n_dirs: int = 512, n_group: int = 512, panel_width: float = 0.25,
                          order: int = 8, seed=0) -> PolarGroupComparison:
    """Polar Mattila integral against the O(d)-group form on shared nodes.

    Both sides use the same radial Gauss-Legendre nodes and direction set.
    The polar side squares the unnormalized spherical integral; the group
    side pairs each outer node with an inner O(d) Haar integral (an offset
    equal-angle rule over both components of O(2), or Haar draws from O(3)).
    With a mollifier both transforms are damped.
    """
    d = mu.dim
    if d not in (2, 3):
        raise PreconditionError("polar comparison needs d in {2, 3}")
    sampler = FrequencySet.polar(d, r_max, n_dirs, panel_width, order)
    r, wr = radial_nodes(0.0, r_max, panel_width, order)
    p = power(mu, sampler.frequencies, mollifier).reshape(r.size, n_dirs)
    S = sphere_area(d)
    polar = float(np.sum(wr * r ** (d - 1) * (S * p.mean(axis=1)) ** 2))
    window = GroupWindow.orthogonal(d)
    if d == 2:
        sample = haar_quadrature(window, n_group, offset=0.5)
    else:
        sample = haar_sample(window, n_group, seed)
    inner = _group_inner(mu, sampler.frequencies, sample, mollifier, damped=mollifier is not None)
    group = float(sampler.integrate(p.reshape(-1) * inner).value)
    return PolarGroupComparison(polar, group, polar / group)


# ---------------------------------------------------------------------------
# Identity verification


@dataclass(frozen=True, eq=False)
class MattilaReport:
    map: str
    epsilon: float
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    window: str
    mollifier: str
    rhs_form: str
    seed: int
    flags: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lhs_stderr < 0 or self.rhs_stderr < 0:
            raise ValueError("error bars must be nonnegative")

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("nan")

    def to_dict(self) -> dict:
        return {"map": self.map, "epsilon": self.epsilon, "lhs": self.lhs,
                "lhs_stderr": self.lhs_stderr, "rhs": self.rhs, "rhs_stderr": self.rhs_stderr,
                "ratio": self.ratio, "window": self.window, "mollifier": self.mollifier,
                "rhs_form": self.rhs_form, "seed": self.seed, "flags": list(self.flags),
                "diagnostics": dict(self.diagnostics)}


def ratio_spread(reports: Sequence[MattilaReport]) -> float:
    """max/min of the lhs/rhs ratios."""
    r = np.array([rep.ratio for rep in reports])
    return float(r.max() / r.min())


def _l2_stderr(h) -> float:
    m = h.masses
    var = 4 * (np.sum(m**3) - np.sum(m**2) ** 2) / h.n_samples
    return float(np.sqrt(max(var, 0.0)) / h.bin_width)


def default_window(cmap: ConfigMap) -> GroupWindow:
    if cmap.kind == "distance":
        return GroupWindow.orthogonal(cmap.d)
    if cmap.kind == "product-of-distances":
        return GroupWindow.dilation_block(cmap.k, cmap.d)
    return GroupWindow.sl2()


def verify_identity(cmap: ConfigMap, measures, window: GroupWindow | None = None,
                    epsilons=DEFAULT_LADDER, seed: int = 0, n_pairs: int = 1_000_000,
                    n_group: int | None = None, sampler_radius: float | None = None,
                    orbit_diagnostics: bool = True) -> list[MattilaReport]:
    """One report per scale comparing ``||nu^eps||^2`` with the group integral.

    distance and product-of-distances use the Fourier form (a single measure
    in every slot); signed-area and dot-sum use the spatial SL2 form, with
    dot-sum rewritten as signed area against ``y' + z'``. Stochastic stages
    reuse the same seeds at every scale.
    """
    if isinstance(measures, PointMassMeasure):
        measures = [measures]
    measures = list(measures)
    window = window or default_window(cmap)
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise PreconditionError("epsilon ladder must be strictly decreasing")
    lhs_seed, rhs_seed = stage_seed(seed, 1), stage_seed(seed, 2)
    slots = measures if len(measures) == cmap.arity else [measures[0]] * cmap.arity
    degenerate = any(m.n_atoms < 2 for m in measures)
    reports = []
    for e in eps:
        m_lhs = Mollifier(cmap.d, e)
        flags: list[str] = ["degenerate-measure"] if degenerate else []
        diag: dict = {}
        orbit = orbit_diagnostics and cmap.kind == "distance"
        h = pushforward(cmap, slots, m_lhs, lhs_seed, n_pairs)
        lhs, lhs_se = l2_density_norm(h), _l2_stderr(h)
        flags += list(h.flags)
        if cmap.kind in ("distance", "product-of-distances"):
            if len(set(map(id, slots))) != 1:
                raise PreconditionError("the Fourier form needs the same measure in every slot")
            mu = slots[0] if cmap.kind == "distance" or cmap.k == 1 \
                    else product_measure(*([slots[0]] * cmap.k))
            m_rhs = Mollifier(mu.dim, e)
            R = sampler_radius or 16.0 / e
            sampler = FrequencySet.default(mu.dim, R, seed=stage_seed(rhs_seed, 0)) if mu.dim <= 3 \
                else FrequencySet.ball(mu.dim, R, seed=stage_seed(rhs_seed, 0))
            ng = n_group or 256
            rhs = corollary_energy(mu, window, m_rhs, sampler, "outer", ng, seed=rhs_seed)
            form = "fourier (outer damping)"
            if orbit:
                both = corollary_energy(mu, window, m_rhs, sampler, "both", ng, seed=rhs_seed)
                # finer bins remove the piecewise-constant bias near t = 0
                hf = pushforward(cmap, slots, m_lhs, lhs_seed, n_pairs, bin_width=e / 4,
                                 orbit_weight=True)
                lo = orbit_weighted_l2(hf)
                diag.update(orbit_lhs=lo, rhs_both_damped=both.value,
                            rhs_both_damped_stderr=both.stderr,
                            orbit_ratio=lo / both.value if both.value > 0 else float("nan"))
        else:
            if cmap.kind == "dot-sum":
                if len(slots) != 3 or cmap.d != 2:
                    raise PreconditionError("dot-sum identity needs planar E, F, H")
                E, F, H = slots
                sa = [E, convolve(dot_sum_to_signed_area(F), dot_sum_to_signed_area(H))]
            else:
                sa = slots
            rhs = rhs_group_correlation(sa, Mollifier(2, e), window, n_group or 20_000,
                                        seed=rhs_seed)
            form = "spatial"
        flags += list(rhs.flags)
        reports.append(MattilaReport(cmap.describe(), e, lhs, lhs_se, rhs.value, rhs.stderr,
                                     window.describe(), m_lhs.profile, form, seed,
                                     tuple(flags), diag))
    return reports


# ---------------------------------------------------------------------------
# SL2 decay and oscillatory probes


class DecayReport(NamedTuple):
    slope: float
    radii: np.ndarray
    values: np.ndarray
    stderr: np.ndarray


def sl2_average_decay(mu, window: GroupWindow | None = None, radii=(8, 16, 32, 64),
                      n: int = 20_000, seed=0, direction=(0.6, 0.8),
                      cutoff: ChartCutoff | None = None) -> DecayReport:
    """Slope of ``int |mu_hat(g xi)|^2 psi(g) d lambda(g)`` against ``|xi|``.

    ``xi = R * direction`` over a dyadic ladder; one Haar sample is shared by
    all rungs.
    """
    window = window or GroupWindow.sl2()
    if window.kind != "sl2":
        raise PreconditionError("sl2_average_decay needs an sl2 window")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4 or not np.allclose(np.diff(np.log2(radii)), 1):
        raise PreconditionError("radii must be a dyadic ladder with at least 4 rungs")
    cutoff = cutoff or sl2_cutoff(window.C)
    s = haar_sample(window, n, seed)
    w = s.weights * cutoff(s.params)
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    gu = s.matrices @ u
    vals, errs = [], []
    for R in radii:
        x = w * power(mu, R * gu)
        vals.append(float(x.sum()))
        errs.append(float(np.sqrt(n * np.var(x, ddof=1))))
    vals = np.array(vals)
    if np.all(vals > 0):
        slope = float(np.polyfit(np.log(radii), np.log(vals), 1)[0])
    else:
        slope = float("nan")
    return DecayReport(slope, radii, vals, np.array(errs))


def _cx(v) -> complex:
    return complex(v[0], v[1])


def _check_band(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    for name, val in (("|x|", np.linalg.norm(x)), ("|y|", np.linalg.norm(y)),
                      ("|x.y_perp|", abs(x @ perp(y)))):
        if not 0.5 <= val <= 2.0:
            raise PreconditionError(f"{name} = {val:.3g} outside [1/2, 2]")


def sl2_oscillatory_probe(x, y, xi, eta, window: GroupWindow | None = None,
                          cutoff: ChartCutoff | None = None, n: int | tuple = (800, 1200),
                          seed=0, method: str = "bessel") -> complex:
    """``int exp(-2 pi i (x . g xi + y . g eta)) psi(g) d lambda(g)``.

    ``method='bessel'`` integrates the rotation angle in closed form (a
    Bessel J0 of the combined amplitude, valid when ``psi`` ignores the
    angle) and uses a midpoint rule in ``(log a, b)``; ``'dense'`` is a
    3D midpoint rule in ``(theta, log a, b)``; ``'mc'`` averages over Haar
    draws.
    """
    window = window or GroupWindow.sl2()
    if window.kind != "sl2":
        raise PreconditionError("probe needs an sl2 window")
    _check_band(x, y)
    cutoff = cutoff or sl2_cutoff(window.C)
    x, y, xi, eta = (np.asarray(v, dtype=float) for v in (x, y, xi, eta))
    C = window.C
    if method == "mc":
        s = haar_sample(window, int(np.prod(n)), seed)
        ph = (s.matrices @ xi) @ x + (s.matrices @ eta) @ y
        return complex(np.sum(s.weights * cutoff(s.params) * np.exp(-2j * pi * ph)))
    if isinstance(n, int):
        n = (n, n) if method == "bessel" else (n, n, n)
    if method == "bessel":
        if any(i == 0 for i, _, _ in cutoff.box):
            raise PreconditionError("bessel reduction needs an angle-independent cutoff")
        na, nb = n
        la = np.log(C)
        sa = -la + 2 * la * (np.arange(na) + 0.5) / na
        bb = -C + 2 * C * (np.arange(nb) + 0.5) / nb
        A, Bm = np.meshgrid(np.exp(sa), bb, indexing="ij")
        if window.chart == "KP":
            pxi = (A * xi[0] + Bm * xi[1], xi[1] / A)
            peta = (A * eta[0] + Bm * eta[1], eta[1] / A)
            dens = A  # da = a ds
        else:
            pxi = (A * xi[0], Bm * xi[0] + xi[1] / A)
            peta = (A * eta[0], Bm * eta[0] + eta[1] / A)
            dens = 1 / A  # a^-2 da = a^-1 ds
        Z = np.conj(_cx(x)) * (pxi[0] + 1j * pxi[1]) + np.conj(_cx(y)) * (peta[0] + 1j * peta[1])
        psi = cutoff(np.stack([np.zeros(A.size), A.ravel(), Bm.ravel()], 1)).reshape(A.shape)
        cell = (2 * la / na) * (2 * C / nb)
        return complex(np.sum(j0(2 * pi * np.abs(Z)) * psi * dens) * cell)
    if method == "dense":
        nt, na, nb = n
        la = np.log(C)
        th = 2 * pi * (np.arange(nt) + 0.5) / nt
        sa = -la + 2 * la * (np.arange(na) + 0.5) / na
        bb = -C + 2 * C * (np.arange(nb) + 0.5) / nb
        total = 0j
        A, Bm = np.meshgrid(np.exp(sa), bb, indexing="ij")
        a, b = A.ravel(), Bm.ravel()
        psi = cutoff(np.stack([np.zeros(a.size), a, b], 1))
        dens = a if window.chart == "KP" else 1 / a
        for t in th:
            g = sl2_matrix(np.full(a.size, t), a, b, window.chart)
            ph = (g @ xi) @ x + (g @ eta) @ y
            total += np.sum(np.exp(-2j * pi * ph) * psi * dens)
        return complex(total * (1 / nt) * (2 * la / na) * (2 * C / nb))
    raise ValueError(f"unknown method {method!r}")


def probe_pairs(n_pairs: int, seed=0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random ``(x, y)`` with ``|x|, |y| in [0.8, 1.25]`` and an angle gap in
    ``[pi/3, 2 pi/3]``, so all three band conditions hold."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_pairs):
        r1, r2 = rng.uniform(0.8, 1.25, 2)
        a = rng.uniform(0, 2 * pi)
        b = a + rng.choice([-1, 1]) * rng.uniform(pi / 3, 2 * pi / 3)
        out.append((r1 * np.array([np.cos(a), np.sin(a)]), r2 * np.array([np.cos(b), np.sin(b)])))
    return out


def critical_frequencies(x, y, t: float):
    """Frequencies with a critical point of the phase at the identity:
    ``xi = -t y^perp``, ``eta = t x^perp``."""
    return -t * perp(y), t * perp(x)


def off_critical_frequencies(t: float, angle: float = 0.0):
    """``xi = t e``, ``eta = e_perp / 4`` rotated by ``angle``; then
    ``|xi . eta^perp| = t/4``, far below ``|xi|^2 / 8`` for ``t >= 4``."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ np.array([t, 0.0]), R @ np.array([0.0, 0.25])


def is_off_critical(xi, eta) -> bool:
    q = abs(np.asarray(xi) @ perp(eta))
    n2 = float(np.asarray(xi) @ np.asarray(xi))
    return not (n2 / 8 <= q <= 8 * n2)


class ProbeEnsemble(NamedTuple):
    regime: str
    ts: np.ndarray
    mean_power: np.ndarray
    power_slope: float
    amplitude_slope: float


def probe_ensemble(regime: str, ts=(8, 16, 32, 64), n_pairs: int = 32, seed=0,
                   window: GroupWindow | None = None, cutoff: ChartCutoff | None = None,
                   n=(800, 1200)) -> ProbeEnsemble:
    """Mean ``|probe|^2`` over random pairs along a dyadic ladder of ``t``.

    ``amplitude_slope`` is half the log-log slope of the mean power (the
    decay exponent of a root-mean-square probe amplitude).
    """
    if regime not in ("critical", "off-critical"):
        raise ValueError("regime must be 'critical' or 'off-critical'")
    ts = np.asarray(ts, dtype=float)
    pairs = probe_pairs(n_pairs, seed)
    angles = np.random.default_rng(stage_seed(seed, 1)).uniform(0, 2 * pi, n_pairs)
    pw = np.zeros(ts.size)
    for (x, y), ang in zip(pairs, angles):
        for i, t in enumerate(ts):
            if regime == "critical":
                xi, eta = critical_frequencies(x, y, t)
            else:
                xi, eta = off_critical_frequencies(t, ang)
            pw[i] += abs(sl2_oscillatory_probe(x, y, xi, eta, window, cutoff, n)) ** 2
    pw /= n_pairs
    slope = float(np.polyfit(np.log(ts), np.log(pw), 1)[0])
    return ProbeEnsemble(regime, ts, pw, slope, slope / 2)
