"""Configuration maps and histogram pushforwards of mollified product measures."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple, Sequence

import numpy as np

from .common import PreconditionError, as_rng
from .fourier import sphere_area
from .measures import Mollifier, PointMassMeasure

MAP_KINDS = ("distance", "product-of-distances", "signed-area", "dot-sum")
ENUMERATION_LIMIT = 10**6


def perp(v) -> np.ndarray:
    """``v^perp = (v_2, -v_1)``."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], -1)


@dataclass(frozen=True)
class ConfigMap:
    """A scalar configuration map on ``arity`` points of R^d.

    distance: ``|x - y|``; product-of-distances(k): ``prod_j |x^j - y^j|`` with
    slot order ``x^1, y^1, ..., x^k, y^k``; signed-area: ``x . y^perp``;
    dot-sum: ``x . (y + z)``.
    """

    kind: str
    d: int = 2
    k: int = 1

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be positive")
        if self.kind == "signed-area" and self.d != 2:
            raise ValueError("signed-area is defined on the plane")
        if self.kind != "product-of-distances" and self.k != 1:
            raise ValueError("k applies to product-of-distances only")

    @property
    def arity(self) -> int:
        return {"distance": 2, "product-of-distances": 2 * self.k,
                "signed-area": 2, "dot-sum": 3}[self.kind]

    @property
    def m(self) -> int:
        return 1

    @property
    def input_dim(self) -> int:
        return self.arity * self.d

    @property
    def domain_note(self) -> str:
        if self.kind == "signed-area":
            return "group orbits are unique only for x, y != 0"
        if self.kind == "dot-sum":
            return "SL2 invariance holds for the equivalent signed-area form x . (y' + z')^perp"
        return ""

    def describe(self) -> str:
        return f"{self.kind}(k={self.k})" if self.kind == "product-of-distances" else self.kind


def evaluate_phi(cmap: ConfigMap, points: Sequence) -> np.ndarray | float:
    """Evaluate the map on a tuple of points, each (d,) or a stack (n, d)."""
    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) != cmap.arity:
        raise ValueError(f"{cmap.describe()} takes {cmap.arity} points, got {len(pts)}")
    single = all(p.ndim == 1 for p in pts)
    pts = [np.atleast_2d(p) for p in pts]
    if any(p.shape[-1] != cmap.d for p in pts):
        raise ValueError(f"{cmap.describe()} expects points in R^{cmap.d}")
    if cmap.kind == "distance":
        v = np.linalg.norm(pts[0] - pts[1], axis=-1)
    elif cmap.kind == "product-of-distances":
        v = np.ones(max(p.shape[0] for p in pts))
        for j in range(cmap.k):
            v = v * np.linalg.norm(pts[2 * j] - pts[2 * j + 1], axis=-1)
    elif cmap.kind == "signed-area":
        x, y = pts
        v = x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]
    else:
        v = np.sum(pts[0] * (pts[1] + pts[2]), axis=-1)
    return float(v[0]) if single else v


def dot_sum_to_signed_area(m: PointMassMeasure) -> PointMassMeasure:
    """Image of a planar measure under ``y -> -y^perp``, so that
    ``x . (y + z) = x . (y' + z')^perp``."""
    if m.dim != 2:
        raise ValueError("needs a planar measure")
    return PointMassMeasure(-perp(m.points), m.weights)


def degeneracy_flags(cmap: ConfigMap, measures: Sequence[PointMassMeasure]) -> tuple[str, ...]:
    flags = []
    if cmap.kind in ("signed-area", "dot-sum"):
        for i, m in enumerate(measures[:2] if cmap.kind == "signed-area" else measures[:1]):
            if np.any(np.linalg.norm(m.points, axis=1) <= 1e-12):
                flags.append(f"degenerate-orbit:slot{i}")
    return tuple(flags)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PushforwardHistogram:
    """Bin masses of a pushforward on the lattice ``[j w, (j+1) w)``.

    ``orbit_masses`` (optional) are bin masses of the same samples weighted
    by the distance map's orbit factor ``1 / (|S^{d-1}| t^{d-1})``.
    """

    bin_width: float
    bins: np.ndarray
    masses: np.ndarray
    n_samples: int
    method: str
    seed: int | None = None
    flags: tuple[str, ...] = ()
    orbit_masses: np.ndarray | None = None

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        m = np.asarray(self.masses, dtype=float)
        if np.any(m < 0):
            raise ValueError("bin masses must be nonnegative")
        if abs(m.sum() - 1) > 1e-9:
            raise ValueError(f"histogram mass {m.sum()!r} is not 1")
        for name in ("bins", "masses", "orbit_masses"):
            a = getattr(self, name)
            if a is not None:
                a = np.array(a)
                a.setflags(write=False)
                object.__setattr__(self, name, a)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def lefts(self) -> np.ndarray:
        return self.bins * self.bin_width

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.bin_width

    def binomial_stderr(self) -> np.ndarray:
        return np.sqrt(self.masses * (1 - self.masses) / self.n_samples)

    def mass_at(self, bins) -> np.ndarray:
        """Masses for arbitrary bin indices (zero where empty)."""
        lut = dict(zip(self.bins.tolist(), self.masses.tolist()))
        return np.array([lut.get(int(b), 0.0) for b in np.ravel(bins)])

    def rows(self):
        for b, m in zip(self.lefts, self.masses):
            yield float(b), float(m), float(m / self.bin_width)


def _histogram(values, weights, bw, orbit=None):
    idx = np.floor(values / bw).astype(np.int64)
    lo = idx.min()
    counts = np.bincount(idx - lo, weights=weights)
    occ = np.nonzero(counts)[0]
    masses = counts[occ]
    om = None
    if orbit is not None:
        om = np.bincount(idx - lo, weights=weights * orbit, minlength=counts.size)[occ]
    return occ + lo, masses / masses.sum(), om


def _orbit_factor(cmap: ConfigMap, v: np.ndarray) -> np.ndarray:
    if cmap.kind != "distance":
        raise PreconditionError("orbit weighting is implemented for the distance map only")
    with np.errstate(divide="ignore"):
        return np.where(v > 0, 1 / (sphere_area(cmap.d) * v ** (cmap.d - 1)), 0.0)


def pushforward(cmap: ConfigMap, measures, mollifier: Mollifier | None, seed=0,
                n_pairs: int = 100_000, bin_width: float | None = None,
                enumeration_limit: int = ENUMERATION_LIMIT,
                orbit_weight: bool = False) -> PushforwardHistogram:
    """Histogram of ``Phi`` under the product of the mollified measures.

    When the product of atom counts is at most ``enumeration_limit`` every
    atom tuple is enumerated with its exact weight, and each tuple receives
    ``ceil(n_pairs / n_tuples)`` independent mollifier jitters. Otherwise
    ``n_pairs`` tuples are drawn i.i.d. by weight. Without a mollifier no
    jitter is applied and ``bin_width`` is required.
    """
    if isinstance(measures, PointMassMeasure):
        measures = [measures] * cmap.arity
    measures = list(measures)
    if len(measures) == 1:
        measures = measures * cmap.arity
    if len(measures) != cmap.arity:
        raise ValueError(f"{cmap.describe()} needs {cmap.arity} measures")
    if any(m.dim != cmap.d for m in measures):
        raise ValueError("measure dims do not match the map")
    if n_pairs < 1000:
        raise PreconditionError("n_pairs must be >= 1000")
    if bin_width is None:
        if mollifier is None:
            raise PreconditionError("bin_width is required without a mollifier")
        bin_width = mollifier.epsilon
    rng = as_rng(seed)
    counts = [m.n_atoms for m in measures]
    n_tuples = int(np.prod(counts, dtype=float))
    if n_tuples <= enumeration_limit:
        method = "enumeration"
        reps = 1 if mollifier is None else ceil(n_pairs / n_tuples)
        grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
        idx = [g.reshape(-1) for g in grids]
        w = np.ones(n_tuples)
        for m, i in zip(measures, idx):
            w = w * m.weights[i]
        idx = [np.tile(i, reps) for i in idx]
        w = np.tile(w, reps) / reps
    else:
        method = "monte-carlo"
        idx = [rng.choice(m.n_atoms, size=n_pairs, p=m.weights) for m in measures]
        w = np.full(n_pairs, 1.0 / n_pairs)
    pts = []
    for m, i in zip(measures, idx):
        x = m.points[i]
        if mollifier is not None:
            x = x + mollifier.sample(x.shape[0], rng)
        pts.append(x)
    v = evaluate_phi(cmap, pts)
    orbit = _orbit_factor(cmap, v) if orbit_weight else None
    bins, masses, om = _histogram(v, w, bin_width, orbit)
    return PushforwardHistogram(bin_width, bins, masses, len(v), method,
                                None if isinstance(seed, np.random.Generator) else seed,
                                degeneracy_flags(cmap, measures), om)


def l2_density_norm(h: PushforwardHistogram) -> float:
    """``sum_b mass_b^2 / w``: the squared L2 norm of the histogram density."""
    if abs(h.total_mass - 1) > 1e-9:
        raise PreconditionError("histogram must have unit mass")
    return float(np.sum(h.masses**2) / h.bin_width)


def orbit_weighted_l2(h: PushforwardHistogram) -> float:
    """``sum_b mass_b * orbit_mass_b / w``: the histogram estimate of
    ``int nu(t)^2 / (|S^{d-1}| t^{d-1}) dt`` for the distance map."""
    if h.orbit_masses is None:
        raise PreconditionError("histogram was built without orbit weights")
    return float(np.sum(h.masses * h.orbit_masses) / h.bin_width)


class SupportBound(NamedTuple):
    lower_bound: float
    occupied: float


def support_lower_bound(h: PushforwardHistogram, threshold: float = 0.0) -> SupportBound:
    """Cauchy-Schwarz bound ``|supp| >= 1 / ||density||^2`` and the length of
    bins with mass above ``threshold``."""
    lb = 1.0 / l2_density_norm(h)
    occ = float(np.count_nonzero(h.masses > threshold) * h.bin_width)
    return SupportBound(lb, occ)
