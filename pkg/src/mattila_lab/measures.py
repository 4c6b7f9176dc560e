"""Finite measures on R^d: point clouds, IFS generation, products,
convolutions, mollification onto grids, and Frostman exponent fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.spatial import cKDTree

from .common import CapacityError, DegenerateMeasureError, PreconditionError, as_rng

DEFAULT_ATOM_CAP = 2**22
MERGE_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise CapacityError(f"operation would create {count} atoms (cap {cap})")


@dataclass(frozen=True, eq=False)
class PointMassMeasure:
    """A probability measure ``sum_k w_k delta_{x_k}`` on R^dim.

    ``factors`` is set by :func:`product_measure`; when present the Fourier
    transform is evaluated factor by factor, which is much cheaper than
    summing over the materialized product atoms.
    """

    points: np.ndarray
    weights: np.ndarray
    factors: tuple["PointMassMeasure", ...] = ()
    bbox: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, dim) array")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("one weight per point required")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-12 * max(1.0, len(w) * 1e-4):
            raise ValueError(f"weights sum to {total!r}, not 1")
        if self.factors and sum(f.dim for f in self.factors) != pts.shape[1]:
            raise ValueError("factor dims do not add up to the measure dim")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(
            self, "bbox", (_frozen(pts.min(axis=0)), _frozen(pts.max(axis=0)))
        )

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    @classmethod
    def dirac(cls, point) -> "PointMassMeasure":
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, :], [1.0])

    @classmethod
    def uniform(cls, points) -> "PointMassMeasure":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    def translate(self, v) -> "PointMassMeasure":
        return PointMassMeasure(self.points + np.asarray(v, dtype=float), self.weights)

    def diameter_bound(self) -> float:
        """Diagonal of the bounding box (an upper bound on the diameter)."""
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    def resolution(self) -> float:
        """Smallest distance between distinct atoms (inf for a single atom)."""
        if self.n_atoms < 2:
            return float("inf")
        d, _ = cKDTree(self.points).query(self.points, k=2)
        nn = d[:, 1]
        nn = nn[nn > MERGE_TOL]
        return float(nn.min()) if nn.size else float("inf")

    def canonical(self) -> "PointMassMeasure":
        """Lexicographically sorted copy with coincident atoms merged."""
        pts, w = merge_atoms(self.points, self.weights)
        return PointMassMeasure(pts, w)


def merge_atoms(points: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge atoms whose coordinates agree within ``tol``; output is sorted."""
    keys = np.floor(points / tol + 0.5).astype(np.int64)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    n = uniq.shape[0]
    w = np.bincount(inv, weights=weights, minlength=n)
    counts = np.bincount(inv, minlength=n)
    pts = np.stack(
        [np.bincount(inv, weights=points[:, i], minlength=n) / counts for i in range(points.shape[1])],
        axis=1,
    )
    return pts, w / w.sum()


# ---------------------------------------------------------------------------
# Iterated function systems


@dataclass(frozen=True, eq=False)
class IFSMap:
    """Similarity ``x -> ratio * linear @ x + translation``."""

    ratio: float
    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(-1)
        if lin.ndim == 0:
            lin = lin.reshape(1, 1)
        if lin.shape != (t.size, t.size):
            raise ValueError("linear part must be a dim x dim matrix")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"contraction ratio {self.ratio} not in (0, 1)")
        if not np.allclose(lin.T @ lin, np.eye(t.size), atol=1e-12):
            raise ValueError("linear part must be orthogonal")
        object.__setattr__(self, "linear", _frozen(lin))
        object.__setattr__(self, "translation", _frozen(t))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.ratio * (x @ self.linear.T) + self.translation


@dataclass(frozen=True, eq=False)
class IFSSpec:
    dim: int
    maps: tuple[IFSMap, ...]
    probabilities: tuple[float, ...]
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if len(self.maps) == 0 or len(self.maps) != len(self.probabilities):
            raise ValueError("need one probability per map")
        if any(m.translation.size != self.dim for m in self.maps):
            raise ValueError("map dimension mismatch")
        if any(p <= 0 for p in self.probabilities):
            raise ValueError("probabilities must be positive")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")

    def with_depth(self, depth: int) -> "IFSSpec":
        return IFSSpec(self.dim, self.maps, self.probabilities, depth)


def middle_thirds(depth: int) -> IFSSpec:
    maps = (IFSMap(1 / 3, [[1.0]], [0.0]), IFSMap(1 / 3, [[1.0]], [2 / 3]))
    return IFSSpec(1, maps, (0.5, 0.5), depth)


def cantor_dust_spec(depth: int) -> IFSSpec:
    """Planar product of two middle-thirds sets as a 4-map IFS."""
    eye = np.eye(2)
    corners = [(0, 0), (2 / 3, 0), (0, 2 / 3), (2 / 3, 2 / 3)]
    maps = tuple(IFSMap(1 / 3, eye, c) for c in corners)
    return IFSSpec(2, maps, (0.25,) * 4, depth)


def ifs_generate(spec: IFSSpec, seed_point=None, cap: int = DEFAULT_ATOM_CAP) -> PointMassMeasure:
    """Depth-``spec.depth`` approximation of the self-similar measure.

    Atoms are all depth-fold compositions of the maps applied to
    ``seed_point`` (origin by default); weights are products of branch
    probabilities. Atoms are not merged.
    """
    _check_cap(len(spec.maps) ** spec.depth, cap)
    seed = np.zeros(spec.dim) if seed_point is None else np.asarray(seed_point, dtype=float)
    pts = seed.reshape(1, spec.dim)
    w = np.ones(1)
    probs = np.asarray(spec.probabilities)
    for _ in range(spec.depth):
        pts = np.concatenate([m(pts) for m in spec.maps])
        w = np.concatenate([p * w for p in probs])
    return PointMassMeasure(pts, w / w.sum())


def product_measure(a: PointMassMeasure, b: PointMassMeasure, *more: PointMassMeasure,
                    cap: int = DEFAULT_ATOM_CAP) -> PointMassMeasure:
    """Product measure on R^{dim_a + dim_b (+ ...)}; atoms are all tuples."""
    ms = (a, b, *more)
    _check_cap(int(np.prod([m.n_atoms for m in ms], dtype=float)), cap)
    pts, w = ms[0].points, ms[0].weights
    for m in ms[1:]:
        n1, n2 = pts.shape[0], m.n_atoms
        pts = np.concatenate(
            [np.repeat(pts, n2, axis=0), np.tile(m.points, (n1, 1))], axis=1
        )
        w = np.outer(w, m.weights).reshape(-1)
    factors = tuple(f for m in ms for f in (m.factors or (m,)))
    return PointMassMeasure(pts, w / w.sum(), factors=factors)


def convolve(a: PointMassMeasure, b: PointMassMeasure, cap: int = DEFAULT_ATOM_CAP,
             tol: float = MERGE_TOL) -> PointMassMeasure:
    """Convolution ``a * b``: atoms at all sums, coincident atoms merged."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    _check_cap(a.n_atoms * b.n_atoms, cap)
    pts = (a.points[:, None, :] + b.points[None, :, :]).reshape(-1, a.dim)
    w = np.outer(a.weights, b.weights).reshape(-1)
    pts, w = merge_atoms(pts, w, tol)
    return PointMassMeasure(pts, w)


# ---------------------------------------------------------------------------
# Mollifier and grid densities


def _irwin_hall4(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    for k in range(5):
        out += (-1) ** k * comb(4, k) * np.clip(u - k, 0.0, None) ** 3
    return np.clip(out / 6.0, 0.0, None)


@dataclass(frozen=True)
class Mollifier:
    """Tensor-power hat bump ``phi(x) = prod_i 2 max(0, 1 - 2|x_i|)`` at scale eps.

    ``phi`` is the order-2 B-spline of width 1 in each coordinate: unit mass,
    support ``[-1/2, 1/2]^dim`` (radius ``sqrt(dim)/2 <= 1`` for dim <= 4) and
    ``phi_hat(xi) = prod_i sinc(xi_i / 2)^2 >= 0``.
    """

    dim: int
    epsilon: float
    profile: str = "tensor-hat (order-2 B-spline, half-width 1/2)"

    def __post_init__(self):
        if self.dim < 1 or not self.epsilon > 0:
            raise ValueError("need dim >= 1 and epsilon > 0")

    @property
    def support_radius(self) -> float:
        """Euclidean support radius of the unscaled profile."""
        return 0.5 * np.sqrt(self.dim)

    @property
    def half_width(self) -> float:
        """Per-coordinate half-width of the scaled bump."""
        return 0.5 * self.epsilon

    def rescaled(self, epsilon: float) -> "Mollifier":
        return Mollifier(self.dim, epsilon, self.profile)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = self.epsilon
        return np.prod((2 / e) * np.clip(1 - np.abs(2 * x / e), 0, None), axis=-1)

    def ft(self, xi) -> np.ndarray:
        """``phi_hat(eps * xi)``."""
        xi = np.asarray(xi, dtype=float)
        return np.prod(np.sinc(self.epsilon * xi / 2) ** 2, axis=-1)

    def sample(self, n: int, rng) -> np.ndarray:
        """Draws from ``phi^eps``: each coordinate is a sum of two uniforms."""
        rng = as_rng(rng)
        q = self.epsilon / 4
        return rng.uniform(-q, q, (n, self.dim)) + rng.uniform(-q, q, (n, self.dim))

    def overlap(self, s) -> np.ndarray:
        """``int phi^eps(x) phi^eps(x + s) dx`` (a tensor cubic B-spline)."""
        s = np.asarray(s, dtype=float)
        q = self.epsilon / 4
        return np.prod(_irwin_hall4((s + 4 * q) / (2 * q)) / (2 * q), axis=-1)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nonnegative samples on the lattice ``origin + spacing * index``."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        o = np.array(self.origin, dtype=float).reshape(-1)
        if v.ndim != o.size:
            raise ValueError("origin length must equal values.ndim")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if np.any(v < 0):
            raise ValueError("grid density values must be nonnegative")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "origin", _frozen(o))

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def mass(self) -> float:
        return float(self.cell_volume * self.values.sum())

    def axes(self) -> list[np.ndarray]:
        return [self.origin[i] + self.spacing * np.arange(n) for i, n in enumerate(self.shape)]

    def l2_norm_sq(self) -> float:
        return float(self.cell_volume * np.sum(self.values**2))

    def nonzero_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates (n, dim) and values (n,) of the nonzero nodes."""
        idx = np.argwhere(self.values > 0)
        return self.origin + self.spacing * idx, self.values[tuple(idx.T)]

    def evaluate(self, points) -> np.ndarray:
        """Multilinear interpolation; zero outside the grid."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        coords = ((pts - self.origin) / self.spacing).T
        return map_coordinates(self.values, coords, order=1, mode="constant", cval=0.0)


def mollify(mu: PointMassMeasure, m: Mollifier, grid_spacing: float,
            chunk: int = 1 << 16) -> GridDensity:
    """Sample ``mu * phi^eps`` on a lattice anchored at 0.

    The grid covers the support of ``mu`` plus an ``eps`` margin. When the
    spacing divides the bump half-width ``eps/2`` the lattice sum of each hat
    is exactly one, so the mass is 1 to rounding; other spacings are accepted
    while the quadrature error stays within 1e-6.
    """
    if m.dim != mu.dim:
        raise ValueError("mollifier and measure dims differ")
    h = float(grid_spacing)
    eps = m.epsilon
    if not 0 < h <= eps / 2 * (1 + 1e-12):
        raise PreconditionError(f"grid spacing {h} must be <= eps/2 = {eps / 2}")
    lo, hi = mu.bbox
    start = np.floor((lo - eps) / h).astype(np.int64)
    stop = np.ceil((hi + eps) / h).astype(np.int64)
    shape = tuple((stop - start + 1).tolist())
    origin = start * h
    d = mu.dim
    L = int(np.ceil(eps / h)) + 2
    out = np.zeros(int(np.prod(shape)))
    strides = np.cumprod((1,) + shape[::-1][:-1])[::-1]
    offs = np.arange(L)
    for s in range(0, mu.n_atoms, chunk):
        x = mu.points[s:s + chunk]
        w = mu.weights[s:s + chunk]
        first = np.floor((x - eps / 2 - origin) / h).astype(np.int64)
        flat = np.zeros((x.shape[0],) + (1,) * d, dtype=np.int64)
        vals = w.reshape((-1,) + (1,) * d)
        for i in range(d):
            idx = first[:, i:i + 1] + offs
            node = origin[i] + h * idx
            wi = (2 / eps) * np.clip(1 - np.abs(2 * (node - x[:, i:i + 1]) / eps), 0, None)
            idx = np.clip(idx, 0, shape[i] - 1)
            bshape = [x.shape[0]] + [1] * d
            bshape[i + 1] = L
            vals = vals * wi.reshape(bshape)
            flat = flat + strides[i] * idx.reshape(bshape)
        flat, vals = np.broadcast_arrays(flat, vals)
        out += np.bincount(flat.reshape(-1), weights=vals.reshape(-1), minlength=out.size)
    grid = GridDensity(origin, h, out.reshape(shape))
    if abs(grid.mass - 1.0) > 1e-6:
        raise PreconditionError(
            f"grid quadrature mass {grid.mass:.3e} off by more than 1e-6; "
            "use a spacing that divides eps/2"
        )
    return grid


# ---------------------------------------------------------------------------
# Ball masses and Frostman fits


def ball_mass(mu: PointMassMeasure, center, r: float) -> float:
    """``mu(B(center, r))`` for the closed ball."""
    c = np.asarray(center, dtype=float).reshape(1, -1)
    dist = np.linalg.norm(mu.points - c, axis=1)
    return float(mu.weights[dist <= r * (1 + 1e-12)].sum())


@dataclass(frozen=True, eq=False)
class FrostmanFit:
    exponent: float
    intercept: float
    radii: np.ndarray
    residual: float
    masses: np.ndarray
    dim: int

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(r) >= 0):
            raise ValueError("radii must be strictly decreasing")
        if not np.allclose(np.log2(r), np.round(np.log2(r))):
            raise ValueError("radii must be dyadic")
        if not -1e-9 <= self.exponent <= self.dim + 0.25:
            raise ValueError(f"fitted exponent {self.exponent:.3f} outside [0, dim + 0.25]")


def dyadic_radii(mu: PointMassMeasure, min_factor: float = 2.0) -> np.ndarray:
    """Decreasing dyadic radii between ``min_factor * resolution`` and half the diameter."""
    res = mu.resolution()
    diam = mu.diameter_bound()
    if not np.isfinite(res) or diam <= 0:
        raise DegenerateMeasureError("measure has a single distinct atom")
    top = int(np.floor(np.log2(diam / 2)))
    bottom = int(np.ceil(np.log2(min_factor * res)))
    return 2.0 ** np.arange(top, bottom - 1, -1)


def frostman_fit(mu: PointMassMeasure, centers=64, radii=None, seed=0) -> FrostmanFit:
    """Fit ``max_x mu(B(x, r)) ~ r^s`` over sampled atom centers.

    ``centers`` is either an array of centers or a count of atoms to draw
    (by weight, without replacement when possible).
    """
    if mu.n_atoms < 2 or not np.isfinite(mu.resolution()):
        raise DegenerateMeasureError("frostman fit needs at least two distinct atoms")
    if np.isscalar(centers):
        k = int(centers)
        rng = as_rng(seed)
        n_pos = int(np.count_nonzero(mu.weights))
        idx = rng.choice(mu.n_atoms, size=k, replace=k > n_pos, p=mu.weights)
        ctr = mu.points[idx]
    else:
        ctr = np.asarray(centers, dtype=float).reshape(-1, mu.dim)
    if ctr.shape[0] < 8:
        raise PreconditionError("need at least 8 centers")
    res, diam = mu.resolution(), mu.diameter_bound()
    r = dyadic_radii(mu) if radii is None else np.asarray(radii, dtype=float)
    if r.size < 4:
        err = DegenerateMeasureError if radii is None else PreconditionError
        raise err(
            f"need >= 4 dyadic radii between resolution {res:.3g} and diameter {diam:.3g}"
        )
    if r.min() < res * (1 - 1e-12) or r.max() > diam * (1 + 1e-12):
        raise PreconditionError("radii must lie within [atom resolution, diameter]")
    best = np.zeros(r.size)
    for c in ctr:
        dist = np.linalg.norm(mu.points - c, axis=1)
        order = np.argsort(dist, kind="stable")
        cum = np.cumsum(mu.weights[order])
        pos = np.searchsorted(dist[order], r * (1 + 1e-12), side="right")
        best = np.maximum(best, np.where(pos > 0, cum[np.maximum(pos - 1, 0)], 0.0))
    if np.any(best <= 0):
        raise DegenerateMeasureError("zero ball mass at a sampled center")
    slope, icpt = np.polyfit(np.log(r), np.log(best), 1)
    resid = np.sqrt(np.mean((np.log(best) - (slope * np.log(r) + icpt)) ** 2))
    return FrostmanFit(float(slope), float(icpt), r, float(resid), best, mu.dim)
