"""Group windows with explicit Haar densities: O(2), O(3), the dilation
block group, SL2(R) on an Iwasawa chart, and the trivial group."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log, pi
from typing import Callable, Iterator

import numpy as np
from scipy.spatial.transform import Rotation

from .common import Estimate, PreconditionError, as_rng

KINDS = ("trivial", "orthogonal2", "orthogonal3", "dilation-block", "sl2")
INVARIANT_TOL = 1e-12


def rot2(theta) -> np.ndarray:
    """Rotation matrices, shape (..., 2, 2)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


_FLIP = np.diag([1.0, -1.0])


def o2_matrix(theta, reflect) -> np.ndarray:
    """``R(theta) @ diag(1, -1)^reflect``."""
    m = rot2(theta)
    return np.where(np.asarray(reflect, bool)[..., None, None], m @ _FLIP, m)


def sl2_matrix(theta, a, b, chart: str = "KP") -> np.ndarray:
    """``k(theta) p`` with ``p = [[a, b], [0, 1/a]]`` (KP) or ``[[a, 0], [b, 1/a]]`` (KP')."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.zeros_like(a)
    if chart == "KP":
        p = np.stack([np.stack([a, b], -1), np.stack([z, 1 / a], -1)], -2)
    else:
        p = np.stack([np.stack([a, z], -1), np.stack([b, 1 / a], -1)], -2)
    return rot2(theta) @ p


def iwasawa(matrix, chart: str = "KP") -> np.ndarray:
    """Chart coordinates ``(theta, a, b)`` of SL2 matrices, shape (..., 3)."""
    g = np.asarray(matrix, dtype=float)
    c1, c2 = g[..., :, 0], g[..., :, 1]
    if chart == "KP":
        a = np.hypot(c1[..., 0], c1[..., 1])
        th = np.arctan2(c1[..., 1], c1[..., 0])
        c, s = np.cos(th), np.sin(th)
        b = c * c2[..., 0] + s * c2[..., 1]
    else:
        a = 1 / np.hypot(c2[..., 0], c2[..., 1])
        th = np.arctan2(-c2[..., 0], c2[..., 1])
        c, s = np.cos(th), np.sin(th)
        b = -s * c1[..., 0] + c * c1[..., 1]
    return np.stack([np.mod(th, 2 * pi), a, b], -1)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A group element acting linearly by ``x -> matrix @ x``."""

    kind: str
    matrix: np.ndarray
    params: tuple = ()
    blocks: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", tuple(float(p) for p in np.ravel(self.params)))
        v = invariant_violation(self.kind, m[None], blocks=self.blocks)
        if v > INVARIANT_TOL:
            raise ValueError(f"{self.kind} element violates its matrix invariant by {v:.2e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "GroupElement":
        return cls("trivial", np.eye(dim))


def invariant_violation(kind: str, mats: np.ndarray, blocks: int = 1) -> float:
    """Largest violation of the kind's matrix invariant over a stack of matrices."""
    n, D, _ = mats.shape
    eye = np.eye(D)
    if kind == "trivial":
        return float(np.max(np.abs(mats - eye)))
    if kind in ("orthogonal2", "orthogonal3"):
        return float(np.max(np.abs(np.swapaxes(mats, 1, 2) @ mats - eye)))
    if kind == "sl2":
        return float(np.max(np.abs(np.linalg.det(mats) - 1)))
    if kind == "dilation-block":
        k = blocks
        d = D // k
        worst = 0.0
        rs = []
        for i in range(k):
            blk = mats[:, i * d:(i + 1) * d, i * d:(i + 1) * d]
            off = mats[:, i * d:(i + 1) * d, :].copy()
            off[:, :, i * d:(i + 1) * d] = 0
            worst = max(worst, float(np.max(np.abs(off))))
            gram = np.swapaxes(blk, 1, 2) @ blk
            r2 = gram[:, 0, 0]
            worst = max(worst, float(np.max(np.abs(gram - r2[:, None, None] * np.eye(d)))))
            rs.append(np.sqrt(r2))
        worst = max(worst, float(np.max(np.abs(np.prod(rs, axis=0) - 1))))
        return worst
    raise ValueError(kind)


@dataclass(frozen=True)
class GroupWindow:
    """A compact chart of a group with its Haar density.

    kind:
        ``trivial`` and ``orthogonal2``/``orthogonal3``: the whole (compact)
        group, probability-normalized.
        ``dilation-block``: ``k`` blocks ``r_i theta_i`` with ``theta_i`` in
        O(block_dim) and ``prod r_i = 1``; chart coordinates are log-ratios
        ``u_i = log r_i in [-log C, log C]`` for ``i < k``; density 1 in ``u``
        times probability Haar on each ``theta_i``.
        ``sl2``: Iwasawa chart ``k(theta) p`` with ``a in [1/C, C]``,
        ``b in [-C, C]`` and rotation ``k`` in SO(2) with probability Haar.
        ``chart='KP'`` uses upper-triangular ``p`` (density 1 in ``da db``);
        ``chart='KP-prime'`` uses lower-triangular ``p`` (density ``1/a^2``).
    """

    kind: str
    dim: int = 2
    C: float = 2.0
    chart: str = "KP"
    blocks: int = 1
    block_dim: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "orthogonal2" and self.dim != 2:
            raise ValueError("orthogonal2 acts on R^2")
        if self.kind == "orthogonal3" and self.dim != 3:
            raise ValueError("orthogonal3 acts on R^3")
        if self.kind == "sl2":
            if self.dim != 2:
                raise ValueError("sl2 acts on R^2")
            if self.chart not in ("KP", "KP-prime"):
                raise ValueError(f"unknown sl2 chart {self.chart!r}")
        if self.kind == "dilation-block":
            if self.block_dim not in (2, 3) or self.blocks < 1:
                raise ValueError("dilation-block needs blocks >= 1 and block_dim in {2, 3}")
            if self.dim != self.blocks * self.block_dim:
                raise ValueError("dilation-block dim must equal blocks * block_dim")
        if self.kind in ("sl2", "dilation-block") and not self.C > 1:
            raise ValueError("window parameter C must exceed 1")

    # constructors
    @classmethod
    def trivial(cls, dim: int = 2) -> "GroupWindow":
        return cls("trivial", dim)

    @classmethod
    def orthogonal(cls, dim: int) -> "GroupWindow":
        return cls(f"orthogonal{dim}", dim)

    @classmethod
    def sl2(cls, C: float = 2.0, chart: str = "KP") -> "GroupWindow":
        return cls("sl2", 2, C, chart)

    @classmethod
    def dilation_block(cls, blocks: int, block_dim: int = 2, C: float = 2.0) -> "GroupWindow":
        return cls("dilation-block", blocks * block_dim, C, "KP", blocks, block_dim)

    @property
    def bounds(self) -> dict:
        if self.kind == "sl2":
            return {"theta": (0.0, 2 * pi), "a": (1 / self.C, self.C), "b": (-self.C, self.C)}
        if self.kind == "dilation-block":
            L = log(self.C)
            return {f"u{i + 1}": (-L, L) for i in range(self.blocks - 1)}
        if self.kind == "orthogonal2":
            return {"theta": (0.0, 2 * pi), "reflect": (0, 1)}
        return {}

    @property
    def mass(self) -> float:
        """Haar mass of the window (rotation factors probability-normalized)."""
        if self.kind == "sl2":
            return (self.C - 1 / self.C) * 2 * self.C
        if self.kind == "dilation-block":
            return (2 * log(self.C)) ** (self.blocks - 1)
        return 1.0

    @property
    def is_compact_group(self) -> bool:
        return self.kind in ("trivial", "orthogonal2", "orthogonal3")

    def haar_density(self, params) -> np.ndarray:
        """Haar density w.r.t. the chart's Lebesgue (and counting) coordinates.

        For sl2 the coordinates are ``(theta, a, b)`` with ``d theta / 2 pi``.
        """
        p = np.atleast_2d(np.asarray(params, dtype=float))
        n = p.shape[0]
        if self.kind == "sl2":
            base = np.full(n, 1 / (2 * pi))
            return base if self.chart == "KP" else base / p[:, 1] ** 2
        if self.kind == "orthogonal2":
            return np.full(n, 1 / (4 * pi))
        if self.kind == "orthogonal3":
            # w.r.t. axis area x angle x reflection counting
            return (1 - np.cos(p[:, 3])) / (8 * pi**2)
        return np.ones(n)

    def contains(self, params, margin: float = 0.0) -> np.ndarray:
        """Whether chart coordinates lie inside the window shrunk by ``margin``."""
        p = np.atleast_2d(np.asarray(params, dtype=float))
        if self.kind == "sl2":
            lo_a, hi_a = 1 / self.C, self.C
            return ((p[:, 1] >= lo_a + margin) & (p[:, 1] <= hi_a - margin)
                    & (np.abs(p[:, 2]) <= self.C - margin))
        if self.kind == "dilation-block":
            u = p[:, : self.blocks - 1]
            return np.all(np.abs(u) <= log(self.C) - margin, axis=1)
        return np.ones(p.shape[0], bool)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "C": self.C, "chart": self.chart,
                "blocks": self.blocks, "block_dim": self.block_dim, "bounds": self.bounds,
                "mass": self.mass}

    def describe(self) -> str:
        if self.kind == "sl2":
            return f"sl2[{self.chart}, C={self.C:g}, mass={self.mass:g}]"
        if self.kind == "dilation-block":
            return f"dilation-block[k={self.blocks}, d={self.block_dim}, C={self.C:g}]"
        return self.kind


@dataclass(frozen=True, eq=False)
class HaarSample:
    """A weighted batch of group elements; iterates as ``(GroupElement, weight)``."""

    window: GroupWindow
    matrices: np.ndarray
    params: np.ndarray
    weights: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __iter__(self) -> Iterator[tuple[GroupElement, float]]:
        for m, p, w in zip(self.matrices, self.params, self.weights):
            yield GroupElement(self.window.kind, m, p, self.window.blocks), float(w)

    def max_violation(self) -> float:
        return invariant_violation(self.window.kind, self.matrices, self.window.blocks)


def _orthogonal_blocks(rng, n: int, d: int):
    if d == 2:
        th = rng.uniform(0, 2 * pi, n)
        refl = rng.integers(0, 2, n)
        return o2_matrix(th, refl), np.stack([th, refl.astype(float)], 1)
    rot = Rotation.random(n, random_state=rng.integers(2**32))
    mats = rot.as_matrix().reshape(n, 3, 3)
    refl = rng.integers(0, 2, n)
    mats = np.where(refl[:, None, None] == 1, -mats, mats)
    rv = rot.as_rotvec().reshape(n, 3)
    ang = np.linalg.norm(rv, axis=1)
    axis = rv / np.where(ang > 0, ang, 1)[:, None]
    return mats, np.column_stack([axis, ang, refl.astype(float)])


def haar_sample(w: GroupWindow, n: int, seed=0) -> HaarSample:
    """``n`` draws from normalized Haar measure on the window, each weighted
    ``mass / n``; the weights sum to the window mass."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    rng = as_rng(seed)
    wts = np.full(n, w.mass / n)
    if w.kind == "trivial":
        mats = np.broadcast_to(np.eye(w.dim), (n, w.dim, w.dim)).copy()
        return HaarSample(w, mats, np.zeros((n, 0)), wts, seed)
    if w.kind == "orthogonal2":
        mats, p = _orthogonal_blocks(rng, n, 2)
        return HaarSample(w, mats, p, wts, seed)
    if w.kind == "orthogonal3":
        mats, p = _orthogonal_blocks(rng, n, 3)
        return HaarSample(w, mats, p, wts, seed)
    if w.kind == "sl2":
        th = rng.uniform(0, 2 * pi, n)
        C = w.C
        if w.chart == "KP":
            a = rng.uniform(1 / C, C, n)
        else:
            # inverse CDF of a^-2 on [1/C, C]
            u = rng.uniform(size=n)
            a = 1 / (C - u * (C - 1 / C))
        b = rng.uniform(-C, C, n)
        return HaarSample(w, sl2_matrix(th, a, b, w.chart), np.stack([th, a, b], 1), wts, seed)
    # dilation block
    k, d = w.blocks, w.block_dim
    L = log(w.C)
    u = rng.uniform(-L, L, (n, k - 1))
    logr = np.column_stack([u, -u.sum(axis=1)])
    mats = np.zeros((n, k * d, k * d))
    ps = [u]
    for i in range(k):
        blk, p = _orthogonal_blocks(rng, n, d)
        mats[:, i * d:(i + 1) * d, i * d:(i + 1) * d] = np.exp(logr[:, i])[:, None, None] * blk
        ps.append(p)
    return HaarSample(w, mats, np.column_stack(ps), wts, seed)


def haar_quadrature(w: GroupWindow, n: int, offset: float = 0.5) -> HaarSample:
    """Deterministic equal-weight rule on a compact one-parameter group.

    For orthogonal2, ``n`` equally spaced angles (shifted by ``offset`` steps)
    on each of the two components of O(2).
    """
    if w.kind == "trivial":
        return HaarSample(w, np.eye(w.dim)[None], np.zeros((1, 0)), np.ones(1))
    if w.kind != "orthogonal2":
        raise PreconditionError("deterministic quadrature exists only for trivial and orthogonal2")
    th = 2 * pi * (np.arange(n) + offset) / n
    th = np.concatenate([th, th])
    refl = np.repeat([0, 1], n)
    return HaarSample(w, o2_matrix(th, refl), np.stack([th, refl.astype(float)], 1),
                      np.full(2 * n, 1 / (2 * n)))


def apply(g, x) -> np.ndarray:
    """``g x`` for one vector (dim,) or a stack (n, dim)."""
    m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.shape[1]:
        raise ValueError(f"group acts on R^{m.shape[1]}, got vectors in R^{x.shape[-1]}")
    return x @ m.T


# ---------------------------------------------------------------------------
# Cutoffs and invariance checks


def smooth_step(t) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0.0)
        g = np.where(t < 1, np.exp(-1 / np.where(t < 1, 1 - t, 1)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class ChartCutoff:
    """Product of 1D smooth windows in chart coordinates.

    ``box`` maps coordinate index to ``(lo, hi)``; each factor ramps from 0
    to 1 over ``ramp`` times the interval length at both ends.
    """

    box: tuple[tuple[int, float, float], ...]
    ramp: float = 0.25

    def __call__(self, params) -> np.ndarray:
        p = np.atleast_2d(np.asarray(params, dtype=float))
        out = np.ones(p.shape[0])
        for i, lo, hi in self.box:
            wdt = self.ramp * (hi - lo)
            out *= smooth_step((p[:, i] - lo) / wdt) * smooth_step((hi - p[:, i]) / wdt)
        return out

    def support_corners(self, n_edge: int = 9) -> np.ndarray:
        """Grid on the support box (used for margin checks)."""
        axes = [np.linspace(lo, hi, n_edge) for _, lo, hi in self.box]
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(self.box))

    def describe(self) -> str:
        parts = [f"x{i} in [{lo:g}, {hi:g}]" for i, lo, hi in self.box]
        return "smooth-step product (" + ", ".join(parts) + f", ramp={self.ramp:g})"


def sl2_cutoff(C: float = 2.0, shrink: float = 0.9, ramp: float = 0.25) -> ChartCutoff:
    """Default SL2 cutoff psi(a, b), independent of the rotation angle."""
    lo = 1 / C ** shrink
    return ChartCutoff(((1, lo, C**shrink), (2, -shrink * C, shrink * C)), ramp)


@dataclass(frozen=True)
class ChartFunction:
    """A test function on the group, given in chart coordinates.

    ``fn`` maps an (n, n_params) array to values; ``support`` is an optional
    cutoff whose box bounds the support (used for the margin check).
    """

    window: GroupWindow
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support: ChartCutoff | None = None

    def __call__(self, mats: np.ndarray) -> np.ndarray:
        return self.fn(chart_coordinates(self.window, mats))


def chart_coordinates(w: GroupWindow, mats: np.ndarray) -> np.ndarray:
    """Chart coordinates for matrices of the window's group."""
    mats = np.asarray(mats, dtype=float)
    if w.kind == "sl2":
        return iwasawa(mats, w.chart)
    if w.kind == "orthogonal2":
        det = np.linalg.det(mats)
        refl = (det < 0).astype(float)
        c1 = mats[:, :, 0]
        return np.stack([np.mod(np.arctan2(c1[:, 1], c1[:, 0]), 2 * pi), refl], 1)
    if w.kind == "dilation-block":
        d, k = w.block_dim, w.blocks
        r = [np.linalg.norm(mats[:, i * d:(i + 1) * d, i * d], axis=1) for i in range(k)]
        return np.log(np.stack(r[: k - 1], 1)) if k > 1 else np.zeros((mats.shape[0], 0))
    if w.kind == "orthogonal3":
        det = np.linalg.det(mats)
        rot = np.where(det[:, None, None] < 0, -mats, mats)
        rv = Rotation.from_matrix(rot).as_rotvec()
        ang = np.linalg.norm(rv, axis=1)
        axis = rv / np.where(ang > 0, ang, 1)[:, None]
        return np.column_stack([axis, ang, (det < 0).astype(float)])
    return np.zeros((mats.shape[0], 0))


def right_invariance_defect(w: GroupWindow, f, h, n: int = 10_000, seed=0) -> Estimate:
    """``|int f(g h) d lambda - int f(g) d lambda|`` on shared Haar draws.

    ``f`` maps a stack of matrices to values. For non-compact windows ``f``
    must be a :class:`ChartFunction` with a support box, and the translated
    support ``supp(f) h^-1`` must lie in the window; otherwise a
    PreconditionError is raised.
    """
    hm = h.matrix if isinstance(h, GroupElement) else np.asarray(h, dtype=float)
    if not w.is_compact_group:
        sup = getattr(f, "support", None)
        if sup is None:
            raise PreconditionError("non-compact window needs a test function with a support box")
        pts = sup.support_corners()
        if w.kind == "sl2":
            full = np.zeros((pts.shape[0], 3))
            full[:, 1] = 1.0
            for col, (i, _, _) in enumerate(sup.box):
                full[:, i] = pts[:, col]
            for th in np.linspace(0, 2 * pi, 8, endpoint=False):
                full[:, 0] = th
                g = sl2_matrix(full[:, 0], full[:, 1], full[:, 2], w.chart)
                moved = chart_coordinates(w, g @ np.linalg.inv(hm))
                if not np.all(w.contains(moved)) or not np.all(w.contains(full)):
                    raise PreconditionError("support of f h^-1 leaves the window")
    s = haar_sample(w, n, seed)
    f0 = np.asarray(f(s.matrices), dtype=float)
    f1 = np.asarray(f(s.matrices @ hm), dtype=float)
    diff = s.weights * (f1 - f0)
    est = float(diff.sum())
    se = float(np.sqrt(n * np.var(diff, ddof=1))) if n > 1 else 0.0
    return Estimate(abs(est), se)
