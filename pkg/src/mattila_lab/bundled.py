"""Named test measures used by the experiments and the acceptance suite."""

from __future__ import annotations

from math import pi
from typing import Callable

import numpy as np

from .measures import (PointMassMeasure, cantor_dust_spec, convolve, ifs_generate,
                       middle_thirds, product_measure)

ROOT_SEED = 20240607


def square_cloud(n: int = 64, seed: int = ROOT_SEED) -> PointMassMeasure:
    """``n`` uniform random atoms in the unit square."""
    return PointMassMeasure.uniform(np.random.default_rng(seed).uniform(size=(n, 2)))


def interval_cloud(n: int = 256, seed: int = ROOT_SEED) -> PointMassMeasure:
    return PointMassMeasure.uniform(np.random.default_rng(seed).uniform(size=(n, 1)))


def uniform_grid_1d(n: int = 1024) -> PointMassMeasure:
    """Midpoints of ``n`` equal cells of [0, 1]."""
    return PointMassMeasure.uniform(((np.arange(n) + 0.5) / n)[:, None])


def dense_square(n: int = 2048) -> PointMassMeasure:
    """Product of two midpoint grids: a discretized Lebesgue measure on [0,1]^2."""
    g = uniform_grid_1d(n)
    return product_measure(g, g)


def cantor(depth: int = 8) -> PointMassMeasure:
    return ifs_generate(middle_thirds(depth))


def cantor_dust(depth: int = 8) -> PointMassMeasure:
    """Planar Cantor dust built as a product, so transforms factorize."""
    c = cantor(depth)
    return product_measure(c, c)


def cantor_dust_ifs(depth: int = 4) -> PointMassMeasure:
    return ifs_generate(cantor_dust_spec(depth))


def two_point(a=(0.0, 0.0), b=(0.6, 0.8)) -> PointMassMeasure:
    return PointMassMeasure(np.array([a, b], dtype=float), [0.5, 0.5])


def arc_E(n: int = 64, seed: int = ROOT_SEED + 1) -> PointMassMeasure:
    """Atoms at random angles in [0, pi/4] on the unit circle."""
    th = np.sort(np.random.default_rng(seed).uniform(0, pi / 4, n))
    return PointMassMeasure.uniform(np.stack([np.cos(th), np.sin(th)], 1))


_PATCH_CENTER = 0.5 * np.array([np.cos(5 * pi / 8), np.sin(5 * pi / 8)])


def patch(n: int = 64, width: float = 0.4, seed: int = ROOT_SEED + 2) -> PointMassMeasure:
    """Random atoms in a square of side ``width`` centred on the ray at angle 5 pi/8."""
    u = np.random.default_rng(seed).uniform(-width / 2, width / 2, (n, 2))
    return PointMassMeasure.uniform(_PATCH_CENTER + u)


def patch_F() -> PointMassMeasure:
    return patch(seed=ROOT_SEED + 2)


def patch_H() -> PointMassMeasure:
    return patch(seed=ROOT_SEED + 3)


def sum_FH() -> PointMassMeasure:
    return convolve(patch_F(), patch_H())


def origin(dim: int = 2) -> PointMassMeasure:
    return PointMassMeasure.dirac(np.zeros(dim))


BUNDLED: dict[str, Callable[[], PointMassMeasure]] = {
    "square-cloud-64": square_cloud,
    "interval-cloud-256": interval_cloud,
    "uniform-grid-1024": uniform_grid_1d,
    "dense-square": dense_square,
    "cantor-8": cantor,
    "cantor-dust-8": cantor_dust,
    "cantor-dust-4": lambda: cantor_dust(4),
    "two-point": two_point,
    "arc-E": arc_E,
    "patch-F": patch_F,
    "patch-H": patch_H,
    "sum-FH": sum_FH,
    "origin-2d": origin,
    "origin-1d": lambda: origin(1),
    "unit-square-256": lambda: square_cloud(256, ROOT_SEED + 4),
}


def bundled(name: str) -> PointMassMeasure:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise KeyError(f"unknown bundled measure {name!r}; choose from {sorted(BUNDLED)}") from None
