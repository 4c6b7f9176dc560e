"""Shared error types, the estimate container and seed derivation."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


class CapacityError(ValueError):
    """An atom-count or sample-count cap would be exceeded."""


class DegenerateMeasureError(ValueError):
    """The measure is too degenerate (e.g. a single atom) for the estimator."""


class Estimate(NamedTuple):
    """A numerical estimate with a one-sigma error bar.

    ``stderr`` is a Monte Carlo standard error for stochastic estimators and a
    refinement-difference error for deterministic quadratures.
    """

    value: float
    stderr: float = 0.0
    flags: tuple[str, ...] = ()

    def __float__(self) -> float:
        return float(self.value)


def stage_seed(root: int, *stage: int) -> int:
    """Derive a child seed from ``root`` and a stage index path.

    Uses :class:`numpy.random.SeedSequence` so that stages are statistically
    independent while the derivation stays reproducible across platforms.
    """
    ss = np.random.SeedSequence([int(root) & 0xFFFFFFFFFFFFFFFF, *map(int, stage)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
