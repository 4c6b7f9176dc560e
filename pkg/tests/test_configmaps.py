import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mattila_lab import configmaps as C
from mattila_lab.bundled import bundled
from mattila_lab.common import PreconditionError
from mattila_lab.groups import GroupWindow, haar_sample
from mattila_lab.measures import Mollifier, PointMassMeasure

from . import oracles

N = 10_000


def _apply(mats, x):
    return np.einsum("nij,nj->ni", mats, x)


@pytest.mark.parametrize("d", [2, 3])
def test_distance_invariant_under_orthogonal_group(d):
    rng = np.random.default_rng(0)
    g = haar_sample(GroupWindow.orthogonal(d), N, seed=1).matrices
    x, y = rng.normal(size=(2, N, d))
    dist = C.ConfigMap("distance", d)
    np.testing.assert_allclose(C.evaluate_phi(dist, [_apply(g, x), _apply(g, y)]),
                               C.evaluate_phi(dist, [x, y]), rtol=1e-12, atol=1e-12)


def test_signed_area_invariant_under_sl2():
    rng = np.random.default_rng(2)
    g = haar_sample(GroupWindow.sl2(), N, seed=3).matrices
    x, y = rng.normal(size=(2, N, 2))
    sa = C.ConfigMap("signed-area")
    np.testing.assert_allclose(C.evaluate_phi(sa, [_apply(g, x), _apply(g, y)]),
                               C.evaluate_phi(sa, [x, y]), rtol=1e-10, atol=1e-10)


def test_dot_sum_invariant_under_contragredient_action():
    rng = np.random.default_rng(4)
    g = haar_sample(GroupWindow.sl2(), N, seed=5).matrices
    gi = np.linalg.inv(g).transpose(0, 2, 1)
    x, y, z = rng.normal(size=(3, N, 2))
    ds = C.ConfigMap("dot-sum")
    np.testing.assert_allclose(C.evaluate_phi(ds, [_apply(gi, x), _apply(g, y), _apply(g, z)]),
                               C.evaluate_phi(ds, [x, y, z]), rtol=1e-10, atol=1e-10)


def test_product_of_distances_invariant_under_dilation_blocks():
    rng = np.random.default_rng(6)
    k, d = 3, 2
    g = haar_sample(GroupWindow.dilation_block(k, d), N, seed=7).matrices
    pts = rng.normal(size=(2 * k, N, d))
    moved = []
    for j in range(k):
        blk = g[:, j * d:(j + 1) * d, j * d:(j + 1) * d]
        moved += [_apply(blk, pts[2 * j]), _apply(blk, pts[2 * j + 1])]
    pd = C.ConfigMap("product-of-distances", d, k)
    np.testing.assert_allclose(C.evaluate_phi(pd, moved), C.evaluate_phi(pd, list(pts)), rtol=1e-10)


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
@settings(max_examples=100, deadline=None)
def test_dot_sum_equals_signed_area_form(v):
    x, y, z = np.array(v).reshape(3, 2)
    ds = C.evaluate_phi(C.ConfigMap("dot-sum"), [x, y, z])
    yp = -C.perp(y)
    zp = -C.perp(z)
    sa = C.evaluate_phi(C.ConfigMap("signed-area"), [x, yp + zp])
    assert abs(ds - sa) < 1e-10


def test_map_validation():
    with pytest.raises(ValueError):
        C.ConfigMap("signed-area", d=3)
    with pytest.raises(ValueError):
        C.ConfigMap("distance", k=2)
    with pytest.raises(ValueError):
        C.evaluate_phi(C.ConfigMap("distance"), [[0, 0]])
    assert C.ConfigMap("product-of-distances", 2, 3).arity == 6


def test_two_atom_distance_pushforward_is_exact():
    mu = bundled("two-point")
    bw = 1 / 64
    h = C.pushforward(C.ConfigMap("distance"), mu, None, bin_width=bw, n_pairs=1000)
    ref = oracles.enumerate_distance_hist(mu.points.tolist(), mu.weights, bw)
    assert h.method == "enumeration"
    assert dict(zip(h.bins.tolist(), h.masses.tolist())) == pytest.approx(ref, abs=1e-15)
    assert h.mass_at([0])[0] == 0.5 and h.mass_at([64])[0] == 0.5


@pytest.mark.parametrize("seed", range(3))
def test_monte_carlo_agrees_with_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(3, 7)
    mu = PointMassMeasure(rng.uniform(size=(n, 2)), rng.dirichlet(np.ones(n)))
    cmap = C.ConfigMap("distance")
    bw = 0.05
    exact = oracles.enumerate_distance_hist(mu.points.tolist(), mu.weights, bw)
    h = C.pushforward(cmap, mu, None, seed=seed, n_pairs=200_000, bin_width=bw, enumeration_limit=0)
    assert h.method == "monte-carlo"
    bins = sorted(set(exact) | set(h.bins.tolist()))
    p = np.array([exact.get(b, 0.0) for b in bins])
    se = np.sqrt(np.maximum(p * (1 - p), 1e-12) / h.n_samples)
    assert np.all(np.abs(h.mass_at(bins) - p) <= 4 * se)


def test_mollified_pushforward_stays_near_configuration_set():
    mu = bundled("two-point")
    m = Mollifier(2, 2**-5)
    h = C.pushforward(C.ConfigMap("distance"), mu, m, seed=1, n_pairs=20_000)
    assert math.isclose(h.total_mass, 1.0, abs_tol=1e-12)
    t = h.lefts
    reach = m.epsilon * math.sqrt(2)  # each jitter moves a point by at most eps sqrt(2)/2
    assert np.all((t <= reach) | (np.abs(t - 1) <= reach + h.bin_width))


def test_l2_density_norm_cauchy_schwarz():
    h = C.pushforward(C.ConfigMap("distance"), bundled("square-cloud-64"), Mollifier(2, 2**-4),
                      seed=2, n_pairs=50_000)
    sb = C.support_lower_bound(h)
    assert sb.lower_bound <= sb.occupied + 1e-12


def test_orbit_weighting_rules():
    mu = bundled("two-point")
    h = C.pushforward(C.ConfigMap("distance"), mu, Mollifier(2, 0.1), n_pairs=4000)
    with pytest.raises(PreconditionError):
        C.orbit_weighted_l2(h)
    with pytest.raises(PreconditionError):
        C.pushforward(C.ConfigMap("signed-area"), mu, Mollifier(2, 0.1), n_pairs=4000,
                      orbit_weight=True)


def test_pushforward_preconditions():
    mu = bundled("two-point")
    with pytest.raises(PreconditionError):
        C.pushforward(C.ConfigMap("distance"), mu, Mollifier(2, 0.1), n_pairs=10)
    with pytest.raises(PreconditionError):
        C.pushforward(C.ConfigMap("distance"), mu, None)


def test_histogram_validation():
    with pytest.raises(ValueError):
        C.PushforwardHistogram(0.1, np.array([0, 1]), np.array([0.7, 0.7]), 10, "x")
    with pytest.raises(ValueError):
        C.PushforwardHistogram(0.1, np.array([0, 1]), np.array([1.5, -0.5]), 10, "x")


def test_degenerate_orbit_flag():
    o = bundled("origin-2d")
    h = C.pushforward(C.ConfigMap("signed-area"), [o, bundled("square-cloud-64")],
                      Mollifier(2, 0.1), n_pairs=4000)
    assert "degenerate-orbit:slot0" in h.flags
