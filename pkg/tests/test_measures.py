import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mattila_lab import measures as M
from mattila_lab.bundled import BUNDLED, bundled, cantor, cantor_dust, cantor_dust_ifs
from mattila_lab.common import CapacityError, DegenerateMeasureError, PreconditionError

from . import oracles

small_cloud = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.lists(st.integers(-128, 128).map(lambda k: k / 64), min_size=2, max_size=2),
                 min_size=n, max_size=n),
        st.lists(st.floats(0.01, 1), min_size=n, max_size=n),
    )
)


def _measure(data):
    pts, w = data
    w = np.asarray(w) / np.sum(w)
    return M.PointMassMeasure(np.asarray(pts), w)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        M.PointMassMeasure(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(ValueError):
        M.PointMassMeasure(np.zeros((2, 1)), [1.5, -0.5])


def test_arrays_are_read_only():
    mu = M.PointMassMeasure.uniform([[0.0], [1.0]])
    with pytest.raises(ValueError):
        mu.points[0, 0] = 3.0


def test_cantor_atoms_match_explicit_compositions():
    mu = cantor(5)
    ref = oracles.ifs_compositions_1d([(1 / 3, 0.0), (1 / 3, 2 / 3)], 5)
    assert mu.n_atoms == 32
    np.testing.assert_allclose(np.sort(mu.points[:, 0]), ref, atol=1e-14)
    np.testing.assert_allclose(mu.weights, 1 / 32)


def test_ifs_dust_matches_product_construction():
    a = cantor_dust_ifs(3).canonical()
    b = cantor_dust(3)
    b = M.PointMassMeasure(b.points, b.weights).canonical()
    np.testing.assert_allclose(a.points, b.points, atol=1e-13)
    np.testing.assert_allclose(a.weights, b.weights)


def test_ifs_capacity_error():
    with pytest.raises(CapacityError):
        M.ifs_generate(M.middle_thirds(12), cap=1000)


def test_ifs_map_must_be_similarity():
    with pytest.raises(ValueError):
        M.IFSMap(0.5, [[1.0, 0.1], [0.0, 1.0]], [0.0, 0.0])


@given(small_cloud, small_cloud)
@settings(max_examples=30, deadline=None)
def test_convolution_matches_double_loop(a, b):
    mu, nu = _measure(a), _measure(b)
    c = M.convolve(mu, nu)
    ref = oracles.convolve_loops(mu.points.tolist(), mu.weights, nu.points.tolist(), nu.weights)
    assert math.isclose(c.weights.sum(), 1.0, abs_tol=1e-12)
    assert c.n_atoms == len(ref)
    for p, w in zip(c.points, c.weights):
        assert math.isclose(w, ref[tuple(round(v, 9) for v in p)], rel_tol=1e-9)


def test_convolution_merges_coincident_sums():
    mu = M.PointMassMeasure.uniform([[0.0], [1.0]])
    c = M.convolve(mu, mu)
    np.testing.assert_allclose(c.points[:, 0], [0, 1, 2])
    np.testing.assert_allclose(c.weights, [0.25, 0.5, 0.25])


def test_product_measure_records_factors():
    a = M.PointMassMeasure.uniform([[0.0], [1.0]])
    b = M.PointMassMeasure([[0.0], [2.0], [3.0]], [0.2, 0.3, 0.5])
    p = M.product_measure(a, b)
    assert p.dim == 2 and p.n_atoms == 6 and len(p.factors) == 2
    assert math.isclose(M.ball_mass(p, [0, 3], 0.1), 0.25)


def test_mollifier_unit_mass_and_transform():
    m = M.Mollifier(2, 0.125)
    h = m.epsilon / 64
    ax = np.arange(-m.epsilon, m.epsilon + h / 2, h)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    dens = m.density(np.stack([X, Y], -1))
    assert math.isclose(dens.sum() * h * h, 1.0, rel_tol=1e-12)
    for xi in ([3.0, -7.0], [0.0, 11.0]):
        assert math.isclose(float(m.ft(xi)), oracles.bump_ft(xi, m.epsilon), rel_tol=1e-12)


def test_mollifier_samples_follow_density():
    m = M.Mollifier(1, 1.0)
    x = m.sample(200_000, 0)[:, 0]
    assert np.all(np.abs(x) <= 0.5)
    # second moment of the hat with half-width 1/2 is 1/24
    assert abs(np.mean(x**2) - 1 / 24) < 5e-4


def test_overlap_matches_direct_quadrature():
    m = M.Mollifier(1, 0.5)
    h = 1e-4
    x = np.arange(-1, 1, h) + h / 2
    for s in (0.0, 0.1, 0.3, 0.49, 0.6):
        ref = np.sum([oracles.hat(t, 0.5) * oracles.hat(t + s, 0.5) for t in x]) * h
        assert abs(float(m.overlap([s])) - ref) < 1e-7 * float(m.overlap([0.0]))


@pytest.mark.parametrize("dim", [1, 2])
def test_mollify_grid_matches_pointwise_oracle(dim):
    mu = bundled("interval-cloud-256") if dim == 1 else bundled("square-cloud-64")
    m = M.Mollifier(dim, 2**-4)
    g = M.mollify(mu, m, m.epsilon / 4)
    assert math.isclose(g.mass, 1.0, abs_tol=1e-12)
    rng = np.random.default_rng(1)
    idx = [tuple(rng.integers(0, n) for n in g.shape) for _ in range(40)]
    for i in idx:
        node = g.origin + g.spacing * np.array(i)
        ref = sum(w * oracles.bump(node - p, m.epsilon) for p, w in zip(mu.points, mu.weights))
        assert math.isclose(g.values[i], ref, rel_tol=1e-10, abs_tol=1e-10)


def test_mollify_rejects_coarse_grid():
    mu = bundled("square-cloud-64")
    with pytest.raises(PreconditionError):
        M.mollify(mu, M.Mollifier(2, 0.0625), 0.05)


def test_ball_mass_is_closed():
    mu = M.PointMassMeasure.uniform([[0.0, 0.0], [1.0, 0.0]])
    assert M.ball_mass(mu, [0, 0], 1.0) == 1.0
    assert M.ball_mass(mu, [0, 0], 0.999) == 0.5


def test_frostman_fit_matches_box_counting_oracle():
    mu = cantor_dust_ifs(4)
    fit = M.frostman_fit(mu)
    ref = oracles.box_count_dimension(mu.points, [3.0**-k for k in range(1, 5)])
    assert abs(ref - 2 * math.log(2) / math.log(3)) < 1e-9
    assert abs(fit.exponent - ref) < 0.12


def test_frostman_fit_precondition_and_degenerate():
    with pytest.raises(DegenerateMeasureError):
        M.frostman_fit(bundled("two-point"))
    with pytest.raises(DegenerateMeasureError):
        M.frostman_fit(M.PointMassMeasure.dirac([0.0, 0.0]))
    with pytest.raises(PreconditionError):
        M.frostman_fit(cantor(6), centers=np.zeros((3, 1)))


def test_frostman_fit_validates_radii():
    with pytest.raises(ValueError):
        M.FrostmanFit(0.5, 0.0, np.array([0.25, 0.5]), 0.0, np.ones(2), 1)
    with pytest.raises(ValueError):
        M.FrostmanFit(0.5, 0.0, np.array([0.3, 0.1]), 0.0, np.ones(2), 1)


def test_resolution_and_diameter():
    mu = M.PointMassMeasure.uniform([[0.0, 0.0], [0.3, 0.4], [3.0, 4.0]])
    assert math.isclose(mu.resolution(), 0.5)
    assert mu.diameter_bound() >= 5.0


@pytest.mark.parametrize("name", sorted(set(BUNDLED) - {"dense-square"}))
def test_bundled_measures_are_probability_measures(name):
    mu = bundled(name)
    assert math.isclose(mu.weights.sum(), 1.0, abs_tol=1e-9)


def test_unknown_bundled_name():
    with pytest.raises(KeyError):
        bundled("nope")
