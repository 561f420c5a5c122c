import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsnet.errors import DataError, DimensionError, InvalidPivots
from lsnet.model import (
    Cell,
    Hyperparams,
    LatentState,
    LoadingState,
    WeightedNetwork,
    build_pattern,
    position_prior_var,
    validate_state,
)
from lsnet.simulate import gen_truth

F, Z, P = Cell.FREE, Cell.FIXED_ZERO, Cell.POSITIVE


def test_plt_pattern_p4_d2():
    pat = build_pattern("plt", 4, 2)
    expected = np.array([[P, Z], [F, P], [F, F], [F, F]])
    np.testing.assert_array_equal(pat.cells, expected)
    assert pat.pivots == (1, 2)


def test_unrestricted_all_free():
    pat = build_pattern("unrestricted", 4, 2)
    assert pat.free.sum() == 8
    assert pat.pivots is None


def test_glt_pattern_pivots_2_3():
    pat = build_pattern("glt", 4, 2, pivots=(2, 3))
    expected = np.array([[Z, Z], [P, Z], [F, P], [F, F]])
    np.testing.assert_array_equal(pat.cells, expected)


@pytest.mark.parametrize("pivots", [None, (1,), (2, 2), (3, 2), (0, 2), (2, 5)])
def test_glt_rejects_bad_pivots(pivots):
    with pytest.raises(InvalidPivots):
        build_pattern("glt", 4, 2, pivots=pivots)


@pytest.mark.parametrize("p,d", [(4, 1), (1, 2), (2, 3)])
def test_pattern_rejects_bad_dims(p, d):
    with pytest.raises(DimensionError):
        build_pattern("plt", p, d)


@given(st.integers(2, 8).flatmap(lambda d: st.tuples(st.integers(d, 8), st.just(d))))
def test_plt_equals_glt_with_leading_pivots(pd):
    p, d = pd
    plt_ = build_pattern("plt", p, d)
    glt = build_pattern("glt", p, d, pivots=tuple(range(1, d + 1)))
    np.testing.assert_array_equal(plt_.cells, glt.cells)
    assert plt_.positive.sum() == d
    assert plt_.fixed_zero.sum() == d * (d - 1) // 2
    l, k = np.indices((p, d))
    np.testing.assert_array_equal(plt_.fixed_zero, k > l)


@given(st.integers(2, 6).flatmap(
    lambda d: st.integers(d, 8).flatmap(
        lambda p: st.tuples(st.just(p), st.just(d),
                            st.lists(st.integers(1, p), min_size=d, max_size=d, unique=True).map(sorted)))))
def test_glt_pivot_rule(args):
    p, d, pivots = args
    pat = build_pattern("glt", p, d, pivots=pivots)
    assert pat.positive.sum() == d
    for k, row in enumerate(pivots):
        assert pat.cells[row - 1, k] == P
        assert np.all(pat.cells[: row - 1, k] == Z)
        assert np.all(pat.cells[row:, k] == F)


def test_prior_variance_d2():
    assert position_prior_var(2) == 2.0
    assert position_prior_var(4) == pytest.approx(4 / 3)
    with pytest.raises(DimensionError):
        position_prior_var(1)


def test_latent_state_rejects_d1():
    with pytest.raises(DimensionError, match="d must be >= 2"):
        LatentState(0.0, np.zeros((1, 5)))


def test_network_validation():
    w = np.array([[3, 1, 0], [1, 0, 2], [0, 2, 0]])
    net = WeightedNetwork(w)
    assert net.weights[0, 0] == 0
    np.testing.assert_array_equal(net.upper(), [1, 0, 2])
    assert not net.weights.flags.writeable
    for bad in ([[0, 1], [2, 0]], [[0, -1], [-1, 0]], [[0, 0.5], [0.5, 0]], [[0, np.inf], [np.inf, 0]]):
        with pytest.raises(DataError):
            WeightedNetwork(np.array(bad))


def _plt_state():
    pat = build_pattern("plt", 4, 2)
    F = np.array([[1.0, -1.0, 0.5, -0.5], [0.2, 0.3, -0.1, -0.4]])
    lat = LatentState(0.3, F, centered=True)
    lam = np.array([[0.8, 0.0], [0.4, 1.1], [0.0, -0.6], [0.0, 0.0]])
    load = LoadingState(lam, (lam != 0).astype(int), np.full(4, 0.5), np.ones(2), 1.0, np.ones(4))
    return lat, load, pat


def test_validate_clean_state():
    assert validate_state(*_plt_state()) == []


def test_validate_fixed_zero_breach():
    lat, load, pat = _plt_state()
    lam = np.array(load.lam)
    ind = np.array(load.indicators)
    lam[0, 1] = 0.3
    ind[0, 1] = 1
    bad = LoadingState(lam, ind, load.tau, load.col_scale, load.kappa, load.idio_var)
    problems = validate_state(lat, bad, pat)
    assert "FixedZero cell nonzero at (1,2)" in problems
    assert [m for m in problems if "nonzero" in m] == ["FixedZero cell nonzero at (1,2)"]


def test_validate_center_drift():
    lat, load, pat = _plt_state()
    F = np.array(lat.positions)
    F[0] += 0.5 / F.shape[1]
    problems = validate_state(LatentState(lat.alpha, F, centered=True), load, pat)
    assert problems == ["center drift row 1"]
    assert validate_state(LatentState(lat.alpha, F, centered=False), load, pat) == []


def test_validate_flags_each_invariant():
    lat, load, pat = _plt_state()
    lam = np.array(load.lam)
    lam[1, 1] = -0.2
    bad = LoadingState(lam, load.indicators, np.array([0.5, 1.0, 0.5, 0.5]), load.col_scale, -1.0,
                       load.idio_var)
    problems = validate_state(lat, bad, pat)
    assert "PositiveDiagonal cell not positive at (2,2)" in problems
    assert "tau outside (0,1)" in problems
    assert "kappa not strictly positive" in problems


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["plt", "unrestricted"]))
def test_simulated_truth_is_valid(seed, kind):
    pat = build_pattern(kind, 4, 2)
    lat, load, _ = gen_truth(12, 2, 4, pat, seed)
    assert validate_state(lat, load, pat) == []


def test_hyperparams_validated():
    assert Hyperparams().sigma2_alpha == 10.0
    with pytest.raises(ValueError):
        Hyperparams(c0=0.0)
