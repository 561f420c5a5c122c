import numpy as np
import pytest

from lsnet.errors import DimensionError
from lsnet.likelihood import log_posterior
from lsnet.model import Hyperparams, LatentState, LoadingState, build_pattern, validate_state
from lsnet.sampler import Streams, initialize
from lsnet.simulate import TruthSettings, default_zero_rows, gen_interp, gen_network, gen_truth

PLT = build_pattern("plt", 4, 2)


def test_truth_deterministic_and_valid():
    a = gen_truth(30, 2, 4, PLT, 42)
    b = gen_truth(30, 2, 4, PLT, 42)
    assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2]
    assert validate_state(a[0], a[1], PLT) == []
    assert a[2]["zero_rows"] == [4]
    np.testing.assert_array_equal(a[1].lam[3], 0.0)
    lo, hi = TruthSettings().mean_weight
    assert lo <= a[2]["expected_mean_weight"] <= hi


def test_truth_position_moments():
    reps = 10_000
    pos = np.array([gen_truth(3, 2, 2, build_pattern("plt", 2, 2), s)[0].positions for s in range(reps)])
    # positions are centred over 3 nodes, so each coordinate has variance 2 (1 - 1/3)
    x = pos.reshape(reps, -1)
    se = np.sqrt(2.0 * (2 / 3) / reps)
    assert np.all(np.abs(x.mean(axis=0)) < 3 * se)
    var = x.var(axis=0, ddof=1)
    var_se = (4 / 3) * np.sqrt(2 / (reps - 1))
    assert np.all(np.abs(var - 4 / 3) < 3 * var_se)


def test_truth_settings_and_dims():
    with pytest.raises(DimensionError):
        gen_truth(30, 1, 4, PLT, 0)
    with pytest.raises(ValueError):
        gen_truth(30, 2, 4, PLT, 0, TruthSettings(zero_rows=(1,)))
    assert default_zero_rows(build_pattern("plt", 2, 2)) == ()
    lat, load, _ = gen_truth(10, 2, 4, PLT, 1, TruthSettings(min_abs_loading=0.9))
    active = load.lam[load.indicators == 1]
    assert np.all(np.abs(active) >= 0.9)


def test_network_limits():
    F = np.random.default_rng(0).normal(size=(2, 20))
    net = gen_network(LatentState(-30.0, F), 0)
    assert net.weights.sum() == 0
    np.testing.assert_array_equal(net.weights, net.weights.T)
    assert np.all(np.diag(net.weights) == 0)


def test_network_unit_intensity_mean():
    # all nodes coincide and alpha = 0: every pair has theta = 1; n=142 gives 10011 pairs
    net = gen_network(LatentState(0.0, np.zeros((2, 142))), 3)
    w = net.upper()
    assert abs(w.mean() - 1.0) < 3 * np.sqrt(1.0 / w.size)


def test_interp_limits():
    rng = np.random.default_rng(1)
    F = rng.normal(size=(2, 50))
    lam = np.array([[0.7, 0.0], [0.3, -1.2]])
    load = LoadingState(lam, (lam != 0).astype(int), np.full(2, 0.5), np.ones(2), 1.0, np.full(2, 1e-12))
    lat = LatentState(0.0, F)
    y = gen_interp(lat, load, 4)
    np.testing.assert_allclose(y.y, lam @ F, atol=1e-5)
    assert gen_interp(lat, load, 4) == y

    n = 10_000
    s2 = np.array([0.5, 2.0])
    zero = LoadingState(np.zeros((2, 2)), np.zeros((2, 2)), np.full(2, 0.5), np.ones(2), 1.0, s2)
    y = gen_interp(LatentState(0.0, rng.normal(size=(2, n))), zero, 5)
    var = y.y.var(axis=1, ddof=1)
    assert np.all(np.abs(var - s2) < 3 * s2 * np.sqrt(2 / (n - 1)))


@pytest.mark.parametrize("seed", range(5))
def test_pipeline_initializes_finite(seed):
    lat, load, _ = gen_truth(15, 2, 4, PLT, seed)
    net = gen_network(lat, seed + 100)
    y = gen_interp(lat, load, seed + 200)
    hp = Hyperparams()
    init = initialize(net, y, PLT, hp, Streams(seed).init)
    assert np.isfinite(log_posterior(net, y, init.latent, init.loading, hp, PLT))
