import numpy as np
import pytest

from lsnet.model import Hyperparams, build_pattern
from lsnet.simulate import draw_prior_state, gen_interp, gen_network, seeded_rng


def random_state(rng, n=6, p=3, d=2, kind="plt", pivots=None, hp=None):
    pat = build_pattern(kind, p, d, pivots)
    return draw_prior_state(n, pat, hp or Hyperparams(), rng), pat


def random_problem(seed, n=6, p=3, d=2, kind="plt", pivots=None, hp=None):
    rng = seeded_rng(seed)
    state, pat = random_state(rng, n, p, d, kind, pivots, hp)
    net = gen_network(state.latent, seed + 1)
    y = gen_interp(state.latent, state.loading, seed + 2)
    return state, pat, net, y


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
