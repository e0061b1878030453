import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aslearn.errors import Divergent
from aslearn.lmgf import (
    Lmgf,
    classify_agents,
    get_lmgf,
    lmgf_ave,
    noncoop_critical_t,
    noncoop_exponent,
)
from aslearn.models import (
    AgentModel,
    FinitePMF,
    Gaussian,
    Laplace,
    laplace_agent,
    log_likelihood_ratio,
    noisy_gaussian_agent,
    sample_signal,
)

from conftest import NOISY_GROUPS, make_laplace_agents, make_noisy_agents

T_GRID = np.array([-2.0, -1.3, -0.7, -0.2, 0.4, 0.9, 1.6, 2.0])

PMF_AGENT = AgentModel(FinitePMF((0.2, 0.5, 0.3)), (FinitePMF((0.3, 0.3, 0.4)), FinitePMF((0.1, 0.6, 0.3))))
SAMPLE_AGENTS = [
    noisy_gaussian_agent((0.0, 0.3), 1.0, 0.5),
    laplace_agent([0.0, 0.1, 0.2]),
    laplace_agent([0.0, 0.4], 1.0, signal=Laplace(0.1, 1.2)),
    AgentModel(Laplace(0.0, 1.0), (Laplace(0.0, 1.0), Laplace(0.2, 1.5))),
    PMF_AGENT,
]


@pytest.mark.parametrize("agent", SAMPLE_AGENTS)
def test_value_at_origin_is_exactly_zero(agent):
    assert Lmgf(agent, 1)(0.0) == 0.0


def test_quadratic_form_for_mismatched_gaussian(four_agents):
    lm = Lmgf(four_agents[1], 1)
    assert lm.method == "gaussian"
    np.testing.assert_allclose(lm(T_GRID), 0.015 * T_GRID + 0.005 * T_GRID**2, atol=1e-15)
    assert lm(-3.0) == pytest.approx(0.0, abs=1e-15)


def test_pmf_quadrature_path_matches_exact_sum():
    a = Lmgf(PMF_AGENT, 1, "exact_sum")(T_GRID)
    b = Lmgf(PMF_AGENT, 1, "quadrature")(T_GRID)
    np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("agent", SAMPLE_AGENTS[1:4])
def test_laplace_closed_form_matches_quadrature(agent):
    exact = Lmgf(agent, 1, "laplace")
    quad = Lmgf(agent, 1, "quadrature")
    ts = np.array([-0.9, -0.5, -0.1, 0.3, 0.8]) if agent.likelihoods[1].scale != 1.0 else T_GRID
    np.testing.assert_allclose(exact(ts), quad(ts), atol=1e-10)


def test_gaussian_quadrature_matches_closed_form():
    agent = noisy_gaussian_agent((0.0, 0.3), 1.0, 0.5)
    np.testing.assert_allclose(Lmgf(agent, 1, "quadrature")(T_GRID), Lmgf(agent, 1)(T_GRID), atol=1e-10)


def test_divergence_is_detected():
    # heavier-tailed alternative: the integrand grows like exp((t - 1)|x|) in the tails
    agent = AgentModel(Laplace(0.0, 1.0), (Laplace(0.0, 1.0), Laplace(0.0, 0.5)))
    with pytest.raises(Divergent):
        Lmgf(agent, 1)(2.0)
    with pytest.raises(Divergent):
        Lmgf(agent, 1, "quadrature")(2.0)
    wide = AgentModel(Gaussian(0.0, 1.0), (Gaussian(0.0, 1.0), Gaussian(0.0, 0.25)))
    with pytest.raises(Divergent):
        Lmgf(wide, 1, "quadrature")(1.0)


@pytest.mark.parametrize("index", [1, 2, 3])
@pytest.mark.parametrize("t", [-2.0, -1.0, 0.5, 2.0])
def test_quadrature_matches_monte_carlo(index, t):
    agent = SAMPLE_AGENTS[index]
    try:
        value = Lmgf(agent, 1, "quadrature")(t)
    except Divergent:
        pytest.skip("outside the finite domain")
    rng = np.random.default_rng([index, int(10 * t) + 100])
    w = np.exp(t * log_likelihood_ratio(agent, 1, sample_signal(agent, rng, 1_000_000)))
    estimate = math.log(w.mean())
    se = w.std() / (w.mean() * math.sqrt(w.size))
    assert abs(value - estimate) < 3 * se


def test_network_lmgf_reductions(noisy_agents):
    pi = np.full(10, 0.1)
    assert lmgf_ave(noisy_agents, pi, 1, 0.0) == 0.0
    a = SAMPLE_AGENTS[1]
    assert lmgf_ave([a], [1.0], 1, -0.8) == Lmgf(a, 1)(-0.8)


def test_network_lmgf_quadratic_in_noisy_model(noisy_agents):
    weights = np.concatenate([np.full(c, 1 / (1 + r)) for _, _, r, c in NOISY_GROUPS])
    pi = weights / weights.sum()
    alpha, beta2 = [], []
    for means, var, ratio, count in NOISY_GROUPS:
        gap = means[0] - means[1]
        alpha += [gap**2 / (2 * var)] * count
        beta2 += [gap**2 / var * (1 + ratio)] * count
    lin = float(np.dot(pi, alpha))
    quad = float(np.dot(pi**2, beta2)) / 2
    for t in T_GRID * 5:
        assert lmgf_ave(noisy_agents, pi, 1, t) == pytest.approx(lin * t + quad * t * t, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=10, max_size=10), st.floats(-30, 30))
def test_network_lmgf_is_additive(raw, t):
    agents = make_laplace_agents()
    pi = np.array(raw) / sum(raw)
    direct = lmgf_ave(agents, pi, 2, t)
    by_agent = sum(get_lmgf(a, 2)(w * t) for a, w in zip(agents, pi))
    assert direct == pytest.approx(by_agent, abs=1e-12)


def test_classification_of_four_agent_example(four_agents):
    cls = classify_agents(four_agents, 1)
    assert (cls.uninformative, cls.informative, cls.conflicting) == ((3,), (1,), (0, 2))
    assert [cls.label(k) for k in range(4)] == ["C", "I", "C", "U"]


@pytest.mark.parametrize("theta", [1, 2])
def test_accurate_models_have_no_conflicting_agents(theta):
    for agents in (make_laplace_agents(), make_noisy_agents()):
        assert classify_agents(agents, theta).conflicting == ()


def test_identical_likelihoods_are_uninformative():
    agent = laplace_agent([0.3, 0.3, 0.0])
    cls = classify_agents([agent], 1)
    assert cls.uninformative == (0,)
    assert cls.t_nc == (-1.0,)
    assert classify_agents([agent], 1, M=2.5).t_nc == (-2.5,)


def test_noncooperative_critical_points(four_agents):
    assert noncoop_critical_t(four_agents[1], 1) == pytest.approx(-3.0, abs=1e-12)
    assert noncoop_critical_t(four_agents[0], 1) == 0.0
    assert noncoop_critical_t(four_agents[3], 1) == -1.0
    for a in make_laplace_agents():
        for theta in (1, 2):
            if get_lmgf(a, theta).d > 0:
                assert noncoop_critical_t(a, theta) == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("group", range(3))
def test_noisy_critical_point_closed_form(group):
    means, var, ratio, _ = NOISY_GROUPS[group]
    agent = noisy_gaussian_agent(means, var, ratio)
    for theta in (1, 2):
        if means[theta] != means[0]:
            assert noncoop_critical_t(agent, theta) == pytest.approx(-1 / (1 + ratio), abs=1e-12)


def test_noncooperative_exponents(four_agents):
    agent = noisy_gaussian_agent((0.0, 0.1, 0.1), 1.0, 1.0)
    assert noncoop_exponent(agent, 1) == pytest.approx(0.1**2 / (4 * 1 * (1 + 1)), rel=1e-9)
    assert noncoop_exponent(four_agents[3], 1) == 0.0
    assert noncoop_exponent(four_agents[2], 1) == 0.0
    assert noncoop_exponent(four_agents[1], 1) == pytest.approx(0.0225, rel=1e-9)


PROPERTY_AGENTS = st.sampled_from(SAMPLE_AGENTS + make_noisy_agents()[::3] + make_laplace_agents()[:4])


@settings(max_examples=40, deadline=None)
@given(PROPERTY_AGENTS, st.integers(1, 2), st.floats(-3, 3), st.floats(0.01, 0.3))
def test_strict_convexity_on_grids(agent, theta, t0, h):
    if theta >= agent.n_hypotheses:
        theta = 1
    lm = Lmgf(agent, theta)
    if lm.identically_zero:
        return
    try:
        a, b, c = lm(np.array([t0 - h, t0, t0 + h]))
    except Divergent:
        return
    assert a - 2 * b + c >= -1e-9


@settings(max_examples=40, deadline=None)
@given(PROPERTY_AGENTS, st.integers(1, 2))
def test_slope_at_origin_is_mean(agent, theta):
    if theta >= agent.n_hypotheses:
        theta = 1
    lm = Lmgf(agent, theta)
    for t in (-1e-6, 1e-6):
        assert lm(t) / t == pytest.approx(lm.d, abs=1e-4)


@pytest.mark.parametrize("agent", SAMPLE_AGENTS + make_laplace_agents()[:3])
def test_nonzero_root_sign_is_opposite_to_mean(agent):
    from scipy.optimize import brentq

    lm = Lmgf(agent, 1)
    if abs(lm.d) < 1e-12:
        return
    sign = -np.sign(lm.d)
    near = sign * 1e-4  # just past the origin the function has the sign of its slope there
    assert lm(near) < 0
    far = sign * 0.5
    while lm(far) <= 0:
        far *= 2
    assert np.sign(brentq(lm, near, far)) == sign
