import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import cumulative_trapezoid

from aslearn.errors import DegenerateVariance, NoNegativeRoot, ValidationError
from aslearn.exponent import (
    c_ave,
    critical_t,
    error_exponent,
    exponent_bounds,
    is_feasible,
    m_ave,
    parabolic_approx,
    phi_sum_nc,
    theta_exponent,
)
from aslearn.lmgf import classify_agents, get_lmgf, lmgf_ave, phi_integral
from aslearn.models import AgentModel, FinitePMF, laplace_agent, noisy_gaussian_agent

from conftest import NOISY_GROUPS, make_laplace_agents, make_noisy_agents

# independent spreadsheet-style oracle for the noisy Gaussian network:
# summand = gap^2 / (4 variance (1 + ratio)) for every agent whose means differ
ORACLE_SUM = {
    1: 3 * 0.1**2 / (4 * 1 * 2) + 3 * 0.2**2 / (4 * 2 * 1.1),
    2: 3 * 0.1**2 / (4 * 1 * 2) + 4 * 0.3**2 / (4 * 3 * 1.0033),
}
FROZEN_SUM = {1: 0.0173864, 2: 0.0336513}


def design_weights():
    w = np.concatenate([np.full(c, 1 / (1 + r)) for _, _, r, c in NOISY_GROUPS])
    return w / w.sum()


def test_oracle_matches_frozen_values():
    for theta in (1, 2):
        assert ORACLE_SUM[theta] == pytest.approx(FROZEN_SUM[theta], abs=5e-8)


def test_mean_statistic(noisy_agents, four_agents):
    a = laplace_agent([0.0, 0.2, 0.1])
    assert m_ave([a] * 4, np.full(4, 0.25), 1) == pytest.approx(get_lmgf(a, 1).d)
    assert m_ave(noisy_agents, np.full(10, 0.1), 1) == pytest.approx((3 * 0.005 + 3 * 0.01) / 10, abs=1e-15)
    pi = np.array([0.01, 0.01, 0.97, 0.01])
    assert m_ave(four_agents, pi, 1) < 0


def test_variance_statistic(noisy_agents):
    a = noisy_gaussian_agent((0.0, 0.3), 1.0, 0.5)
    assert c_ave([a], [1.0], 1) == pytest.approx(0.09 * 1.5)
    # uniform weights: (3 * 0.02 + 3 * 0.022) / 100
    assert c_ave(noisy_agents, np.full(10, 0.1), 1) == pytest.approx(0.00126, abs=1e-15)
    assert c_ave([laplace_agent([0.1, 0.1])] * 2, [0.5, 0.5], 1) == 0.0


def test_phi_integral_gaussian_antiderivative():
    a, b = 0.015, 0.01
    assert phi_integral(lambda t: a * t + b * t * t / 2, -3.0, a) == pytest.approx(-0.0225, abs=1e-12)
    assert phi_integral(lambda t: a * t, 0.0, a) == 0.0


def test_phi_positive_for_conflicting_agent(four_agents):
    for k in (0, 2):
        lm = get_lmgf(four_agents[k], 1)
        for t in (-0.1, -1.0, -5.0):
            assert phi_integral(lm, t, lm.d) > 0


def test_critical_point_gaussian_formula(noisy_agents):
    pi = np.random.default_rng(3).dirichlet(np.ones(10))
    m, c = m_ave(noisy_agents, pi, 1), c_ave(noisy_agents, pi, 1)
    assert critical_t(noisy_agents, pi, 1) == pytest.approx(-2 * m / c, rel=1e-10)


def test_critical_point_single_accurate_agent():
    assert critical_t([laplace_agent([0.0, 0.3])], [1.0], 1) == pytest.approx(-1.0, abs=1e-10)


def test_critical_point_infeasible(four_agents):
    with pytest.raises(NoNegativeRoot):
        critical_t(four_agents, [0.01, 0.01, 0.97, 0.01], 1)


@pytest.mark.parametrize("theta", [1, 2])
def test_theta_exponent_equals_summed_closed_form(noisy_agents, theta):
    assert theta_exponent(noisy_agents, design_weights(), theta) == pytest.approx(ORACLE_SUM[theta], rel=1e-8)


def test_identical_agents_gain_factor_n():
    a = laplace_agent([0.0, 0.15])
    single = phi_sum_nc([a], 1)
    assert theta_exponent([a] * 6, np.full(6, 1 / 6), 1) == pytest.approx(6 * single, rel=1e-8)


def test_all_uninformative_exponent_is_zero():
    a = laplace_agent([0.1, 0.1])
    assert theta_exponent([a, a], [0.5, 0.5], 1) == 0.0


def test_error_exponent_report(noisy_agents):
    rep = error_exponent(noisy_agents, design_weights())
    assert rep.feasible
    assert rep.phi == pytest.approx(min(ORACLE_SUM.values()), rel=1e-8)
    assert rep.argmin == (1,)
    d = rep.to_dict()
    for key in ("phi_theta", "t_star", "m_ave", "c_ave", "phi_hat"):
        assert key in d["per_theta"][0]


def test_error_exponent_two_hypotheses():
    agents = [laplace_agent([0.0, 0.2]), laplace_agent([0.1, 0.0])]
    rep = error_exponent(agents, [0.4, 0.6])
    assert rep.phi == rep.exponent_for(1).phi_theta


def test_error_exponent_reports_infeasibility(four_agents):
    rep = error_exponent(four_agents, [0.01, 0.01, 0.97, 0.01])
    assert not rep.feasible and rep.phi is None
    assert not is_feasible(four_agents, [0.01, 0.01, 0.97, 0.01])
    with pytest.raises(ValidationError):
        error_exponent(four_agents, [0.5, 0.5, 0.0, 0.0])


def test_ties_are_all_reported():
    agents = [laplace_agent([0.0, 0.1, 0.1]), laplace_agent([0.0, 0.2, 0.2])]
    rep = error_exponent(agents, [0.5, 0.5])
    assert rep.argmin == (1, 2) and rep.argmin_canonical == 1


def test_parallel_evaluation_is_identical(laplace_agents):
    pi = np.random.default_rng(1).dirichlet(np.ones(10))
    assert error_exponent(laplace_agents, pi).to_dict() == error_exponent(laplace_agents, pi, workers=2).to_dict()


def test_bounds_for_noisy_network(noisy_agents):
    b = exponent_bounds(noisy_agents, 1)
    assert b.lower == 0.0
    assert b.upper == pytest.approx(ORACLE_SUM[1], rel=1e-9)


def test_bounds_identical_and_single_informative():
    a = laplace_agent([0.0, 0.15])
    phi = phi_sum_nc([a], 1)
    assert exponent_bounds([a] * 3, 1).as_tuple() == pytest.approx((phi, 3 * phi))
    b = exponent_bounds([a, laplace_agent([0.1, 0.1])], 1)
    assert b.as_tuple() == pytest.approx((0.0, phi))


def test_parabolic_is_exact_for_gaussian(noisy_agents):
    pi = design_weights()
    t_hat, phi_hat = parabolic_approx(noisy_agents, pi, 1)
    assert t_hat == pytest.approx(critical_t(noisy_agents, pi, 1), rel=1e-10)
    assert phi_hat == pytest.approx(theta_exponent(noisy_agents, pi, 1), rel=1e-8)


def test_parabolic_close_for_laplace(laplace_agents):
    rep = error_exponent(laplace_agents, np.full(10, 0.1))
    for e in rep.per_theta:
        assert abs(e.phi_hat - e.phi_theta) / e.phi_theta < 0.01


def test_parabolic_degenerate():
    with pytest.raises(DegenerateVariance):
        parabolic_approx([laplace_agent([0.1, 0.1])], [1.0], 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_gaussian_pipeline_agrees_with_closed_form(seed):
    agents = make_noisy_agents()
    pi = np.random.default_rng(seed).dirichlet(np.ones(10))
    for theta in (1, 2):
        _, phi_hat = parabolic_approx(agents, pi, theta)
        assert theta_exponent(agents, pi, theta) == pytest.approx(phi_hat, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["gaussian", "laplace"]))
def test_cooperation_bounds_hold(seed, kind):
    agents = make_noisy_agents() if kind == "gaussian" else make_laplace_agents()
    pi = np.random.default_rng(seed).dirichlet(np.ones(10))
    for theta in (1, 2):
        b = exponent_bounds(agents, theta)
        phi = theta_exponent(agents, pi, theta)
        assert b.lower - 1e-10 <= phi <= b.upper + 1e-10


@pytest.mark.parametrize("kind", ["gaussian", "laplace"])
def test_aggregate_inequality(kind):
    agents = make_noisy_agents() if kind == "gaussian" else make_laplace_agents()
    per_agent = [min(classify_agents(agents, th).phi_nc[k] for th in (1, 2)) for k in range(10)]
    assert sum(per_agent) <= min(phi_sum_nc(agents, th) for th in (1, 2)) + 1e-12


def test_phi_is_convex_on_a_grid(laplace_agents):
    pi = np.full(10, 0.1)
    lm = lambda t: lmgf_ave(laplace_agents, pi, 1, t)  # noqa: E731
    d = m_ave(laplace_agents, pi, 1)
    ts = np.linspace(-20, 5, 26)
    vals = np.array([phi_integral(lm, t, d) for t in ts])
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] >= -1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_uninformative_weights_do_not_matter(seed):
    agents = make_noisy_agents()
    rng = np.random.default_rng(seed)
    pi = np.random.default_rng(0).dirichlet(np.ones(10))
    alt = pi.copy()
    share = rng.dirichlet(np.ones(4))
    alt[6:] = share * pi[6:].sum()
    for t in (-8.0, -1.0, 2.0):
        assert lmgf_ave(agents, alt, 1, t) == pytest.approx(lmgf_ave(agents, pi, 1, t), abs=1e-10)
    assert theta_exponent(agents, alt, 1) == pytest.approx(theta_exponent(agents, pi, 1), abs=1e-10)


def test_pmf_exponent_against_brute_force_chernoff():
    agent = AgentModel(FinitePMF((0.5, 0.5)), (FinitePMF((0.6, 0.4)), FinitePMF((0.3, 0.7))))
    p = np.array([0.5, 0.5])
    x = np.log([0.6 / 0.3, 0.4 / 0.7])
    d = float(p @ x)
    tau = np.linspace(-6.0, 0.0, 600_001)
    lam = np.log(np.exp(np.outer(tau, x)) @ p)
    integrand = np.empty_like(tau)
    integrand[:-1] = lam[:-1] / tau[:-1]
    integrand[-1] = d
    # phi(t) = -int_t^0 integrand
    tail = cumulative_trapezoid(integrand[::-1], tau[::-1], initial=0.0)[::-1]
    brute = -float(np.min(tail))
    assert theta_exponent([agent], [1.0], 1) == pytest.approx(brute, abs=1e-6)
