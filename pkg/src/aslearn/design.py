"""Perron eigenvector synthesis that attains (or nearly attains) the summed non-cooperative exponent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    ConflictingAgentsPresent,
    Infeasible,
    NoConflictingAgents,
    RootNotBracketed,
    ValidationError,
)
from .exponent import _wrong_hypotheses, error_exponent
from .lmgf import BRACKET_LIMIT, CLASSIFY_TOL, DEFAULT_M, ROOT_TOL, classify_agents, get_lmgf, phi_nc
from .models import Gaussian

DEFAULT_EPSILON = 1e-4
THETA_TIE_TOL = 1e-10
PI1_TOL = 1e-9
OPTIMAL_RTOL = 1e-6
UNINFORMATIVE_POLICIES = ("borrow", "constant")
M_SCAN = tuple(np.logspace(-3, 3, 61))

STATUS_OPTIMAL = "optimal_upper_bound_achieved"
STATUS_EPSILON = "epsilon_optimal"
STATUS_UNACHIEVABLE = "upper_bound_unachievable"


def phi_sums(agents, tol=CLASSIFY_TOL) -> dict:
    return {th: classify_agents(agents, th, tol).phi_sum for th in _wrong_hypotheses(agents)}


def theta_dagger(agents, tol=CLASSIFY_TOL, tie_tol=THETA_TIE_TOL) -> tuple:
    """All wrong hypotheses whose summed non-cooperative exponent is minimal; lowest index first."""
    sums = phi_sums(agents, tol)
    best = min(sums.values())
    return tuple(th for th, v in sorted(sums.items()) if v <= best + tie_tol)


def _placeholder_t(agents, k, theta, policy, M, tol):
    """Critical point used for an agent that carries no information about ``theta``.

    ``constant`` returns ``-M``.  ``borrow`` reuses the agent's own critical point for
    the wrong hypothesis (among those where it is informative) with the smallest
    summed exponent, and falls back to ``-M``.
    """
    if policy == "constant":
        return -float(M)
    if policy != "borrow":
        raise ValidationError(f"unknown placeholder policy {policy!r}; choose from {UNINFORMATIVE_POLICIES}")
    best = None
    for th in _wrong_hypotheses(agents):
        if th == theta:
            continue
        cls = classify_agents(agents, th, tol)
        if k in cls.informative and (best is None or cls.phi_sum < best[0]):
            best = (cls.phi_sum, cls.t_nc[k])
    return -float(M) if best is None else best[1]


def design_t(agents, theta, policy="borrow", M=DEFAULT_M, tol=CLASSIFY_TOL) -> np.ndarray:
    """Per-agent critical points with placeholders filled in for uninformative agents."""
    cls = classify_agents(agents, theta, tol, M)
    t = np.array(cls.t_nc, dtype=float)
    for k in cls.uninformative:
        t[k] = _placeholder_t(agents, k, theta, policy, M, tol)
    return t


def candidate_pi(agents, theta, policy="borrow", M=DEFAULT_M, tol=CLASSIFY_TOL) -> np.ndarray:
    """Weights proportional to the non-cooperative critical points."""
    cls = classify_agents(agents, theta, tol, M)
    if cls.conflicting:
        raise ConflictingAgentsPresent(f"agents {list(cls.conflicting)} conflict with hypothesis index {theta}")
    t = design_t(agents, theta, policy, M, tol)
    return t / t.sum()


def check_pi1_membership(agents, pi, theta, tol=PI1_TOL, report=None) -> bool:
    """Feasible, and the exponent against ``theta`` is the smallest one (within ``tol``)."""
    report = error_exponent(agents, pi) if report is None else report
    if not report.feasible:
        return False
    target = report.exponent_for(theta).phi_theta
    return all(target <= e.phi_theta + tol for e in report.per_theta)


def proportional(pi, t, members, tol=1e-9) -> bool:
    pi, t = np.asarray(pi, float), np.asarray(t, float)
    m = list(members)
    cross = np.outer(pi[m], t[m])
    return bool(np.all(np.abs(cross - cross.T) <= tol))


def proportionality_check(pi, agents, theta, tol=1e-9) -> bool:
    """Weights of the informative agents are proportional to their critical points."""
    cls = classify_agents(agents, theta)
    return proportional(pi, cls.t_nc, cls.informative, tol)


def _phi_root(agent, theta, level, tol):
    lm = get_lmgf(agent, theta)

    def g(t):
        return phi_nc(agent, theta, t) - level

    hi = -1e-3 if lm.rho == 0 else -min(1.0, 0.5 * np.sqrt(level / lm.rho))
    while g(hi) > 0:
        hi *= 0.5
        if abs(hi) < 1e-300:
            raise RootNotBracketed("phi does not fall below the target near zero")
    lo = 2.0 * hi
    while g(lo) < 0:
        lo *= 2.0
        if abs(lo) > BRACKET_LIMIT:
            raise RootNotBracketed(f"phi stays below {level} down to t={lo}")
    return optimize.brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def epsilon_t(agents, theta, epsilon=DEFAULT_EPSILON, tol=ROOT_TOL, class_tol=CLASSIFY_TOL) -> float:
    """Most negative ``t`` for which every conflicting agent keeps ``phi <= epsilon / |C|``.

    For a conflicting agent ``phi`` is decreasing on ``t < 0``, so the admissible set
    is an interval ending at 0 and its left end is the largest of the per-agent roots.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    cls = classify_agents(agents, theta, class_tol)
    if not cls.conflicting:
        raise NoConflictingAgents(f"no agent conflicts with hypothesis index {theta}")
    level = epsilon / len(cls.conflicting)
    return float(max(_phi_root(agents[k], theta, level, tol) for k in cls.conflicting))


def epsilon_pi(agents, theta, epsilon=DEFAULT_EPSILON, policy="borrow", M=DEFAULT_M, tol=CLASSIFY_TOL):
    cls = classify_agents(agents, theta, tol, M)
    t = design_t(agents, theta, policy, M, tol)
    if cls.conflicting:
        t[list(cls.conflicting)] = epsilon_t(agents, theta, epsilon, class_tol=tol)
    return t / t.sum()


@dataclass(frozen=True)
class EigenvectorDesign:
    theta_dagger: int
    tied: tuple
    pi: tuple
    status: str
    achieved_exponent: float | None
    upper_bound: float
    pi1_member: bool
    pi2_member: bool
    epsilon: float | None = None
    placeholder_M: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "theta_dagger": self.theta_dagger,
            "tied": list(self.tied),
            "pi": list(self.pi),
            "status": self.status,
            "epsilon": self.epsilon,
            "achieved_exponent": self.achieved_exponent,
            "upper_bound": self.upper_bound,
            "pi1_member": self.pi1_member,
            "pi2_member": self.pi2_member,
            "placeholder_M": self.placeholder_M,
            "diagnostics": self.diagnostics,
        }


def _design_for(agents, theta, epsilon, policy, M, tol):
    cls = classify_agents(agents, theta, tol, M)
    upper = cls.phi_sum
    if not cls.informative:
        raise Infeasible(f"no agent is informative about hypothesis index {theta}")

    def evaluate(pi, M_used):
        rep = error_exponent(agents, pi)
        member = check_pi1_membership(agents, pi, theta, report=rep)
        return rep, member, M_used

    if cls.conflicting:
        pi = epsilon_pi(agents, theta, epsilon, policy, M, tol)
        rep, member, M_used = evaluate(pi, M)
        ok = member and rep.phi is not None and rep.phi >= upper - epsilon - 1e-8
        status = STATUS_EPSILON if ok else STATUS_UNACHIEVABLE
    else:
        pi = candidate_pi(agents, theta, policy, M, tol)
        rep, member, M_used = evaluate(pi, M)
        if not rep.feasible and rep.exponent_for(theta).m_ave <= 0:
            raise Infeasible(f"candidate is infeasible for hypothesis index {theta}")
        if not member and cls.uninformative:
            # placeholder weights are free inside the proportional set; search their scale
            for M_try in M_SCAN:
                alt = candidate_pi(agents, theta, "constant", M_try, tol)
                alt_rep, alt_member, _ = evaluate(alt, M_try)
                if alt_member:
                    pi, rep, member, M_used = alt, alt_rep, True, M_try
                    break
        achieved = rep.phi
        ok = member and achieved is not None and abs(achieved - upper) <= OPTIMAL_RTOL * max(upper, 1e-300)
        status = STATUS_OPTIMAL if ok else STATUS_UNACHIEVABLE
    return EigenvectorDesign(
        theta_dagger=theta,
        tied=(),
        pi=tuple(float(v) for v in pi),
        status=status,
        achieved_exponent=rep.phi,
        upper_bound=upper,
        pi1_member=member,
        pi2_member=proportional(pi, cls.t_nc, cls.informative),
        epsilon=epsilon if cls.conflicting else None,
        placeholder_M=float(M_used) if cls.uninformative else None,
        diagnostics={
            "classification": cls.to_dict(),
            "exponent_report": rep.to_dict(),
        },
    )


def optimal_design(agents, epsilon=DEFAULT_EPSILON, M=DEFAULT_M, policy="borrow", tol=CLASSIFY_TOL):
    """Optimal (or epsilon-optimal) Perron eigenvector for the given agents.

    With several minimising hypotheses, a design is built for each and the one with
    the largest achieved exponent is returned.
    """
    tied = theta_dagger(agents, tol)
    designs = [_design_for(agents, th, epsilon, policy, M, tol) for th in tied]
    best = max(designs, key=lambda d: -np.inf if d.achieved_exponent is None else d.achieved_exponent)
    return EigenvectorDesign(**{**best.__dict__, "tied": tied})


def noisy_gaussian_design(agents) -> tuple:
    """Closed form for noisy shift-in-mean Gaussian agents.

    Returns ``(pi, phi_sums)`` with ``pi_k`` proportional to ``1/(1 + noise_k/variance_k)``
    and the summed exponent ``sum_k dm^2 / (4 variance_k (1 + noise_k/variance_k))`` per hypothesis.
    """
    for a in agents:
        if not (a.gaussian_linear and isinstance(a.signal, Gaussian) and a.signal == a.likelihoods[0]):
            raise ValidationError("closed form needs noisy shift-in-mean Gaussian agents with accurate signals")
    ratio = np.array([a.noise_variance / a.likelihoods[0].variance for a in agents])
    pi = 1.0 / (1.0 + ratio)
    sums = {}
    for th in _wrong_hypotheses(agents):
        sums[th] = float(sum(
            (a.likelihoods[0].mean - a.likelihoods[th].mean) ** 2 / (4 * a.likelihoods[0].variance * (1 + r))
            for a, r in zip(agents, ratio)
        ))
    return pi / pi.sum(), sums
