"""Network error exponents, their non-cooperative bounds and the parabolic approximation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVariance, NoNegativeRoot, ValidationError
from .lmgf import (
    CLASSIFY_TOL,
    ROOT_TOL,
    agent_class,
    classify_agents,
    lmgf_ave,
    lmgfs_for,
    negative_zero,
    phi_integral,
)
from .models import QUAD_TOL

FEASIBILITY_MARGIN = 1e-12
ARGMIN_TIE_TOL = 1e-12


def _check_pi(agents, pi):
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (len(agents),):
        raise ValidationError(f"pi has length {pi.size}, expected {len(agents)}")
    if (pi <= 0).any() or abs(pi.sum() - 1.0) > 1e-10:
        raise ValidationError("pi must be strictly positive and sum to 1")
    return pi


def _wrong_hypotheses(agents):
    sizes = {a.n_hypotheses for a in agents}
    if len(sizes) != 1:
        raise ValidationError("all agents must share the hypothesis set")
    return range(1, sizes.pop())


def m_ave(agents, pi, theta) -> float:
    return float(sum(w * lm.d for w, lm in zip(np.asarray(pi, float), lmgfs_for(agents, theta))))


def c_ave(agents, pi, theta) -> float:
    return float(sum(w * w * lm.rho for w, lm in zip(np.asarray(pi, float), lmgfs_for(agents, theta))))


def _ave_fn(agents, pi, theta):
    lms = lmgfs_for(agents, theta)
    pi = np.asarray(pi, float)
    active = [(w, lm) for w, lm in zip(pi, lms) if not lm.identically_zero]

    def fn(t):
        return sum(lm(w * t) for w, lm in active) if active else 0.0

    return fn


def critical_t(agents, pi, theta, tol=ROOT_TOL) -> float:
    """Negative zero of the network LMGF."""
    m = m_ave(agents, pi, theta)
    if m <= FEASIBILITY_MARGIN:
        raise NoNegativeRoot(f"m_ave = {m:.3g} <= 0 for hypothesis index {theta}: pi is infeasible")
    c = c_ave(agents, pi, theta)
    start = -2.0 * m / c if c > 0 else -1.0
    return float(negative_zero(_ave_fn(agents, pi, theta), start, tol))


def theta_exponent(agents, pi, theta, tol=QUAD_TOL, root_tol=ROOT_TOL) -> float:
    pi = np.asarray(pi, float)
    if all(lm.identically_zero for lm in lmgfs_for(agents, theta)):
        return 0.0
    t_star = critical_t(agents, pi, theta, root_tol)
    return -phi_integral(_ave_fn(agents, pi, theta), t_star, m_ave(agents, pi, theta), tol)


def parabolic_approx(agents, pi, theta):
    """``(t_hat, phi_hat) = (-2 m/c, m^2/c)`` from the second-order expansion of the network LMGF."""
    m, c = m_ave(agents, pi, theta), c_ave(agents, pi, theta)
    if c <= 0:
        raise DegenerateVariance(f"c_ave = {c} for hypothesis index {theta}")
    return -2.0 * m / c, m * m / c


@dataclass(frozen=True)
class ThetaExponent:
    theta: int
    m_ave: float
    c_ave: float
    feasible: bool
    phi_theta: float | None = None
    t_star: float | None = None
    t_hat: float | None = None
    phi_hat: float | None = None

    def to_dict(self):
        return {
            "theta": self.theta,
            "m_ave": self.m_ave,
            "c_ave": self.c_ave,
            "feasible": self.feasible,
            "phi_theta": self.phi_theta,
            "t_star": self.t_star,
            "t_hat": self.t_hat,
            "phi_hat": self.phi_hat,
        }


@dataclass(frozen=True)
class ExponentReport:
    pi: tuple
    per_theta: tuple
    feasible: bool
    phi: float | None
    argmin: tuple = field(default=())

    @property
    def argmin_canonical(self):
        return self.argmin[0] if self.argmin else None

    def exponent_for(self, theta) -> ThetaExponent:
        return next(e for e in self.per_theta if e.theta == theta)

    def to_dict(self):
        return {
            "pi": list(self.pi),
            "feasible": self.feasible,
            "phi": self.phi,
            "argmin": list(self.argmin),
            "theta_star": self.argmin_canonical,
            "per_theta": [e.to_dict() for e in self.per_theta],
        }


def _theta_entry(agents, pi, theta, tol, root_tol):
    m, c = m_ave(agents, pi, theta), c_ave(agents, pi, theta)
    if all(lm.identically_zero for lm in lmgfs_for(agents, theta)):
        return ThetaExponent(theta, m, c, True, 0.0, None, None, None)
    if m <= FEASIBILITY_MARGIN:
        return ThetaExponent(theta, m, c, False)
    t_star = critical_t(agents, pi, theta, root_tol)
    phi = -phi_integral(_ave_fn(agents, pi, theta), t_star, m, tol)
    t_hat, phi_hat = parabolic_approx(agents, pi, theta) if c > 0 else (None, None)
    return ThetaExponent(theta, m, c, True, phi, t_star, t_hat, phi_hat)


def error_exponent(agents, pi, tol=QUAD_TOL, root_tol=ROOT_TOL, workers=1) -> ExponentReport:
    """Exponent against every wrong hypothesis and the overall minimum.

    An infeasible ``pi`` (some ``m_ave <= 0``) is reported, not raised.
    """
    pi = _check_pi(agents, pi)
    thetas = list(_wrong_hypotheses(agents))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            entries = list(ex.map(lambda th: _theta_entry(agents, pi, th, tol, root_tol), thetas))
    else:
        entries = [_theta_entry(agents, pi, th, tol, root_tol) for th in thetas]
    feasible = all(e.feasible for e in entries)
    if not feasible:
        return ExponentReport(tuple(pi.tolist()), tuple(entries), False, None, ())
    phis = np.array([e.phi_theta for e in entries])
    best = float(phis.min())
    tied = tuple(th for th, p in zip(thetas, phis) if p <= best + ARGMIN_TIE_TOL)
    return ExponentReport(tuple(pi.tolist()), tuple(entries), True, best, tied)


@dataclass(frozen=True)
class ExponentBounds:
    theta: int
    lower: float
    upper: float

    def as_tuple(self):
        return self.lower, self.upper


def exponent_bounds(agents, theta, tol=CLASSIFY_TOL) -> ExponentBounds:
    """Smallest and summed non-cooperative exponents for one wrong hypothesis."""
    cls = classify_agents(agents, theta, tol)
    return ExponentBounds(theta, float(min(cls.phi_nc)), cls.phi_sum)


def phi_sum_nc(agents, theta, tol=CLASSIFY_TOL) -> float:
    return classify_agents(agents, theta, tol).phi_sum


def is_feasible(agents, pi) -> bool:
    return all(m_ave(agents, pi, th) > FEASIBILITY_MARGIN for th in _wrong_hypotheses(agents)
               if not all(lm.identically_zero for lm in lmgfs_for(agents, th)))


def informative_present(agents, theta, tol=CLASSIFY_TOL) -> bool:
    return any(agent_class(lm, tol) == "I" for lm in lmgfs_for(agents, theta))


def gaussian_phi_closed_form(agents, pi, theta) -> float:
    """Exact exponent for a network whose LMGFs are all quadratic: ``m^2 / c``."""
    _, phi = parabolic_approx(agents, pi, theta)
    return phi


def chernoff_grid(fn, slope0, t_grid, tol=QUAD_TOL):
    """Brute-force ``-min_t phi(t)`` over a grid; used as an oracle."""
    vals = np.array([phi_integral(fn, float(t), slope0, tol) for t in t_grid])
    i = int(np.argmin(vals))
    return -float(vals[i]), float(t_grid[i])


__all__ = [
    "ExponentBounds",
    "ExponentReport",
    "ThetaExponent",
    "c_ave",
    "chernoff_grid",
    "critical_t",
    "error_exponent",
    "exponent_bounds",
    "gaussian_phi_closed_form",
    "is_feasible",
    "lmgf_ave",
    "m_ave",
    "parabolic_approx",
    "phi_integral",
    "phi_sum_nc",
    "theta_exponent",
]
