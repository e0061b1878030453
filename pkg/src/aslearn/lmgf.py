"""Log-moment generating functions of log-likelihood ratios and agent classification.

``Lmgf(agent, theta)`` evaluates ``Lambda(t) = log E[exp(t x(theta))]`` where
``x(theta) = log L(xi|theta_1) - log L(xi|theta)`` and ``xi`` follows the agent's
observed signal.  Closed forms are used whenever the family allows it:

* ``gaussian``   Gaussian signal, equal-variance Gaussian likelihoods (LLR is Gaussian)
* ``laplace``    Laplace signal and likelihoods (integrand is piecewise exponential)
* ``exact_sum``  finite alphabets
* ``quadrature`` everything else, and on request for cross-checks
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from .errors import Divergent, IntegrationFailure, RootNotBracketed
from .models import (
    QUAD_TOL,
    AgentModel,
    Gaussian,
    Laplace,
    _breakpoints,
    expected_llr,
    llr_affine,
    llr_variance,
    log_likelihood_ratio,
)

PROBE_GRID = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
CLASSIFY_TOL = 1e-10
ROOT_TOL = 1e-12
BRACKET_LIMIT = 1e6
DEFAULT_M = 1.0


def _log_int_exp(r, lo, hi):
    """``log int_lo^hi exp(r (x - ref)) dx`` with ``ref = lo`` (or ``hi`` when ``lo`` is infinite)."""
    r = np.asarray(r, dtype=float)
    if np.isinf(hi):
        if (r >= 0).any():
            raise Divergent("integrand does not decay at +infinity")
        return -np.log(-r)
    if np.isinf(lo):
        if (r <= 0).any():
            raise Divergent("integrand does not decay at -infinity")
        return -np.log(r)
    width = hi - lo
    out = np.empty_like(r)
    small = np.abs(r * width) < 1e-12
    out[small] = math.log(width)
    rs = r[~small]
    pos = rs > 0
    val = np.empty_like(rs)
    # r > 0: exp(r w) (1 - exp(-r w)) / r ; r < 0: (1 - exp(r w)) / (-r)
    val[pos] = rs[pos] * width + np.log(-np.expm1(-rs[pos] * width)) - np.log(rs[pos])
    val[~pos] = np.log(-np.expm1(rs[~pos] * width)) - np.log(-rs[~pos])
    out[~small] = val
    return out


@dataclass(frozen=True, eq=False)
class Lmgf:
    """LMGF of one agent's log-likelihood ratio for one wrong hypothesis.

    ``d`` (mean), ``rho`` (variance) and ``identically_zero`` are computed once at construction.
    """

    agent: AgentModel
    theta: int
    method: str | None = None
    d: float = field(init=False)
    rho: float = field(init=False)
    identically_zero: bool = field(init=False)

    def __post_init__(self):
        agent, theta = self.agent, self.theta
        method = self.method
        if method is None:
            if agent.gaussian_linear:
                method = "gaussian"
            elif isinstance(agent.signal, Laplace) and isinstance(agent.likelihoods[0], Laplace):
                method = "laplace"
            elif agent.signal.discrete:
                method = "exact_sum"
            else:
                method = "quadrature"
        if method not in ("gaussian", "laplace", "exact_sum", "quadrature"):
            raise ValueError(f"unknown LMGF method {method!r}")
        object.__setattr__(self, "method", method)
        zero = theta == 0 or agent.likelihoods[theta] == agent.likelihoods[0]
        object.__setattr__(self, "identically_zero", zero)
        object.__setattr__(self, "d", 0.0 if zero else expected_llr(agent, theta))
        object.__setattr__(self, "rho", 0.0 if zero else llr_variance(agent, theta))

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.identically_zero:
            out = np.zeros_like(t)
        else:
            out = getattr(self, f"_eval_{self.method}")(t)
            out[t == 0] = 0.0
        if not np.isfinite(out).all():
            raise Divergent(f"LMGF is infinite at some t in {t[~np.isfinite(out)]}")
        return float(out[0]) if scalar else out

    # closed forms

    def _eval_gaussian(self, t):
        return self.d * t + 0.5 * self.rho * t * t

    def _eval_exact_sum(self, t):
        p = np.asarray(self.agent.observed_signal.probs)
        idx = np.flatnonzero(p > 0)
        x = log_likelihood_ratio(self.agent, self.theta, idx)
        return logsumexp(np.log(p[idx])[None, :] + t[:, None] * x[None, :], axis=1)

    def _eval_laplace(self, t):
        f = self.agent.observed_signal
        l1, lt = self.agent.likelihoods[0], self.agent.likelihoods[self.theta]
        knots = sorted({f.loc, l1.loc, lt.loc})
        edges = [-math.inf, *knots, math.inf]
        terms = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            ref = hi if math.isinf(lo) else lo
            probe = ref - 1.0 if math.isinf(lo) else (ref + 1.0 if math.isinf(hi) else 0.5 * (lo + hi))
            s_f = math.copysign(1.0, probe - f.loc)
            s_1 = math.copysign(1.0, probe - l1.loc)
            s_t = math.copysign(1.0, probe - lt.loc)
            # log f + t x is affine on this piece: slope r0 + t r1
            r0 = -s_f / f.scale
            r1 = s_t / lt.scale - s_1 / l1.scale
            at_ref = float(f.logpdf(ref)) + t * log_likelihood_ratio(self.agent, self.theta, ref)
            terms.append(at_ref + _log_int_exp(r0 + t * r1, lo, hi))
        return logsumexp(np.stack(terms), axis=0)

    # generic path

    def _domain_check(self, t):
        f = self.agent.observed_signal
        l1, lt = self.agent.likelihoods[0], self.agent.likelihoods[self.theta]
        if isinstance(l1, Gaussian):
            q = 0.5 / lt.variance - 0.5 / l1.variance
            if isinstance(f, Gaussian):
                bad = t * q >= 0.5 / f.variance
            elif q != 0:
                bad = t * q > 0
            else:
                g, _ = llr_affine(self.agent, self.theta)
                bad = np.abs(t * g) >= 1.0 / f.scale
        elif isinstance(f, Laplace):
            bad = np.abs(t * (1.0 / lt.scale - 1.0 / l1.scale)) >= 1.0 / f.scale
        else:
            bad = np.zeros_like(t, dtype=bool)
        if np.any(bad):
            raise Divergent(f"LMGF integral diverges at t={t[bad]}")

    def _eval_quadrature(self, t):
        agent, theta = self.agent, self.theta
        f = agent.observed_signal
        if f.discrete:
            p = np.asarray(f.probs)
            idx = np.flatnonzero(p > 0)
            x = log_likelihood_ratio(agent, theta, idx)
            return np.log(np.exp(t[:, None] * x[None, :]) @ p[idx])
        self._domain_check(t)
        lo, hi, pts = _breakpoints(agent, f)
        grid = np.array([lo, *pts, hi])
        xg = log_likelihood_ratio(agent, theta, np.linspace(lo, hi, 257))
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            shift = float(np.max(ti * xg))
            total = 0.0
            for a, b in zip(grid[:-1], grid[1:]):
                val, err, info, *msg = integrate.quad(
                    lambda x: math.exp(float(f.logpdf(x)) + ti * log_likelihood_ratio(agent, theta, x) - shift),
                    a,
                    b,
                    epsabs=QUAD_TOL * 1e-2,
                    epsrel=QUAD_TOL,
                    limit=200,
                    full_output=1,
                )
                if msg and err > 1e-8 * max(1.0, abs(val)):
                    raise IntegrationFailure(f"LMGF quadrature failed at t={ti}: {msg[0]}")
                total += val
            out[i] = shift + math.log(total)
        return out


@functools.lru_cache(maxsize=4096)
def get_lmgf(agent: AgentModel, theta: int, method: str | None = None) -> Lmgf:
    return Lmgf(agent, theta, method)


def lmgfs_for(agents, theta, method=None):
    return [get_lmgf(a, theta, method) for a in agents]


def lmgf_ave(agents, pi, theta, t, method=None):
    """``Lambda_ave(t) = sum_k Lambda_k(pi_k t)``."""
    pi = np.asarray(pi, dtype=float)
    total = 0.0
    for lm, w in zip(lmgfs_for(agents, theta, method), pi):
        total = total + lm(w * t)
    return total


def negative_zero(fn, start, tol=ROOT_TOL, limit=BRACKET_LIMIT):
    """Unique negative zero of a convex ``fn`` with ``fn(0) = 0`` and ``fn'(0) > 0``.

    Brackets by doubling outwards from ``start`` (and halving towards zero for the
    inner end), then refines with Brent's method.
    """
    start = -abs(start) if start else -1.0
    lo = start
    f_lo = fn(lo)
    while f_lo <= 0:
        if f_lo == 0:
            return lo
        lo *= 2.0
        if abs(lo) > limit:
            raise RootNotBracketed(f"no sign change of the LMGF down to t={lo}")
        f_lo = fn(lo)
    hi = start
    f_hi = fn(hi)
    for _ in range(2000):
        if f_hi < 0:
            break
        if f_hi == 0 and hi != lo:
            return hi
        hi *= 0.5
        f_hi = fn(hi)
    else:
        raise RootNotBracketed("LMGF is not negative near the origin")
    if f_hi >= 0:
        raise RootNotBracketed("LMGF is not negative near the origin")
    # tighten the outer end: the last doubling step may have overshot
    return optimize.brentq(fn, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class AgentClassification:
    """Partition of agents for one wrong hypothesis plus non-cooperative quantities."""

    theta: int
    uninformative: tuple
    informative: tuple
    conflicting: tuple
    t_nc: tuple
    phi_nc: tuple
    d: tuple

    @property
    def phi_sum(self):
        return float(sum(self.phi_nc))

    def label(self, k):
        if k in self.uninformative:
            return "U"
        return "I" if k in self.informative else "C"

    def to_dict(self):
        return {
            "theta": self.theta,
            "uninformative": list(self.uninformative),
            "informative": list(self.informative),
            "conflicting": list(self.conflicting),
            "t_nc": list(self.t_nc),
            "phi_nc": list(self.phi_nc),
            "d": list(self.d),
            "phi_sum": self.phi_sum,
            "bounds": [float(min(self.phi_nc)), self.phi_sum],
        }


def agent_class(lm: Lmgf, tol=CLASSIFY_TOL) -> str:
    if lm.identically_zero:
        return "U"
    try:
        probe = lm(np.array(PROBE_GRID))
        flat = bool(np.all(np.abs(probe) <= tol))
    except Divergent:
        flat = False
    if flat:
        return "U"
    return "I" if lm.d > tol else "C"


def noncoop_critical_t(agent, theta, tol=CLASSIFY_TOL, M=DEFAULT_M, root_tol=ROOT_TOL):
    """``t_k^nc(theta)``: negative zero for informative agents, 0 for conflicting, ``-M`` for uninformative."""
    lm = get_lmgf(agent, theta)
    cls = agent_class(lm, tol)
    if cls == "U":
        return -float(M)
    if cls == "C":
        return 0.0
    start = -2.0 * lm.d / lm.rho if lm.rho > 0 else -1.0
    return float(negative_zero(lm, start, root_tol))


def phi_integral(fn, t, slope0, tol=QUAD_TOL):
    """``phi(t) = int_0^t fn(tau)/tau dtau`` with the integrand continued by ``slope0`` at 0."""
    if t == 0:
        return 0.0

    def integrand(tau):
        return slope0 if tau == 0 else fn(tau) / tau

    val, err, info, *msg = integrate.quad(integrand, 0.0, t, epsabs=tol, epsrel=1e-12, limit=200, full_output=1)
    if msg and err > 10 * tol:
        raise IntegrationFailure(f"phi integral did not converge (error estimate {err:.3g}): {msg[0]}")
    return float(val)


def phi_nc(agent, theta, t, tol=QUAD_TOL):
    lm = get_lmgf(agent, theta)
    return phi_integral(lm, t, lm.d, tol)


def noncoop_exponent(agent, theta, tol=CLASSIFY_TOL, integ_tol=QUAD_TOL):
    """``Phi_k^nc(theta)``; zero unless the agent is informative."""
    lm = get_lmgf(agent, theta)
    if agent_class(lm, tol) != "I":
        return 0.0
    t_nc = noncoop_critical_t(agent, theta, tol)
    return -phi_integral(lm, t_nc, lm.d, integ_tol)


def classify_agents(agents, theta, tol=CLASSIFY_TOL, M=DEFAULT_M) -> AgentClassification:
    return _classify(tuple(agents), int(theta), float(tol), float(M))


@functools.lru_cache(maxsize=1024)
def _classify(agents, theta, tol, M):
    groups = {"U": [], "I": [], "C": []}
    t_nc, phis, ds = [], [], []
    for k, agent in enumerate(agents):
        lm = get_lmgf(agent, theta)
        cls = agent_class(lm, tol)
        groups[cls].append(k)
        t_nc.append(noncoop_critical_t(agent, theta, tol, M))
        phis.append(noncoop_exponent(agent, theta, tol) if cls == "I" else 0.0)
        ds.append(lm.d)
    return AgentClassification(
        theta=theta,
        uninformative=tuple(groups["U"]),
        informative=tuple(groups["I"]),
        conflicting=tuple(groups["C"]),
        t_nc=tuple(t_nc),
        phi_nc=tuple(phis),
        d=tuple(ds),
    )
