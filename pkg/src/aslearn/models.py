"""Distribution families, agent signal/likelihood models and their moments.

Hypotheses are addressed by 0-based index; index 0 is the reference (true)
hypothesis against which log-likelihood ratios are formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, IntegrationFailure, SupportViolation, ValidationError

# |x - centre| beyond which a density has fallen below 1e-16 of its peak
_LOG_PEAK_RATIO = math.log(1e16)
QUAD_TOL = 1e-10
TIE_TOL = 1e-9


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValidationError(f"Gaussian variance must be positive, got {self.variance}")

    discrete = False

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * (x - self.mean) ** 2 / self.variance - 0.5 * math.log(2 * math.pi * self.variance)

    def sample(self, rng, size=None):
        return rng.normal(self.mean, math.sqrt(self.variance), size=size)

    def truncation(self):
        half = math.sqrt(2 * _LOG_PEAK_RATIO * self.variance)
        return self.mean - half, self.mean + half

    @property
    def centre(self):
        return self.mean


@dataclass(frozen=True)
class Laplace:
    loc: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"Laplace scale must be positive, got {self.scale}")

    discrete = False

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.abs(x - self.loc) / self.scale - math.log(2 * self.scale)

    def sample(self, rng, size=None):
        return rng.laplace(self.loc, self.scale, size=size)

    def truncation(self):
        half = _LOG_PEAK_RATIO * self.scale
        return self.loc - half, self.loc + half

    @property
    def centre(self):
        return self.loc


@dataclass(frozen=True)
class FinitePMF:
    probs: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.probs)
        object.__setattr__(self, "probs", p)
        if len(p) < 1 or min(p) < 0 or abs(sum(p) - 1.0) > 1e-12:
            raise ValidationError(f"PMF must be non-negative and sum to 1, got {p}")

    discrete = True

    @property
    def size(self):
        return len(self.probs)

    def logpdf(self, x):
        x = np.asarray(x, dtype=int)
        with np.errstate(divide="ignore"):
            logp = np.log(np.asarray(self.probs))
        return logp[x]

    def sample(self, rng, size=None):
        return rng.choice(len(self.probs), size=size, p=self.probs)


DistributionModel = Union[Gaussian, Laplace, FinitePMF]


@dataclass(frozen=True)
class AgentModel:
    """Signal model ``f_k``, one likelihood per hypothesis, optional additive noise.

    ``noise_variance`` adds independent ``N(0, noise_variance)`` noise to every
    observation; it is only supported when the signal and all likelihoods are Gaussian.
    """

    signal: DistributionModel
    likelihoods: tuple
    noise_variance: float = 0.0

    def __post_init__(self):
        liks = tuple(self.likelihoods)
        object.__setattr__(self, "likelihoods", liks)
        if len(liks) < 2:
            raise ValidationError("an agent needs likelihoods for at least two hypotheses")
        kinds = {type(lik) for lik in liks}
        if len(kinds) != 1:
            raise ValidationError("all likelihoods of an agent must belong to the same family")
        if self.signal.discrete != liks[0].discrete:
            raise ValidationError("signal and likelihoods must share the support class")
        if self.signal.discrete:
            sizes = {d.size for d in (self.signal,) + liks}
            if len(sizes) != 1:
                raise ValidationError("PMFs of one agent must share the alphabet")
            supp = np.asarray(self.signal.probs) > 0
            for h, lik in enumerate(liks):
                if (np.asarray(lik.probs)[supp] == 0).any():
                    raise SupportViolation(f"likelihood {h} vanishes where the signal does not (infinite KL)")
        if self.noise_variance < 0:
            raise ValidationError("noise variance must be non-negative")
        if self.noise_variance > 0 and not (isinstance(self.signal, Gaussian) and isinstance(liks[0], Gaussian)):
            raise ConfigurationError("additive noise is only supported for Gaussian signal and likelihoods")

    @property
    def n_hypotheses(self):
        return len(self.likelihoods)

    @property
    def observed_signal(self) -> DistributionModel:
        """Distribution of the (possibly noisy) observation the agent actually sees."""
        if self.noise_variance > 0:
            return Gaussian(self.signal.mean, self.signal.variance + self.noise_variance)
        return self.signal

    @property
    def gaussian_linear(self) -> bool:
        """Gaussian signal and equal-variance Gaussian likelihoods: the LLR is affine in the observation."""
        return (
            isinstance(self.signal, Gaussian)
            and isinstance(self.likelihoods[0], Gaussian)
            and len({lik.variance for lik in self.likelihoods}) == 1
        )

    def under_truth(self, index: int) -> AgentModel:
        """The same agent when the data are generated by hypothesis ``index`` (``0`` keeps ``f_k``)."""
        if index == 0:
            return self
        return replace(self, signal=self.likelihoods[index])


@dataclass(frozen=True)
class HypothesisSet:
    labels: tuple = ("theta1", "theta2")
    true_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise ValidationError("need at least two hypotheses")
        if not 0 <= self.true_index < len(self.labels):
            raise ValidationError("true_index out of range")

    @property
    def size(self):
        return len(self.labels)


def noisy_gaussian_agent(means, variance, noise_level=0.0) -> AgentModel:
    """Shift-in-mean agent whose signal is ``L(.|theta_1)`` plus noise of variance ``noise_level * variance``."""
    liks = tuple(Gaussian(m, variance) for m in means)
    return AgentModel(signal=liks[0], likelihoods=liks, noise_variance=noise_level * variance)


def laplace_agent(locs, scale=1.0, signal=None) -> AgentModel:
    liks = tuple(Laplace(m, scale) for m in locs)
    return AgentModel(signal=liks[0] if signal is None else signal, likelihoods=liks)


def log_likelihood_ratio(agent: AgentModel, theta: int, xi):
    """``log L(xi|theta_1) - log L(xi|theta)``; vectorised over ``xi``."""
    ref = agent.likelihoods[0].logpdf(xi)
    alt = agent.likelihoods[theta].logpdf(xi)
    if np.isneginf(ref).any() or np.isneginf(alt).any():
        raise SupportViolation("observation outside the support of a likelihood")
    out = ref - alt
    return float(out) if np.ndim(out) == 0 else out


def llr_affine(agent: AgentModel, theta: int):
    """Slope/intercept of the LLR for gaussian-linear agents: ``x = g * xi + c``."""
    l1, lt = agent.likelihoods[0], agent.likelihoods[theta]
    g = (l1.mean - lt.mean) / l1.variance
    return g, -g * (l1.mean + lt.mean) / 2


def _breakpoints(agent: AgentModel, dist: DistributionModel):
    lo, hi = dist.truncation()
    pts = {dist.centre} | {lik.centre for lik in agent.likelihoods}
    return lo, hi, sorted(p for p in pts if lo < p < hi)


def expectation(agent: AgentModel, fn, dist: DistributionModel | None = None, tol=QUAD_TOL) -> float:
    """``E[fn(xi)]`` under ``dist`` (default: the observed signal); quadrature or exact sum."""
    dist = agent.observed_signal if dist is None else dist
    if dist.discrete:
        p = np.asarray(dist.probs)
        idx = np.flatnonzero(p > 0)
        return float(np.sum(p[idx] * fn(idx)))
    lo, hi, pts = _breakpoints(agent, dist)
    edges = [lo, *pts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err, info, *msg = integrate.quad(
            lambda x: math.exp(float(dist.logpdf(x))) * fn(x), a, b, epsabs=tol, epsrel=tol, limit=200, full_output=1
        )
        if msg and err > 10 * max(tol, tol * abs(val)):
            raise IntegrationFailure(f"quadrature did not converge on [{a}, {b}]: {msg[0]}")
        total += val
    return total


def kl_divergence(p: DistributionModel, q: DistributionModel, tol=QUAD_TOL) -> float:
    """``D(p || q)`` in nats."""
    if isinstance(p, FinitePMF) and isinstance(q, FinitePMF):
        if p.size != q.size:
            raise ValidationError("PMFs must share the alphabet")
        pp, qq = np.asarray(p.probs), np.asarray(q.probs)
        supp = pp > 0
        if (qq[supp] == 0).any():
            raise SupportViolation("q vanishes where p does not")
        return float(np.sum(pp[supp] * (np.log(pp[supp]) - np.log(qq[supp]))))
    if p.discrete or q.discrete:
        raise ValidationError("cannot compare a PMF with a density")
    if isinstance(p, Gaussian) and isinstance(q, Gaussian):
        return (
            0.5 * math.log(q.variance / p.variance)
            + (p.variance + (p.mean - q.mean) ** 2) / (2 * q.variance)
            - 0.5
        )
    if isinstance(p, Laplace) and isinstance(q, Laplace):
        gap = abs(p.loc - q.loc)
        return math.log(q.scale / p.scale) + gap / q.scale + (p.scale / q.scale) * math.exp(-gap / p.scale) - 1.0
    lo, hi = p.truncation()
    pts = sorted({c for c in (p.centre, q.centre) if lo < c < hi})
    edges = [lo, *pts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(
            lambda x: math.exp(float(p.logpdf(x))) * float(p.logpdf(x) - q.logpdf(x)), a, b, epsabs=tol, limit=200
        )
        total += val
    return max(total, 0.0)


def expected_llr(agent: AgentModel, theta: int) -> float:
    """``d_k(theta) = D(f||L(theta)) - D(f||L(theta_1))``."""
    if theta == 0:
        return 0.0
    if agent.gaussian_linear:
        g, c = llr_affine(agent, theta)
        return g * agent.observed_signal.mean + c
    f = agent.observed_signal
    return kl_divergence(f, agent.likelihoods[theta]) - kl_divergence(f, agent.likelihoods[0])


def llr_variance(agent: AgentModel, theta: int) -> float:
    """``rho_k(theta)``, the variance of the log-likelihood ratio under the observed signal."""
    if theta == 0 or agent.likelihoods[theta] == agent.likelihoods[0]:
        return 0.0
    if agent.gaussian_linear:
        g, _ = llr_affine(agent, theta)
        return g * g * agent.observed_signal.variance
    d = expected_llr(agent, theta)
    return expectation(agent, lambda x: (log_likelihood_ratio(agent, theta, x) - d) ** 2)


def sample_signal(agent: AgentModel, rng: np.random.Generator, size=None):
    """Draw observations from ``f_k``, adding Gaussian noise when configured."""
    xi = agent.signal.sample(rng, size)
    if agent.noise_variance > 0:
        xi = xi + rng.normal(0.0, math.sqrt(agent.noise_variance), size=size)
    return xi


def local_truth_set(agent: AgentModel, tol=TIE_TOL) -> frozenset:
    """Hypotheses whose KL divergence from the observed signal is within ``tol`` of the minimum."""
    f = agent.observed_signal
    kls = np.array([kl_divergence(f, lik) for lik in agent.likelihoods])
    return frozenset(int(h) for h in np.flatnonzero(kls <= kls.min() + tol))
