"""Monte Carlo simulation of the adaptive social learning recursion.

State is kept in log-ratio coordinates ``lam[k, h] = log mu_k(theta_1) - log mu_k(theta_{h+1})``
for the ``H - 1`` hypotheses other than index 0.  A block of replications is advanced
together with layout ``(agents, H - 1, replications)`` so that the combination step is a
single matrix product.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotReached, ValidationError
from .models import Gaussian, log_likelihood_ratio, sample_signal
from .network import validate_left_stochastic

TIE_POLICIES = ("strict", "lowest", "random")
MAX_RECORDED = 5000


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one Monte Carlo experiment.

    ``truth_schedule`` lists ``(start_step, hypothesis_index)`` pairs; the first must start at 0.
    ``block_size`` fixes how replications map onto random substreams, so results depend on it
    but not on ``workers``.
    """

    delta: float
    horizon: int
    replications: int = 1000
    truth_schedule: tuple = ((0, 0),)
    seed: int = 0
    initial_beliefs: object = "uniform"
    tie_policy: str = "strict"
    block_size: int = 5000
    workers: int = 1
    record_steps: tuple | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValidationError(f"step size must lie in (0, 1), got {self.delta}")
        if self.horizon < 0 or int(self.horizon) != self.horizon:
            raise ValidationError("horizon must be a non-negative integer")
        if self.replications < 1:
            raise ValidationError("need at least one replication")
        sched = tuple((int(s), int(h)) for s, h in self.truth_schedule)
        if not sched or sched[0][0] != 0:
            raise ValidationError("truth schedule must start at step 0")
        if any(b[0] <= a[0] for a, b in zip(sched, sched[1:])):
            raise ValidationError("truth schedule steps must be strictly increasing")
        object.__setattr__(self, "truth_schedule", sched)
        if self.tie_policy not in TIE_POLICIES:
            raise ValidationError(f"tie policy must be one of {TIE_POLICIES}")
        if self.block_size < 1 or self.workers < 1:
            raise ValidationError("block_size and workers must be positive")
        if self.record_steps is not None:
            steps = tuple(sorted({int(s) for s in self.record_steps}))
            if steps and (steps[0] < 0 or steps[-1] > self.horizon):
                raise ValidationError("recorded steps must lie in [0, horizon]")
            object.__setattr__(self, "record_steps", steps)

    def truth_at(self, step):
        current = self.truth_schedule[0][1]
        for start, h in self.truth_schedule:
            if start <= step:
                current = h
        return current

    def recorded(self):
        if self.record_steps is not None:
            return np.array(self.record_steps, dtype=int)
        stride = 1 if self.horizon <= MAX_RECORDED else math.ceil(self.horizon / MAX_RECORDED)
        steps = np.arange(0, self.horizon + 1, stride)
        if steps[-1] != self.horizon:
            steps = np.append(steps, self.horizon)
        return steps


# single-step updates


def asl_step(lam, x, A, delta):
    """One adapt-then-combine update in log-ratio form.

    ``lam`` and ``x`` have the agent index first; returns ``A^T ((1-delta) lam + delta x)``.
    """
    lam = np.asarray(lam, float)
    nu = (1.0 - delta) * lam + delta * np.asarray(x, float)
    return np.tensordot(np.asarray(A, float).T, nu, axes=1)


def asl_step_beliefs(mu, lik, A, delta):
    """Same update on beliefs: geometric adaptation then log-linear pooling.

    ``mu`` and ``lik`` are ``(agents, H)`` arrays of beliefs and likelihood values.
    """
    log_psi = (1.0 - delta) * np.log(mu) + delta * np.log(lik)
    log_psi -= log_psi.max(axis=1, keepdims=True)
    log_psi -= np.log(np.exp(log_psi).sum(axis=1, keepdims=True))
    pooled = np.asarray(A, float).T @ log_psi
    pooled -= pooled.max(axis=1, keepdims=True)
    out = np.exp(pooled)
    return out / out.sum(axis=1, keepdims=True)


def beliefs_to_log_ratios(mu):
    logmu = np.log(np.asarray(mu, float))
    return logmu[:, :1] - logmu[:, 1:]


def log_ratios_to_beliefs(lam):
    lam = np.asarray(lam, float)
    scores = np.concatenate([np.zeros((lam.shape[0], 1)), -lam], axis=1)
    scores -= scores.max(axis=1, keepdims=True)
    mu = np.exp(scores)
    return mu / mu.sum(axis=1, keepdims=True)


def _initial_lambda(agents, init):
    n, h = len(agents), agents[0].n_hypotheses
    if isinstance(init, str):
        if init != "uniform":
            raise ValidationError(f"unknown initial belief spec {init!r}")
        return np.zeros((n, h - 1))
    mu = np.asarray(init, float)
    if mu.shape != (n, h) or (mu <= 0).any() or np.abs(mu.sum(axis=1) - 1).max() > 1e-12:
        raise ValidationError("initial beliefs must be strictly positive rows summing to 1")
    return beliefs_to_log_ratios(mu)


def errors_from_lambda(lam, truth, policy, rng=None):
    """Error indicators per agent and replication from ``lam`` of shape ``(N, H-1, R)``."""
    if truth == 0 and policy == "strict":
        return lam.min(axis=1) <= 0
    n, hm1, r = lam.shape
    scores = np.concatenate([np.zeros((n, 1, r)), -lam], axis=1)
    best = scores.max(axis=1)
    at_max = scores >= best[:, None, :]
    if policy == "strict":
        others = np.delete(scores, truth, axis=1).max(axis=1)
        return others >= scores[:, truth, :]
    if policy == "lowest":
        return at_max.argmax(axis=1) != truth
    ties = at_max.sum(axis=1)
    hit = at_max[:, truth, :]
    u = rng.random(hit.shape)
    return ~hit | (u < 1.0 - 1.0 / ties)


# block kernel


@dataclass(frozen=True)
class _Plan:
    n: int
    hm1: int
    gaussian: bool
    gain: np.ndarray | None  # (n, H-1) slopes of the LLR in the observation
    offset: np.ndarray | None
    A_T: np.ndarray
    moments: dict = field(default_factory=dict)  # truth -> (signal means, signal sds)


def _plan(agents, A):
    n = len(agents)
    hm1 = agents[0].n_hypotheses - 1
    gaussian = all(a.gaussian_linear for a in agents)
    gain = offset = None
    if gaussian:
        gain = np.empty((n, hm1))
        offset = np.empty((n, hm1))
        for k, a in enumerate(agents):
            l1 = a.likelihoods[0]
            for h in range(hm1):
                lt = a.likelihoods[h + 1]
                gain[k, h] = (l1.mean - lt.mean) / l1.variance
                offset[k, h] = -gain[k, h] * (l1.mean + lt.mean) / 2
    return _Plan(n, hm1, gaussian, gain, offset, np.ascontiguousarray(np.asarray(A, float).T))


def _draw_llr(agents, plan, truth, rng, size):
    """Observations ``(N, size)`` for Gaussian plans, else LLR samples ``(N, H-1, size)``."""
    if plan.gaussian:
        if truth not in plan.moments:
            sigs = [a.under_truth(truth).signal for a in agents]
            plan.moments[truth] = (
                np.array([s.mean for s in sigs]),
                np.sqrt([s.variance + a.noise_variance for s, a in zip(sigs, agents)]),
            )
        mean, sd = plan.moments[truth]
        xi = rng.standard_normal((plan.n, size))
        xi *= sd[:, None]
        xi += mean[:, None]
        return xi, True
    x = np.empty((plan.n, plan.hm1, size))
    for k, a in enumerate(agents):
        xi = sample_signal(a.under_truth(truth), rng, size)
        for h in range(plan.hm1):
            x[k, h] = log_likelihood_ratio(a, h + 1, xi)
    return x, False


def _run_block(agents, plan, cfg, rng, size, rec_index):
    delta = cfg.delta
    lam0 = _initial_lambda(agents, cfg.initial_beliefs)
    lam = np.repeat(lam0[:, :, None], size, axis=2)
    counts = np.zeros((len(rec_index), plan.n), dtype=np.int64)
    if plan.gaussian:
        dg = (delta * plan.gain)[:, :, None]
        dc = (delta * plan.offset)[:, :, None]
    nu = np.empty_like(lam)
    flat_shape = (plan.n, plan.hm1 * size)

    def record(step, lam):
        truth = cfg.truth_at(step)
        err = errors_from_lambda(lam, truth, cfg.tie_policy, rng)
        slot = rec_index.get(step)
        if slot is not None:
            counts[slot] += err.sum(axis=1)

    if 0 in rec_index:
        record(0, lam)
    for step in range(1, cfg.horizon + 1):
        truth = cfg.truth_at(step)
        draw, is_obs = _draw_llr(agents, plan, truth, rng, size)
        np.multiply(lam, 1.0 - delta, out=nu)
        if is_obs:
            nu += dg * draw[:, None, :]
            nu += dc
        else:
            nu += delta * draw
        np.matmul(plan.A_T, nu.reshape(flat_shape), out=lam.reshape(flat_shape))
        if step in rec_index:
            record(step, lam)
    return counts, lam


def _decisions(lam_single):
    scores = np.concatenate([np.zeros((lam_single.shape[0], 1)), -lam_single], axis=1)
    return scores.argmax(axis=1)


# public drivers


@dataclass(frozen=True)
class Replication:
    decisions: np.ndarray  # (horizon, N) belief argmax per step (lowest index on ties)
    errors: np.ndarray  # (horizon, N) error indicators under the configured tie policy
    log_ratios: np.ndarray  # (horizon, N, H-1)


def run_replication(agents, A, cfg: SimulationConfig, rng: np.random.Generator) -> Replication:
    """A single trajectory over steps ``1..horizon``; empty arrays when the horizon is 0."""
    A = validate_left_stochastic(A)
    plan = _plan(agents, A)
    n, hm1 = plan.n, plan.hm1
    if cfg.horizon == 0:
        return Replication(np.zeros((0, n), int), np.zeros((0, n), bool), np.zeros((0, n, hm1)))
    lam = np.repeat(_initial_lambda(agents, cfg.initial_beliefs)[:, :, None], 1, axis=2)
    traj, errs = [], []
    for step in range(1, cfg.horizon + 1):
        truth = cfg.truth_at(step)
        draw, is_obs = _draw_llr(agents, plan, truth, rng, 1)
        x = plan.gain[:, :, None] * draw[:, None, :] + plan.offset[:, :, None] if is_obs else draw
        lam = asl_step(lam, x, A, cfg.delta)
        traj.append(lam[:, :, 0].copy())
        errs.append(errors_from_lambda(lam, truth, cfg.tie_policy, rng)[:, 0])
    traj = np.array(traj)
    return Replication(np.array([_decisions(t) for t in traj]), np.array(errs), traj)


@dataclass(frozen=True)
class ErrorCurve:
    steps: np.ndarray
    p_agent: np.ndarray  # (S, N)
    p_ave: np.ndarray  # (S,)
    replications: int
    truth: np.ndarray
    lambda_mean: np.ndarray  # terminal (N, H-1)
    lambda_stderr: np.ndarray
    terminal_lambda: np.ndarray | None = field(default=None, repr=False)

    @property
    def stderr_agent(self):
        return np.sqrt(self.p_agent * (1 - self.p_agent) / self.replications)

    @property
    def stderr_ave(self):
        return np.sqrt(self.p_ave * (1 - self.p_ave) / self.replications)

    @property
    def p_terminal(self):
        return self.p_agent[-1]

    @property
    def p_ave_terminal(self):
        return float(self.p_ave[-1])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "agent", "p_hat", "stderr"])
        se_a, se_v = self.stderr_agent, self.stderr_ave
        for i, step in enumerate(self.steps):
            for k in range(self.p_agent.shape[1]):
                w.writerow([int(step), k, repr(float(self.p_agent[i, k])), repr(float(se_a[i, k]))])
            w.writerow([int(step), "ave", repr(float(self.p_ave[i])), repr(float(se_v[i]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def estimate_error_prob(agents, A, cfg: SimulationConfig, keep_terminal=False) -> ErrorCurve:
    """Monte Carlo error frequencies per agent and recorded step."""
    A = validate_left_stochastic(A)
    if A.shape[0] != len(agents):
        raise ValidationError("matrix size does not match the number of agents")
    plan = _plan(agents, A)
    steps = cfg.recorded()
    rec_index = {int(s): i for i, s in enumerate(steps)}
    sizes = [min(cfg.block_size, cfg.replications - b) for b in range(0, cfg.replications, cfg.block_size)]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def job(i):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        counts, lam = _run_block(agents, plan, cfg, rng, sizes[i], rec_index)
        return counts, lam

    if cfg.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(job, range(len(sizes))))
    else:
        results = [job(i) for i in range(len(sizes))]

    counts = sum((r[0] for r in results), np.zeros((len(steps), plan.n), dtype=np.int64))
    lam_s = np.zeros((plan.n, plan.hm1))
    lam_ss = np.zeros((plan.n, plan.hm1))
    for _, lam in results:  # fixed block order keeps float sums reproducible
        lam_s += lam.sum(axis=2)
        lam_ss += (lam * lam).sum(axis=2)
    R = cfg.replications
    mean = lam_s / R
    var = np.maximum(lam_ss / R - mean * mean, 0.0) * (R / max(R - 1, 1))
    p = counts / R
    terminal = np.concatenate([r[1] for r in results], axis=2) if keep_terminal else None
    return ErrorCurve(
        steps=steps,
        p_agent=p,
        p_ave=p.mean(axis=1),
        replications=R,
        truth=np.array([cfg.truth_at(s) for s in steps]),
        lambda_mean=mean,
        lambda_stderr=np.sqrt(var / R),
        terminal_lambda=terminal,
    )


@dataclass(frozen=True)
class SteadyState:
    delta: float
    p_agent: np.ndarray
    p_ave: float
    replications: int

    @property
    def stderr_ave(self):
        return math.sqrt(self.p_ave * (1 - self.p_ave) / self.replications)


def steady_state_error(agents, A, cfg: SimulationConfig) -> SteadyState:
    """Terminal-step error frequencies."""
    if (1 - cfg.delta) ** cfg.horizon >= 1e-3:
        warnings.warn(
            f"horizon {cfg.horizon} is short for step size {cfg.delta}: transient weight "
            f"{(1 - cfg.delta) ** cfg.horizon:.2g} >= 1e-3",
            stacklevel=2,
        )
    cfg = SimulationConfig(**{**cfg.__dict__, "record_steps": (cfg.horizon,)})
    curve = estimate_error_prob(agents, A, cfg)
    return SteadyState(cfg.delta, curve.p_agent[-1], float(curve.p_ave[-1]), cfg.replications)


def eta(delta, i):
    if not 0 < delta < 1 or i < 0:
        raise DomainError("need 0 < delta < 1 and i >= 0")
    return (1.0 - (1.0 - delta) ** i) ** 2


def adaptation_time_theory(omega, delta) -> float:
    """Steps until the error decays with a ``(1 - omega)`` fraction of its steady-state exponent."""
    if not 0 < omega <= 1 or not 0 < delta < 1:
        raise DomainError(f"need 0 < omega <= 1 and 0 < delta < 1, got omega={omega}, delta={delta}")
    return math.log(1.0 - math.sqrt(1.0 - omega)) / math.log(1.0 - delta) if omega < 1 else 0.0


def adaptation_time_simulated(curve: ErrorCurve, omega, p_steady=None) -> int:
    """First recorded step from which ``log p_ave,i <= (1 - omega) log p_ave`` holds for good."""
    if not 0 < omega < 1:
        raise DomainError(f"omega must lie in (0, 1), got {omega}")
    p_ss = curve.p_ave_terminal if p_steady is None else p_steady
    if not 0 < p_ss < 1:
        raise DomainError(f"steady-state error must lie in (0, 1), got {p_ss}")
    with np.errstate(divide="ignore"):
        ok = np.log(curve.p_ave) <= (1 - omega) * math.log(p_ss)
    if not ok[-1]:
        raise NotReached(f"threshold for omega={omega} not reached within the recorded horizon")
    bad = np.flatnonzero(~ok)
    return int(curve.steps[0] if bad.size == 0 else curve.steps[bad[-1] + 1])


@dataclass(frozen=True)
class LdpFit:
    slope: float
    intercept: float
    per_delta: tuple

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "per_delta": list(self.per_delta)}


def fit_ldp_slope(deltas, p_ave, prefactor_power=0.0) -> LdpFit:
    """Least-squares fit of ``log p = b - slope / delta`` (optionally after removing ``delta**prefactor_power``).

    ``per_delta`` holds the raw ``-delta log p`` values.
    """
    d = np.asarray(deltas, float)
    p = np.asarray(p_ave, float)
    if d.size < 2 or (p <= 0).any() or (p >= 1).any():
        raise DomainError("need at least two step sizes with 0 < p < 1")
    y = np.log(p) - prefactor_power * np.log(d)
    coef, intercept = np.polyfit(1.0 / d, y, 1)
    return LdpFit(float(-coef), float(intercept), tuple(float(v) for v in -d * np.log(p)))


def gaussian_only(agents) -> bool:
    return all(isinstance(a.signal, Gaussian) and a.gaussian_linear for a in agents)
