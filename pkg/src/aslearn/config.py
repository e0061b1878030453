"""JSON experiment configuration.

Every section is a dataclass; unknown keys are rejected with their dotted path, and
``ExperimentConfig.to_dict()`` gives the canonical form (all defaults filled in) so that
``from_dict(to_dict(cfg)) == cfg``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigurationError
from .models import AgentModel, FinitePMF, Gaussian, Laplace

FAMILIES = ("gaussian", "laplace", "pmf")
GENERATORS = ("erdos_renyi", "complete", "ring", "star")
MATRIX_KINDS = ("design", "from_pi", "left_stochastic", "doubly_stochastic", "uniform_averaging")
PI_SOURCES = ("uniform", "design", "matrix")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = ", ".join(f"{path}.{k}" if path else k for k in unknown)
        raise ConfigurationError(f"unknown key(s): {where}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"{path or 'config'}: {exc}") from None


def _float_list(v, path):
    if not isinstance(v, (list, tuple)) or not all(isinstance(x, (int, float)) for x in v):
        raise ConfigurationError(f"{path}: expected a list of numbers")
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class AgentSpec:
    """One agent family entry; ``repeat`` copies it that many times."""

    family: str
    means: tuple | None = None
    variance: float = 1.0
    noise_level: float = 0.0
    locs: tuple | None = None
    scale: float = 1.0
    likelihoods: tuple | None = None
    signal: object = None
    repeat: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"agent family must be one of {FAMILIES}, got {self.family!r}")
        if not isinstance(self.repeat, int) or self.repeat < 1:
            raise ConfigurationError("agent repeat must be a positive integer")
        if self.means is not None:
            object.__setattr__(self, "means", _float_list(self.means, "means"))
        if self.locs is not None:
            object.__setattr__(self, "locs", _float_list(self.locs, "locs"))
        if self.likelihoods is not None:
            object.__setattr__(self, "likelihoods", tuple(_float_list(r, "likelihoods") for r in self.likelihoods))
        sig = self.signal
        if isinstance(sig, list):
            object.__setattr__(self, "signal", _float_list(sig, "signal"))
        elif isinstance(sig, dict):
            object.__setattr__(self, "signal", tuple(sorted(sig.items())))
        required = {"gaussian": "means", "laplace": "locs", "pmf": "likelihoods"}[self.family]
        if getattr(self, required) is None:
            raise ConfigurationError(f"{self.family} agent needs '{required}'")

    def build(self) -> AgentModel:
        sig = dict(self.signal) if isinstance(self.signal, tuple) and self.signal and isinstance(self.signal[0], tuple) else self.signal
        if self.family == "gaussian":
            liks = tuple(Gaussian(m, self.variance) for m in self.means)
            signal = liks[0] if sig is None else Gaussian(sig["mean"], sig.get("variance", self.variance))
            return AgentModel(signal, liks, self.noise_level * self.variance)
        if self.family == "laplace":
            liks = tuple(Laplace(m, self.scale) for m in self.locs)
            signal = liks[0] if sig is None else Laplace(sig["loc"], sig.get("scale", self.scale))
            return AgentModel(signal, liks)
        liks = tuple(FinitePMF(p) for p in self.likelihoods)
        signal = liks[0] if sig is None else FinitePMF(sig)
        return AgentModel(signal, liks)

    def to_dict(self):
        out = {"family": self.family, "repeat": self.repeat}
        if self.family == "gaussian":
            out.update(means=list(self.means), variance=self.variance, noise_level=self.noise_level)
        elif self.family == "laplace":
            out.update(locs=list(self.locs), scale=self.scale)
        else:
            out.update(likelihoods=[list(r) for r in self.likelihoods])
        if self.signal is not None:
            sig = self.signal
            out["signal"] = dict(sig) if sig and isinstance(sig[0], tuple) else list(sig)
        return out


@dataclass(frozen=True)
class NetworkSpec:
    generator: str | None = "erdos_renyi"
    n: int | None = None
    p: float = 0.5
    hub: int = 0
    adjacency_file: str | None = None
    matrix_file: str | None = None
    matrix: str = "design"
    seed: int | None = None

    def __post_init__(self):
        if self.generator is not None and self.generator not in GENERATORS:
            raise ConfigurationError(f"network.generator must be one of {GENERATORS}")
        if self.matrix not in MATRIX_KINDS:
            raise ConfigurationError(f"network.matrix must be one of {MATRIX_KINDS}")


@dataclass(frozen=True)
class DesignSpec:
    epsilon: float = 1e-4
    M: float = 1.0
    policy: str = "borrow"

    def __post_init__(self):
        if not self.epsilon > 0 or not self.M > 0:
            raise ConfigurationError("design.epsilon and design.M must be positive")
        if self.policy not in ("borrow", "constant"):
            raise ConfigurationError("design.policy must be 'borrow' or 'constant'")


@dataclass(frozen=True)
class SimulateSpec:
    deltas: tuple = (0.05, 0.02, 0.01)
    horizon: int = 1000
    replications: int = 10_000
    truth_schedule: tuple = ((0, 0),)
    omegas: tuple = (0.3, 0.5, 0.7)
    tie_policy: str = "strict"
    block_size: int = 5000
    workers: int = 1
    plots: bool = False

    def __post_init__(self):
        d = _float_list(self.deltas, "simulate.deltas")
        if not d or any(not 0 < x < 1 for x in d):
            raise ConfigurationError("simulate.deltas must be a non-empty list of values in (0, 1)")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "omegas", _float_list(self.omegas, "simulate.omegas"))
        object.__setattr__(self, "truth_schedule", tuple(tuple(int(v) for v in e) for e in self.truth_schedule))
        if self.horizon < 0 or self.replications < 1:
            raise ConfigurationError("simulate.horizon must be >= 0 and replications >= 1")


@dataclass(frozen=True)
class Tolerances:
    classify: float = 1e-10
    quad: float = 1e-10
    root: float = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    agents: tuple
    hypotheses: tuple | None = None
    network: NetworkSpec | None = None
    pi: object = "uniform"
    design: DesignSpec = field(default_factory=DesignSpec)
    simulate: SimulateSpec = field(default_factory=SimulateSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if not self.agents:
            raise ConfigurationError("agents: at least one agent is required")
        if isinstance(self.pi, list):
            object.__setattr__(self, "pi", _float_list(self.pi, "pi"))
        elif isinstance(self.pi, dict):
            if set(self.pi) != {"file"}:
                raise ConfigurationError("pi: object form must be {\"file\": path}")
            object.__setattr__(self, "pi", (("file", self.pi["file"]),))
        elif isinstance(self.pi, str) and self.pi not in PI_SOURCES:
            raise ConfigurationError(f"pi must be a list, {{\"file\": ...}} or one of {PI_SOURCES}")
        if self.hypotheses is not None:
            object.__setattr__(self, "hypotheses", tuple(self.hypotheses))

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigurationError("config root must be an object")
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown key(s): {', '.join(unknown)}")
        if "agents" not in data:
            raise ConfigurationError("agents: missing")
        if not isinstance(data["agents"], list):
            raise ConfigurationError("agents: expected a list")
        data["agents"] = tuple(_build(AgentSpec, a, f"agents[{i}]") for i, a in enumerate(data["agents"]))
        for key, sub in (("network", NetworkSpec), ("design", DesignSpec), ("simulate", SimulateSpec),
                         ("tolerances", Tolerances)):
            if key in data and data[key] is not None:
                data[key] = _build(sub, data[key], key)
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_json(Path(path).read_text())

    def build_agents(self) -> list:
        agents = []
        for i, spec in enumerate(self.agents):
            try:
                model = spec.build()
            except (KeyError, TypeError) as exc:
                raise ConfigurationError(f"agents[{i}].signal: missing or invalid field {exc}") from None
            agents.extend([model] * spec.repeat)
        sizes = {a.n_hypotheses for a in agents}
        if len(sizes) != 1:
            raise ConfigurationError(f"agents disagree on the number of hypotheses: {sorted(sizes)}")
        if self.hypotheses is not None and len(self.hypotheses) != sizes.pop():
            raise ConfigurationError("hypotheses: label count differs from the agents' likelihood count")
        return agents

    def to_dict(self) -> dict:
        pi = self.pi
        if isinstance(pi, tuple):
            pi = {"file": pi[0][1]} if pi and isinstance(pi[0], tuple) else list(pi)
        sim = asdict(self.simulate)
        sim["truth_schedule"] = [list(e) for e in self.simulate.truth_schedule]
        sim["deltas"], sim["omegas"] = list(self.simulate.deltas), list(self.simulate.omegas)
        return {
            "agents": [a.to_dict() for a in self.agents],
            "hypotheses": None if self.hypotheses is None else list(self.hypotheses),
            "network": None if self.network is None else asdict(self.network),
            "pi": pi,
            "design": asdict(self.design),
            "simulate": sim,
            "tolerances": asdict(self.tolerances),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
