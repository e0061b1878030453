"""Simulated against predicted adaptation time for several combination matrices."""

import argparse

import numpy as np

from aslearn import network as net
from aslearn.cli import build_matrix
from aslearn.config import ExperimentConfig
from aslearn.simulate import (
    SimulationConfig,
    adaptation_time_simulated,
    adaptation_time_theory,
    estimate_error_prob,
)

from _common import ROOT


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ROOT / "configs" / "noisy_gaussian.json")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--omegas", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    p.add_argument("--replications", type=int, default=100_000)
    p.add_argument("--horizon", type=int, default=1000)
    args = p.parse_args()
    cfg = ExperimentConfig.load(args.config)
    agents = cfg.build_agents()
    adj = net.gen_erdos_renyi(len(agents), cfg.network.p,
                              np.random.default_rng(np.random.SeedSequence([cfg.network.seed, 1])))
    rng = np.random.default_rng(cfg.seed)
    matrices = {"left-1": net.gen_left_stochastic(adj, rng), "left-2": net.gen_left_stochastic(adj, rng),
                "doubly-1": net.gen_doubly_stochastic(adj, rng), "doubly-2": net.gen_doubly_stochastic(adj, rng),
                "designed": build_matrix(cfg, agents)}
    theory = [adaptation_time_theory(w, args.delta) for w in args.omegas]
    print(f"{'matrix':>9} " + " ".join(f"w={w:<5g}" for w in args.omegas))
    print(f"{'theory':>9} " + " ".join(f"{t:7.1f}" for t in theory))
    for j, (name, A) in enumerate(matrices.items()):
        sim = SimulationConfig(delta=args.delta, horizon=args.horizon, replications=args.replications, seed=(cfg.seed, j))
        curve = estimate_error_prob(agents, A, sim)
        print(f"{name:>9} " + " ".join(f"{adaptation_time_simulated(curve, w):7d}" for w in args.omegas), flush=True)


if __name__ == "__main__":
    main()
