"""Exponents and parabolic approximations for the accurate Laplace network.

Prints one row per combination matrix: five left-stochastic, five doubly-stochastic.
"""

import argparse

import numpy as np

from aslearn import network as net
from aslearn.config import ExperimentConfig
from aslearn.exponent import error_exponent, exponent_bounds

from _common import ROOT


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ROOT / "configs" / "laplace_accurate.json")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    cfg = ExperimentConfig.load(args.config)
    agents = cfg.build_agents()
    adj = net.gen_erdos_renyi(len(agents), cfg.network.p, np.random.default_rng(cfg.network.seed))
    rng = np.random.default_rng(args.seed)
    rows = [(f"L{i + 1}", net.gen_left_stochastic(adj, rng)) for i in range(5)]
    rows += [(f"D{i + 1}", net.gen_doubly_stochastic(adj, rng)) for i in range(5)]
    thetas = range(1, agents[0].n_hypotheses)
    print("upper bounds:", {th: round(exponent_bounds(agents, th).upper, 6) for th in thetas})
    print(f"{'matrix':>6} " + " ".join(f"{'phi' + str(th):>10} {'approx' + str(th):>10}" for th in thetas))
    for name, A in rows:
        rep = error_exponent(agents, net.perron_eigenvector(A))
        cells = " ".join(f"{e.phi_theta:10.6f} {e.phi_hat:10.6f}" for e in rep.per_theta)
        print(f"{name:>6} {cells}")


if __name__ == "__main__":
    main()
