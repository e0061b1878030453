"""Steady-state error probability over a step-size grid and the fitted decay slope.

The slope of ``-log p`` against ``1/delta`` is compared with the exponent of the
network's Perron eigenvector.  ``--prefactor`` also reports a fit that removes a
``sqrt(delta)`` prefactor, which is the leading correction for Gaussian data.
"""

import argparse
import json

from aslearn import network as net
from aslearn.cli import build_matrix
from aslearn.config import ExperimentConfig
from aslearn.exponent import error_exponent
from aslearn.simulate import SimulationConfig, estimate_error_prob, fit_ldp_slope

from _common import ROOT


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ROOT / "configs" / "noisy_gaussian.json")
    p.add_argument("--deltas", type=float, nargs="+", default=[0.05, 0.02, 0.01])
    p.add_argument("--replications", type=int, default=100_000)
    p.add_argument("--horizon", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--prefactor", action="store_true")
    args = p.parse_args()
    cfg = ExperimentConfig.load(args.config)
    agents = cfg.build_agents()
    A = build_matrix(cfg, agents)
    target = error_exponent(agents, net.perron_eigenvector(A)).phi
    ps = []
    for i, delta in enumerate(args.deltas):
        sim = SimulationConfig(delta=delta, horizon=args.horizon, replications=args.replications,
                               seed=(cfg.seed, i), workers=args.workers, record_steps=(args.horizon,))
        ps.append(float(estimate_error_prob(agents, A, sim).p_ave[-1]))
        print(f"delta={delta:g}  p_ave={ps[-1]:.6g}", flush=True)
    out = {"exponent": target, "p_ave": ps, "fit": fit_ldp_slope(args.deltas, ps).to_dict()}
    if args.prefactor:
        out["fit_prefactor"] = fit_ldp_slope(args.deltas, ps, prefactor_power=0.5).to_dict()
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
