"""Optimal Perron eigenvector for the noisy Gaussian network and its exponents."""

import argparse
import json

from aslearn.config import ExperimentConfig
from aslearn.design import noisy_gaussian_design, optimal_design
from aslearn.exponent import error_exponent

from _common import ROOT


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ROOT / "configs" / "noisy_gaussian.json")
    p.add_argument("--policy", choices=("borrow", "constant"), default="borrow")
    args = p.parse_args()
    agents = ExperimentConfig.load(args.config).build_agents()
    des = optimal_design(agents, policy=args.policy)
    closed_pi, closed_sums = noisy_gaussian_design(agents)
    rep = error_exponent(agents, des.pi)
    print(json.dumps({
        "status": des.status,
        "pi": [round(v, 8) for v in des.pi],
        "closed_form_pi": [round(float(v), 8) for v in closed_pi],
        "phi_theta": {e.theta: e.phi_theta for e in rep.per_theta},
        "closed_form_sums": closed_sums,
    }, indent=2))


if __name__ == "__main__":
    main()
