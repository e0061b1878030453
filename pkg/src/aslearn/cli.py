"""Command-line entry point: ``aslearn {classify,exponent,design,simulate,graph-gen}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import design as design_mod
from . import network as net
from .config import ExperimentConfig, NetworkSpec
from .errors import ASLError, ConfigurationError, EigenvectorIncompatible, NumericalError, ValidationError
from .exponent import error_exponent, exponent_bounds
from .lmgf import classify_agents
from .simulate import (
    SimulationConfig,
    adaptation_time_simulated,
    adaptation_time_theory,
    estimate_error_prob,
    fit_ldp_slope,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _rng(cfg, stream):
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, stream]))


# network helpers


def build_adjacency(cfg: ExperimentConfig, n_agents: int) -> net.Adjacency:
    spec = cfg.network or NetworkSpec()
    if spec.adjacency_file:
        return net.Adjacency(net.read_matrix(spec.adjacency_file) != 0)
    n = spec.n or n_agents
    if n != n_agents:
        raise ConfigurationError(f"network.n = {n} but {n_agents} agents are configured")
    seed = cfg.seed if spec.seed is None else spec.seed
    if spec.generator == "erdos_renyi":
        return net.gen_erdos_renyi(n, spec.p, np.random.default_rng(np.random.SeedSequence([seed, 1])))
    if spec.generator == "complete":
        return net.Adjacency.complete(n)
    if spec.generator == "ring":
        return net.Adjacency.ring(n)
    if spec.generator == "star":
        return net.Adjacency.star(n, spec.hub)
    raise ConfigurationError("network: give a generator, adjacency_file or matrix_file")


def resolve_pi(cfg, agents, A=None, source=None):
    src = cfg.pi if source is None else source
    if isinstance(src, tuple) and src and isinstance(src[0], tuple):
        pi = np.loadtxt(dict(src)["file"], ndmin=1)
    elif isinstance(src, tuple):
        pi = np.asarray(src, float)
    elif src == "uniform":
        pi = np.full(len(agents), 1.0 / len(agents))
    elif src == "design":
        d = cfg.design
        pi = np.asarray(design_mod.optimal_design(agents, d.epsilon, d.M, d.policy, cfg.tolerances.classify).pi)
    elif src == "matrix":
        pi = net.perron_eigenvector(build_matrix(cfg, agents) if A is None else A)
    else:
        pi = np.loadtxt(src, ndmin=1)
    if pi.shape != (len(agents),):
        raise ValidationError(f"pi has {pi.size} entries for {len(agents)} agents")
    return pi


def build_matrix(cfg, agents):
    spec = cfg.network or NetworkSpec()
    if spec.matrix_file:
        return net.validate_left_stochastic(net.read_matrix(spec.matrix_file))
    adj = build_adjacency(cfg, len(agents))
    kind = spec.matrix
    if kind == "left_stochastic":
        return net.gen_left_stochastic(adj, _rng(cfg, 2))
    if kind == "doubly_stochastic":
        return net.gen_doubly_stochastic(adj, _rng(cfg, 2))
    if kind == "uniform_averaging":
        return net.uniform_averaging(adj)
    source = "design" if kind == "design" else (cfg.pi if cfg.pi != "matrix" else "uniform")
    return net.matrix_from_eigenvector(adj, resolve_pi(cfg, agents, source=source))


# commands


def cmd_classify(cfg: ExperimentConfig, fmt="json"):
    agents = cfg.build_agents()
    out = []
    for th in range(1, agents[0].n_hypotheses):
        cls = classify_agents(agents, th, cfg.tolerances.classify, cfg.design.M)
        out.append(cls.to_dict())
    if fmt == "csv":
        rows = [(c["theta"], k, _label(c, k), c["t_nc"][k], c["phi_nc"][k], c["d"][k])
                for c in out for k in range(len(agents))]
        return _csv(rows, ["theta", "agent", "class", "t_nc", "phi_nc", "d"]), {}
    return _dumps({"hypotheses": out}), {}


def _label(c, k):
    return "U" if k in c["uninformative"] else ("I" if k in c["informative"] else "C")


def cmd_exponent(cfg: ExperimentConfig, fmt="json", pi_source=None):
    agents = cfg.build_agents()
    pi = resolve_pi(cfg, agents, source=pi_source)
    tol = cfg.tolerances
    rep = error_exponent(agents, pi, tol.quad, tol.root)
    bounds = {b.theta: b.as_tuple() for b in (exponent_bounds(agents, th, tol.classify)
                                               for th in range(1, agents[0].n_hypotheses))}
    body = rep.to_dict()
    for e in body["per_theta"]:
        e["bounds"] = list(bounds[e["theta"]])
    if fmt == "csv":
        rows = [(e["theta"], e["phi_theta"], e["phi_hat"], e["t_star"], e["t_hat"], e["m_ave"], e["c_ave"],
                 e["feasible"]) for e in body["per_theta"]]
        return _csv(rows, ["theta", "phi_theta", "phi_hat", "t_star", "t_hat", "m_ave", "c_ave", "feasible"]), {}
    return _dumps(body), {}


def cmd_design(cfg: ExperimentConfig, fmt="json", emit_matrix=False):
    agents = cfg.build_agents()
    d = cfg.design
    des = design_mod.optimal_design(agents, d.epsilon, d.M, d.policy, cfg.tolerances.classify)
    files = {}
    body = des.to_dict()
    if emit_matrix:
        adj = build_adjacency(cfg, len(agents))
        A = net.matrix_from_eigenvector(adj, des.pi)
        files["matrix.txt"] = net.format_matrix(A)
        body["matrix_file"] = "matrix.txt"
    if fmt == "csv":
        return _csv(list(enumerate(des.pi)), ["agent", "pi"]), files
    return _dumps(body), files


def cmd_simulate(cfg: ExperimentConfig, fmt="json"):
    agents = cfg.build_agents()
    A = build_matrix(cfg, agents)
    pi = net.perron_eigenvector(A)
    s = cfg.simulate
    files, steady = {}, []
    curves = {}
    for i, delta in enumerate(s.deltas):
        sim = SimulationConfig(delta=delta, horizon=s.horizon, replications=s.replications,
                               truth_schedule=s.truth_schedule, seed=(cfg.seed, i), tie_policy=s.tie_policy,
                               block_size=s.block_size, workers=s.workers)
        curve = estimate_error_prob(agents, A, sim)
        curves[delta] = curve
        files[f"curve_delta_{delta:g}.csv"] = curve.to_csv()
        steady.append({"delta": delta, "p_ave": curve.p_ave_terminal,
                       "stderr": float(curve.stderr_ave[-1]), "p_agent": curve.p_terminal.tolist()})
    summary = {"pi": pi.tolist(), "steady_state": steady}
    ps = [r["p_ave"] for r in steady]
    if len(s.deltas) >= 2 and all(0 < p < 1 for p in ps):
        summary["ldp_fit"] = fit_ldp_slope(s.deltas, ps).to_dict()
    adaptation = []
    for delta, curve in curves.items():
        for omega in s.omegas:
            entry = {"delta": delta, "omega": omega, "theory": adaptation_time_theory(omega, delta)}
            try:
                entry["simulated"] = adaptation_time_simulated(curve, omega)
            except ASLError as exc:
                entry["simulated"], entry["note"] = None, str(exc)
            adaptation.append(entry)
    summary["adaptation_time"] = adaptation
    files["summary.json"] = _dumps(summary)
    if s.plots:
        files.update(_plots(curves, steady))
    if fmt == "csv":
        rows = [(r["delta"], r["p_ave"], r["stderr"]) for r in steady]
        return _csv(rows, ["delta", "p_ave", "stderr"]), files
    return files["summary.json"], files


def _plots(curves, steady):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "aslearn"
    out = {}
    fig, ax = plt.subplots(figsize=(6, 4))
    for delta, c in curves.items():
        ax.semilogy(c.steps, np.maximum(c.p_ave, 1e-300), label=f"delta={delta:g}")
    ax.set_xlabel("step")
    ax.set_ylabel("average error probability")
    ax.legend()
    out["curves.svg"] = _svg(fig)
    fig, ax = plt.subplots(figsize=(6, 4))
    pts = [(1 / r["delta"], r["p_ave"]) for r in steady if r["p_ave"] > 0]
    if pts:
        x, y = zip(*pts)
        ax.semilogy(x, y, "o-")
    ax.set_xlabel("1/delta")
    ax.set_ylabel("steady-state average error probability")
    out["steady_state.svg"] = _svg(fig)
    plt.close("all")
    return out


def _svg(fig):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def cmd_graph_gen(cfg: ExperimentConfig, fmt="json"):
    n_agents = sum(a.repeat for a in cfg.agents)
    agents = cfg.build_agents()
    adj = build_adjacency(cfg, n_agents)
    A = build_matrix(cfg, agents)
    files = {"adjacency.txt": net.format_matrix(adj.edges.astype(int)), "matrix.txt": net.format_matrix(A)}
    body = {"n": adj.n, "strongly_connected": net.check_strong_connectivity(adj),
            "perron": net.perron_eigenvector(A).tolist(), "files": sorted(files)}
    if fmt == "csv":
        return files["matrix.txt"], files
    return _dumps(body), files


COMMANDS = {
    "classify": cmd_classify,
    "exponent": cmd_exponent,
    "design": cmd_design,
    "simulate": cmd_simulate,
    "graph-gen": cmd_graph_gen,
}


def build_parser():
    p = argparse.ArgumentParser(prog="aslearn", description="Adaptive social learning toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment file")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--out", help="directory for result files")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "exponent":
            sp.add_argument("--pi", help="uniform | design | matrix | path to a text file of weights")
        if name == "design":
            sp.add_argument("--emit-matrix", action="store_true",
                            help="also write a combination matrix on the configured topology")
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        kwargs = {"fmt": args.format}
        if args.command == "exponent" and args.pi:
            kwargs["pi_source"] = args.pi
        if args.command == "design":
            kwargs["emit_matrix"] = args.emit_matrix
        text, files = COMMANDS[args.command](cfg, **kwargs)
        out_dir = args.out or cfg.output_dir
        if out_dir:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            ext = "csv" if args.format == "csv" else "json"
            (out / f"{args.command}.{ext}").write_text(text)
            for name, content in files.items():
                (out / name).write_text(content)
        stdout.write(text)
        return EXIT_OK
    except EigenvectorIncompatible as exc:
        stderr.write(f"error: {exc} (agents: {list(exc.agents)})\n")
        return EXIT_VALIDATION
    except (ValidationError, FileNotFoundError, OSError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
