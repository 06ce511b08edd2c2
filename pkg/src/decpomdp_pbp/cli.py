"""Command-line entry point: ``decpomdp-pbp {solve|verify|export|oracle}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dp, oracle
from .beliefs import pi_forward, theta_from_shared
from .info import StrategyProfile, enumerate_info, info_count, info_index
from .model import (
    InvalidProblemError,
    ProblemFormatError,
    build_paper_example,
    build_random_example,
    load_problem,
    separated_scenario,
)

log = logging.getLogger("decpomdp_pbp")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SAMPLE_ROWS = (("o2",), ("o2", "o1", "c2"), ("o2", "o2", "c2", "c2", "o1", "o1", "c1"))


def _scenario(name, seed):
    if name == "paper_example":
        return build_paper_example()
    if name == "separated":
        return separated_scenario(seed)
    if name == "random":
        return build_random_example(0 if seed is None else seed)
    if name == "tiny":
        return build_random_example(0 if seed is None else seed, horizon=2, delay=1)
    raise ValueError(name)


SCENARIOS = ("paper_example", "separated", "random", "tiny")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decpomdp-pbp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("solve", "run the person-by-person iteration"),
                            ("verify", "check a profile against the brute-force oracle"),
                            ("export", "write value tables, posteriors and strategies"),
                            ("oracle", "brute-force payoffs and benchmarks")):
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", choices=SCENARIOS)
        src.add_argument("--file", metavar="PATH", help="problem JSON")
        p.add_argument("--mode", choices=("time_first", "full_sweep"), default="time_first")
        p.add_argument("--max-outer", type=int, default=100)
        p.add_argument("--seed", type=int, default=None,
                       help="scenario seed (separated, random, tiny) and Monte-Carlo seed")
        p.add_argument("--init-seed", type=int, default=None,
                       help="start from a random profile instead of all-lowest actions")
        p.add_argument("--strategies", metavar="PATH",
                       help="use the strategies of a saved solve report instead of solving")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol-gap", type=float, default=1e-9)
        p.add_argument("--tol-posterior", type=float, default=1e-12)
        p.add_argument("--tol-markov", type=float, default=1e-10)
        if name == "oracle":
            p.add_argument("--samples", type=int, default=100_000)
    return parser


def _positive(parser, args):
    for name in ("tol_gap", "tol_posterior", "tol_markov"):
        if getattr(args, name) <= 0:
            parser.error(f"--{name.replace('_', '-')} must be positive")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.max_outer < 1:
        parser.error("--max-outer must be at least 1")


def _load_spec(args):
    if args.file:
        return load_problem(args.file)
    return _scenario(args.scenario, args.seed)


def _load_profile(spec, path):
    with open(path) as fh:
        doc = json.load(fh)
    doc = doc.get("strategies", doc)
    tables = []
    for t in range(1, spec.horizon + 1):
        row = []
        for k in range(spec.num_agents):
            entry = doc.get(f"t={t},agent={k}")
            if entry is None:
                raise ProblemFormatError(f"{path}: missing strategy 't={t},agent={k}'")
            tab = np.zeros(info_count(spec, t, k), dtype=np.int64)
            for info in enumerate_info(spec, t, k):
                label = entry.get(",".join(info.labels(spec)))
                if label is None:
                    raise ProblemFormatError(
                        f"{path}: strategy t={t}, agent={k} has no entry for {info.labels(spec)}")
                try:
                    tab[info_index(spec, info)] = spec.action_labels[k].index(label)
                except ValueError:
                    raise ProblemFormatError(f"{path}: unknown action {label!r}") from None
            row.append(tab)
        tables.append(row)
    return StrategyProfile(spec, tables)


def _solve(spec, args):
    init = None if args.init_seed is None else StrategyProfile.random(spec, args.init_seed)
    return dp.pbp_iterate(spec, init, mode=args.mode, max_outer=args.max_outer)


def _profile(spec, args):
    if args.strategies:
        return _load_profile(spec, args.strategies), None
    report = _solve(spec, args)
    return report.profile, report


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(spec, args) -> int:
    report = _solve(spec, args)
    doc = report.to_json()
    if args.out:
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    print(f"payoff {report.payoff:.10f}  sweeps {report.sweeps}  "
          f"equilibrium {report.equilibrium}")
    for k, v in enumerate(report.expected_values):
        print(f"agent {k}: E[V_1] = {v:.10f}  best-response gap {report.gaps[k]:.3g}")
    return EXIT_OK


def _check(results, name, ok, detail=""):
    results.append({"check": name, "pass": bool(ok), "detail": detail})


def run_verification(spec, profile, tol_gap=1e-9, tol_posterior=1e-12, tol_markov=1e-10,
                     threads=1) -> list:
    """All oracle cross-checks of a profile; one entry per check."""
    results = []
    eq = dp.verify_equilibrium(spec, profile, tol_gap)
    for k in range(spec.num_agents):
        _check(results, f"best-response gap (dp) agent {k}", eq["dp_gaps"][k] <= tol_gap,
               f"{eq['dp_gaps'][k]:.3g}")
        _check(results, f"best-response gap (oracle) agent {k}",
               eq["oracle_gaps"][k] <= tol_gap, f"{eq['oracle_gaps'][k]:.3g}")
    exact = eq["payoff"]
    via_pi = dp.payoff(spec, profile)
    _check(results, "payoff: shared-posterior vs joint law", abs(exact - via_pi) <= tol_gap,
           f"{exact:.12f} vs {via_pi:.12f}")

    def posterior_check(k):
        tree = dp.build_agent_tree(spec, k, profile)
        law = oracle.prefix_law(spec, k, profile)
        worst, where = 0.0, None
        for t in range(1, spec.horizon + 1):
            ex = oracle.exhaustive_posteriors(spec, k, profile, t, law)
            if set(ex) != set(tree.nodes(t)):
                return k, float("inf"), f"stage {t}: realization sets differ"
            for info, (_, post) in ex.items():
                d = float(np.max(np.abs(post - tree.nodes(t)[info].posterior.probs)))
                if d > worst:
                    worst, where = d, f"t={t} {info.labels(spec)}"
        return k, worst, where

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for k, worst, where in pool.map(posterior_check, range(spec.num_agents)):
            _check(results, f"private posterior vs exhaustive Bayes agent {k}",
                   worst <= tol_posterior, f"max diff {worst:.3g} at {where}")

    layers = pi_forward(spec, profile)
    for t in range(1, spec.horizon + 1):
        ex = oracle.exhaustive_pi(spec, profile, t)
        worst = max(float(np.max(np.abs(ex[s] - layers[t - 1][s][1].probs))) for s in ex)
        _check(results, f"shared posterior over current state and private blocks, t={t}",
               set(ex) == set(layers[t - 1]) and worst <= tol_posterior, f"max diff {worst:.3g}")
        if t > spec.delay:
            ex = oracle.exhaustive_theta(spec, profile, t)
            worst = max(float(np.max(np.abs(theta_from_shared(spec, s) - v))) for s, v in ex.items())
            _check(results, f"shared posterior over delayed state, t={t}", worst <= tol_posterior,
                   f"max diff {worst:.3g}")

    for k in range(spec.num_agents):
        ok, detail = markov_grouping(spec, k, profile, tol_markov)
        _check(results, f"next-posterior law depends on (posterior, shared block, action) agent {k}",
               ok, detail)

    report = dp.compression_report(spec, profile)
    for (t, k), entry in sorted(report.items()):
        _check(results, f"transition measure invariant to own private block t={t} agent {k}",
               entry["kernel_invariant"])
        if "terminal_consistent" in entry:
            _check(results, f"terminal value depends on (posterior, shared block) agent {k}",
                   entry["terminal_consistent"], f"{entry['terminal_groups']} groups")
    return results


def markov_grouping(spec, k, profile, tol=1e-10):
    res = oracle.markov_check(spec, k, profile)
    return res["max_diff"] <= tol, (f"{res['pairs']} pairs in {res['groups']} groups, "
                                    f"max diff {res['max_diff']:.3g}")


def cmd_verify(spec, args) -> int:
    profile, _ = _profile(spec, args)
    results = run_verification(spec, profile, args.tol_gap, args.tol_posterior,
                               args.tol_markov, args.threads)
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}  {r['detail']}")
    if args.out:
        _emit(json.dumps(results, indent=2) + "\n", args.out)
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_FAIL


def export_rows(spec, profile) -> list:
    """One row per (agent, stage, reachable realization)."""
    rows = []
    for k in range(spec.num_agents):
        tree = dp.build_agent_tree(spec, k, profile)
        values = dp.evaluate_agent(spec, k, profile, tree)
        reach = dp.reachable_infos(spec, tree, profile)
        for t in range(1, spec.horizon + 1):
            for info in sorted(tree.nodes(t), key=lambda i: info_index(spec, i)):
                rows.append({
                    "agent": k + 1,
                    "stage": t,
                    "realization": list(info.labels(spec)),
                    "shared": list(info.labels(spec)[:2 * spec.num_agents * len(info.shared_obs)]),
                    "on_path": info in reach[t - 1],
                    "value": values.values[t - 1][info],
                    "action": spec.action_labels[k][profile.action(info)],
                    "posterior": tree.nodes(t)[info].posterior.probs.ravel().tolist(),
                })
    return rows


def cmd_export(spec, args) -> int:
    profile, _ = _profile(spec, args)
    rows = export_rows(spec, profile)
    sample = [r for r in rows if tuple(r["realization"]) in SAMPLE_ROWS]
    if args.format == "json":
        doc = {"problem": spec.name, "rows": rows, "sample_values": sample,
               "strategies": profile.to_json()}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["agent", "stage", "realization", "on_path", "value", "action",
                    "posterior", "sample"])
        for r in rows:
            w.writerow([r["agent"], r["stage"], " ".join(r["realization"]), r["on_path"],
                        repr(r["value"]), r["action"], " ".join(repr(p) for p in r["posterior"]),
                        tuple(r["realization"]) in SAMPLE_ROWS])
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_oracle(spec, args) -> int:
    profile, _ = _profile(spec, args)
    doc = {"exact_payoff": oracle.exact_payoff(spec, profile)}
    mean, se = oracle.monte_carlo_payoff(spec, profile, args.samples, seed=args.seed)
    doc["monte_carlo"] = {"samples": args.samples, "mean": mean, "standard_error": se}
    doc["best_response_payoffs"] = [oracle.tree_best_response(spec, k, profile)[1]
                                    for k in range(spec.num_agents)]
    try:
        doc["team_optimal_payoff"] = oracle.enumerate_team_optimal(spec)[1]
    except oracle.SizeGuardError as exc:
        doc["team_optimal_payoff"] = None
        doc["team_optimal_skipped"] = str(exc)
    try:
        doc["common_information_payoff"] = oracle.common_info_dp(spec)[1]
    except (oracle.SizeGuardError, ValueError) as exc:
        doc["common_information_payoff"] = None
        doc["common_information_skipped"] = str(exc)
    if spec.num_agents == 1:
        doc["centralized_pomdp_value"] = oracle.centralized_pomdp_solve(spec)[1]
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "export": cmd_export, "oracle": cmd_oracle}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("DECPOMDP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    _positive(parser, args)
    try:
        spec = _load_spec(args)
        return COMMANDS[args.command](spec, args)
    except (ProblemFormatError, InvalidProblemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dp.NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
