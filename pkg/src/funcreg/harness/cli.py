"""Command-line entry point: ``funcreg <subcommand> <config> [--seed S] [--out DIR] [--jobs J]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import AssumptionViolated, ConfigError, FuncRegError, NotIdentifiable, RankDeficient
from . import emit, scenarios
from .config import ScenarioConfig, list_presets, load_config, validate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NOT_IDENTIFIABLE = 2
EXIT_RANK_DEFICIENT = 3
EXIT_CONFIG = 4


def _cmd_simulate(cfg: ScenarioConfig, out: Path, jobs: int) -> dict:
    result = scenarios.run_scenario(cfg, jobs)
    files = emit.emit_scenario(result, out)
    m = result.metrics
    print(f"min eigenvalue of A^T A: {m['min_eigenvalue']!r}")
    if "l2_mean_vs_beta" in m:
        print(f"L2(mean, beta) = {m['l2_mean_vs_beta']:.6g}   "
              f"L2(mean, projection) = {m['l2_mean_vs_projection']:.6g}")
    return files


def _cmd_bias(cfg: ScenarioConfig, out: Path, jobs: int) -> dict:
    res = scenarios.run_bias(cfg, jobs)
    files = {"bias": emit.write_json(out / emit.artifact_name(cfg.case, cfg.seed, "bias", "json"), res)}
    mc = res["monte_carlo"]
    gamma = res["gamma"] or [None] * len(mc["bias_E"])
    delta = res["delta"] or [None] * len(mc["bias_E"])
    z = mc["bias_vs_gamma_z"] or [None] * len(mc["bias_E"])
    rows = [[j, gamma[j], delta[j], mc["bias_E"][j], mc["bias_E_se"][j], z[j]]
            for j in range(len(mc["bias_E"]))]
    files["bias_csv"] = emit.write_table(
        out / emit.artifact_name(cfg.case, cfg.seed, "bias", "csv"),
        ["component", "gamma", "delta", "mc_bias", "mc_se", "z"], rows,
        {"case": cfg.case, "seed": cfg.seed})
    files["slln"] = emit.write_table(
        out / emit.artifact_name(cfg.case, cfg.seed, "slln", "csv"),
        ["n", "error"], [[r["n"], r["error"]] for r in res["slln"]],
        {"case": cfg.case, "seed": cfg.seed})
    print(f"min eigenvalue of A^T A: {res['min_eigenvalue']!r}")
    for r in res["slln"]:
        print(f"n = {r['n']:>6d}  ||gamma_n - gamma|| = {r['error']:.6g}")
    return files


def _cmd_counterexample(cfg: ScenarioConfig, out: Path, jobs: int) -> dict:
    rows = scenarios.run_counterexample(cfg)
    table = [[r["d"], r["delta_closed"], r["delta_moment"], abs(r["delta_closed"] - r["delta_moment"]),
              r["route"]] for r in rows]
    files = {"table": emit.write_table(
        out / f"counterexample_{cfg.seed}.csv",
        ["d", "delta_closed", "delta_moment", "abs_diff", "route"], table, {"seed": cfg.seed})}
    odd = [r["delta_closed"] for r in rows if r["d"] % 2 == 1]
    summary = {"seed": cfg.seed, "rows": rows,
               "odd_increasing": all(b > a for a, b in zip(odd, odd[1:])),
               "even_zero": all(r["delta_closed"] == 0.0 for r in rows if r["d"] % 2 == 0),
               "max_abs_diff": max((t[3] for t in table), default=0.0)}
    files["summary"] = emit.write_json(out / f"counterexample_{cfg.seed}.json", summary)
    for r in rows:
        print(f"d = {r['d']:>2d}  closed = {r['delta_closed']:.12g}  moment = {r['delta_moment']:.12g}"
              f"  ({r['route']})")
    return files


def _cmd_truncation(cfg: ScenarioConfig, out: Path, jobs: int) -> dict:
    res = scenarios.run_truncation_study(cfg, jobs)
    cols = ["d", "k", "gamma_norm", "bound", "beta_F_norm2", "n", "mc_error"]
    files = {"table": emit.write_table(out / f"truncation_{cfg.seed}.csv", cols,
                                       [[r[c] for c in cols] for r in res["rows"]],
                                       {"case": cfg.case, "seed": cfg.seed})}
    files["summary"] = emit.write_json(out / f"truncation_{cfg.seed}.json",
                                       {"case": cfg.case, "seed": cfg.seed, **res})
    for r in res["rows"]:
        print(f"d = {r['d']:>2d}  k = {r['k']:>2d}  ||gamma|| = {r['gamma_norm']:.3e}  "
              f"bound = {r['bound']:.3e}  MC error = {r['mc_error']:.4g}")
    return files


def _cmd_interlacing(cfg: ScenarioConfig, out: Path, jobs: int) -> dict:
    res = scenarios.run_interlacing(cfg, jobs)
    cols = ["trial", "size", "checks", "violations", "worst_margin"]
    files = {"table": emit.write_table(out / f"interlacing_{cfg.seed}.csv", cols,
                                       [[r[c] for c in cols] for r in res["rows"]], {"seed": cfg.seed})}
    files["summary"] = emit.write_json(out / f"interlacing_{cfg.seed}.json", {"seed": cfg.seed, **res})
    print(f"{res['trials']} families up to {res['max_size']}x{res['max_size']}: "
          f"{res['violations']} violations (worst margin {res['worst_margin']:.3e})")
    return files


COMMANDS = {
    "simulate": (_cmd_simulate, "Monte Carlo study of one scenario: curves CSV, summary JSON, SVG figure"),
    "bias": (_cmd_bias, "analytic collinearity bias, its PC form, SLLN path and Monte Carlo check"),
    "counterexample": (_cmd_counterexample, "diverging bias of the rotated-eigenbasis construction"),
    "truncation": (_cmd_truncation, "PC-truncated estimator along a dimension schedule"),
    "interlacing": (_cmd_interlacing, "eigenvalue interlacing on random nested symmetric families"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funcreg", description=__doc__.split(":")[0])
    parser.add_argument("--list-presets", action="store_true", help="print bundled config names and exit")
    sub = parser.add_subparsers(dest="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("config", help="config file path or bundled preset name")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: config, then $FUNCREG_OUT, then ./out)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for replicates (default 1)")
    return parser


def _diagnostics(cfg: ScenarioConfig, out: Path, exc: NotIdentifiable) -> Path:
    payload = {"case": cfg.case, "seed": cfg.seed, "subspace": cfg.subspace, "identifiable": False,
               "min_eigenvalue": exc.min_eigenvalue, "message": str(exc)}
    return emit.write_json(out / emit.artifact_name(cfg.case, cfg.seed, "diagnostics", "json"), payload)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(list_presets()))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
            validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_dir(args.out)
    handler = COMMANDS[args.command][0]
    try:
        files = handler(cfg, out, args.jobs)
    except NotIdentifiable as exc:
        print(f"not identifiable: min eigenvalue of A^T A = {exc.min_eigenvalue!r}", file=sys.stderr)
        _diagnostics(cfg, out, exc)
        return EXIT_NOT_IDENTIFIABLE
    except RankDeficient as exc:
        print(f"rank deficient: {exc}", file=sys.stderr)
        return EXIT_RANK_DEFICIENT
    except (ConfigError, AssumptionViolated) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FuncRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for key in sorted(files):
        print(f"wrote {files[key]}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
