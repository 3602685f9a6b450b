"""Command-line driver: ``symmheat run|sweep|selftest|list-presets``.

Exit codes are 0 when everything passes, 1 on a verification or solver
failure and 2 on a configuration error. Every exit path of ``run``,
``sweep`` and ``selftest`` writes ``summary.json`` into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .acceptance import ALL_CRITERIA, TITLES, AcceptanceRun
from .config import dump_config, load_config
from .errors import ConfigError, DomainError, ExpressionError, SolverError
from .pipeline import run_scenario, run_sweep
from .sources import PRESETS

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("symmheat")


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_summary(out: Path, summary: dict):
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_scenario_csv(out: Path, result):
    """``<name>/comparison.csv`` and ``<name>/lp.csv`` for one scenario."""
    u, v = result.u_scan, result.v_surface
    rows = []
    for j, t in enumerate(u.times):
        for i, a in enumerate(u.a_grid):
            U, V = u.values[j, i], v.values[j, i]
            rows.append((_fmt(t), _fmt(a), _fmt(U), _fmt(V), _fmt(V - U)))
    _write_csv(out / result.config.name / "comparison.csv", ("t", "a", "U", "V", "V_minus_U"), rows)
    lp_rows = [(_fmt(g.time), _fmt(g.p), _fmt(g.lhs), _fmt(g.rhs), _fmt(g.gap))
               for g in result.report.lp_gaps]
    _write_csv(out / result.config.name / "lp.csv", ("t", "p", "lhs", "rhs", "gap"), lp_rows)


def _scenario_summary(result) -> dict:
    rep = result.report
    a, t = rep.worst
    return {
        "status": "fail" if not result.passed else rep.status,
        "max_gap": rep.global_max_gap,
        "max_gap_rel": rep.global_max_gap / max(rep.max_V, 1e-300),
        "worst_a": a,
        "worst_t": t,
        "max_V": rep.max_V,
        "route_gap_rel": result.route_gap,
        "equality_gap": rep.equality_gap,
        "checks": {k: {"ok": bool(ok), "value": float(val)} for k, (ok, val) in result.checks.items()},
        "elapsed_s": result.elapsed,
    }


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load(path, summary, out):
    """Parse a config; on failure record the diagnostic and return None."""
    try:
        return load_config(path)
    except ConfigError as exc:
        summary.update(verdict="config-error", error=str(exc))
        _write_summary(out, summary)
        print(f"configuration error: {exc}", file=sys.stderr)
        return None


def _echo_config(out, scenarios):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(dump_config(scenarios) + "\n")


def cmd_run(args) -> int:
    out = Path(args.out)
    summary = {"command": "run", "config": str(args.config), "version": __version__}
    scenarios = _load(args.config, summary, out)
    if scenarios is None:
        return EXIT_CONFIG
    _echo_config(out, scenarios)

    def one(cfg):
        try:
            return cfg, run_scenario(cfg), None
        except (ConfigError, ExpressionError) as exc:
            return cfg, None, ("config", exc)
        except (SolverError, DomainError) as exc:
            return cfg, None, ("solver", exc)

    outcomes = _map(one, scenarios, args.threads)
    summary["scenarios"] = {}
    code = EXIT_PASS
    for cfg, res, err in outcomes:
        if err is not None:
            kind, exc = err
            summary["scenarios"][cfg.name] = {"status": f"{kind}-error", "error": str(exc)}
            print(f"{cfg.name}: {kind} error: {exc}", file=sys.stderr)
            code = max(code, EXIT_CONFIG if kind == "config" else EXIT_FAIL)
            continue
        write_scenario_csv(out, res)
        info = _scenario_summary(res)
        summary["scenarios"][cfg.name] = info
        if not res.passed:
            code = max(code, EXIT_FAIL)
            print(f"FAIL {cfg.name}: max(U-V) = {info['max_gap']:.3e} at a = {info['worst_a']:.6g}, "
                  f"t = {info['worst_t']:.6g}; failed checks: {', '.join(res.failures())}",
                  file=sys.stderr)
        elif not args.quiet:
            print(f"{info['status']:>16}  {cfg.name}  max(U-V)/maxV = {info['max_gap_rel']:.3e}")
    summary["verdict"] = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_CONFIG: "config-error"}[code]
    _write_summary(out, summary)
    return code


def cmd_sweep(args) -> int:
    out = Path(args.out)
    summary = {"command": "sweep", "config": str(args.config), "version": __version__}
    scenarios = _load(args.config, summary, out)
    if scenarios is None:
        return EXIT_CONFIG
    flagged = [s for s in scenarios if s.flags.refinement_sweep]
    if not flagged:
        summary.update(verdict="config-error", error="no scenario has flags.refinement_sweep = true")
        _write_summary(out, summary)
        print("configuration error: no scenario has flags.refinement_sweep = true", file=sys.stderr)
        return EXIT_CONFIG
    _echo_config(out, flagged)

    def one(cfg):
        try:
            return cfg, run_sweep(cfg), None
        except ConfigError as exc:
            return cfg, None, ("config", exc)
        except (SolverError, DomainError) as exc:
            return cfg, None, ("solver", exc)

    code, rows = EXIT_PASS, []
    summary["scenarios"] = {}
    for cfg, outcome, err in _map(one, flagged, args.threads):
        if err is not None:
            kind, exc = err
            summary["scenarios"][cfg.name] = {"status": f"{kind}-error", "error": str(exc)}
            print(f"{cfg.name}: {kind} error: {exc}", file=sys.stderr)
            code = max(code, EXIT_CONFIG if kind == "config" else EXIT_FAIL)
            continue
        levels, ok = outcome
        table = [(lv.level, _fmt(lv.h), _fmt(lv.dt), _fmt(lv.max_gap_pos), _fmt(lv.equality_gap))
                 for lv in levels]
        _write_csv(out / cfg.name / "sweep.csv",
                   ("level", "h", "dt", "max_gap_pos", "equality_gap"), table)
        rows += table
        summary["scenarios"][cfg.name] = {
            "status": "pass" if ok else "fail",
            "max_gap_pos": [lv.max_gap_pos for lv in levels],
            "equality_gap": [lv.equality_gap for lv in levels],
        }
        if not ok:
            code = max(code, EXIT_FAIL)
            print(f"FAIL {cfg.name}: gaps do not shrink by 1.5x per level: "
                  f"{[f'{lv.max_gap_pos:.3e}' for lv in levels]}", file=sys.stderr)
        elif not args.quiet:
            gaps = ", ".join(f"{lv.max_gap_pos:.3e}" for lv in levels)
            print(f"pass  {cfg.name}  max(U-V)+ per level: {gaps}")
    if len(flagged) == 1:
        _write_csv(out / "sweep.csv", ("level", "h", "dt", "max_gap_pos", "equality_gap"), rows)
    summary["verdict"] = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_CONFIG: "config-error"}[code]
    _write_summary(out, summary)
    return code


def cmd_selftest(args) -> int:
    out = Path(args.out)
    numbers = ALL_CRITERIA if not args.only else tuple(sorted(set(args.only)))
    summary = {"command": "selftest", "version": __version__, "criteria": {}}
    runner = AcceptanceRun(config_dir=args.config_dir)
    try:
        runner.validate(numbers)
    except ConfigError as exc:
        summary.update(verdict="config-error", error=str(exc))
        _write_summary(out, summary)
        print(f"configuration error in bundled config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_PASS
    for k in numbers:
        try:
            res = runner.run(k)
        except (SolverError, DomainError) as exc:
            summary["criteria"][str(k)] = {"title": TITLES[k], "passed": False, "detail": str(exc)}
            print(f"[FAIL] criterion {k}: {TITLES[k]} -- {exc}")
            code = EXIT_FAIL
            continue
        summary["criteria"][str(k)] = {"title": res.title, "passed": res.passed,
                                       "detail": res.detail, "elapsed_s": res.elapsed}
        print(res.line())
        if not res.passed:
            code = EXIT_FAIL
    summary["verdict"] = "pass" if code == EXIT_PASS else "fail"
    _write_summary(out, summary)
    return code


def cmd_list_presets(args) -> int:
    for name, doc in PRESETS.items():
        print(f"{name:12s} {doc}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=os.environ.get("SYMMHEAT_OUT", "symmheat_out"),
                        help="output directory (default: $SYMMHEAT_OUT or ./symmheat_out)")
    common.add_argument("--threads", type=int, default=1,
                        help="scenarios run concurrently (default 1, the determinism reference)")
    common.add_argument("--quiet", action="store_true", help="only report failures")

    p = argparse.ArgumentParser(prog="symmheat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run every scenario in a config")
    r.add_argument("config")
    s = sub.add_parser("sweep", parents=[common], help="refinement study for flagged scenarios")
    s.add_argument("config")
    st = sub.add_parser("selftest", parents=[common], help="run the acceptance criteria")
    st.add_argument("--config-dir", default=None, help="use configs from this directory")
    st.add_argument("--only", type=int, nargs="+", choices=ALL_CRITERIA, metavar="N",
                    help="criterion numbers to run")
    sub.add_parser("list-presets", parents=[common], help="print the source presets")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        if args.command != "list-presets":
            _write_summary(Path(args.out), {"command": args.command, "version": __version__,
                                            "verdict": "config-error",
                                            "error": "--threads must be >= 1"})
        print("configuration error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "selftest": cmd_selftest,
               "list-presets": cmd_list_presets}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
