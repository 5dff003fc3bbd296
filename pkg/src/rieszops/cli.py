"""Command line entry point: ``rieszops run|demo|lemma22``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scenario import CheckError, ConfigError, Report, Scenario, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def corollary_scenario() -> Scenario:
    """Commutator and ladder checks for t_n = 2^n, alpha_n = sqrt(n)."""
    return Scenario.from_dict({
        "scale": {"kind": "geometric", "ratio": 2},
        "alpha": {"kind": "sqrt-index"},
        "checks": [{"name": "commutator", "params": {"N": 32}}, {"name": "ladder", "params": {"N": 64}}],
    })


def hermite_scenario(csv: str | None = None) -> Scenario:
    return Scenario.from_dict({"checks": [{"name": "hermite-demo", "params": {"csv": csv}}]})


def lemma22_scenario(order: int, count: int) -> Scenario:
    return Scenario.from_dict({"checks": [{"name": "lemma22", "params": {"order": order, "count": count}}]})


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def render_text(report: Report) -> str:
    lines = []
    for r in report.records:
        params = " ".join(f"{k}={v}" for k, v in sorted(r.parameters.items()) if v is not None)
        lines.append(f"[{r.outcome}] {r.name} {params}".rstrip())
    s = report.summary
    lines.append(f"summary: pass={s['pass']} fail={s['fail']} inconclusive={s['inconclusive']}"
                 f" ({report.to_dict()['tool']['name']} {report.version})")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "json", path: str | None = None) -> str:
    text = render_json(report) if fmt == "json" else render_text(report)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def _load(path: str) -> Scenario:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid json: {exc}") from None
    return Scenario.from_dict(data)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--tolerance-scale", type=float, default=1.0, metavar="F",
                        help="multiplies every default tolerance")

    ap = argparse.ArgumentParser(prog="rieszops", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run a JSON scenario")
    run.add_argument("config")
    demo = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    demo.add_argument("which", choices=("hermite", "corollary33"))
    demo.add_argument("--csv", metavar="PATH", help="write f_n samples (hermite demo)")
    lem = sub.add_parser("lemma22", parents=[common], help="polar-decomposition check on random matrices")
    lem.add_argument("--order", type=int, default=8)
    lem.add_argument("--count", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.command == "run":
            scenario = _load(args.config)
        elif args.command == "demo":
            scenario = hermite_scenario(args.csv) if args.which == "hermite" else corollary_scenario()
        else:
            scenario = lemma22_scenario(args.order, args.count)
        report = run_scenario(scenario, seed=args.seed, tolerance_scale=args.tolerance_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        emit_report(report, args.format, args.out)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return report.exit_code
