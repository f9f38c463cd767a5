"""``switch-verdict certify|classify|simulate|reproduce``.

Exit codes: 0 success, 1 reproduction mismatch, 2 input or model error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from .config import ProblemConfig
from .errors import ConfigError, SwitchVerdictError
from .pipeline import Session, certificate_table
from .reproduce import CASES, run_case

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2


def _provenance(config: ProblemConfig, command: str) -> dict:
    return {
        "artifact": {"name": "switch-verdict", "version": __version__},
        "command": command,
        "config_digest": config.digest(),
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def write_report(report: dict, outdir: Path | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if outdir is None:
        sys.stdout.write(text)
        return
    (outdir / "report.json").write_text(text, encoding="utf-8")


def build_report(command: str, config: ProblemConfig, outdir: Path | None) -> dict:
    session = Session(config)
    report = _provenance(config, command)
    report["certificates"] = certificate_table(session.certificates)
    if command != "certify":
        report["margins"] = session.margins().as_dict()
    if command == "simulate":
        results = session.simulate(trace_dir=outdir)
        report["simulations"] = [r.as_dict() for r in results]
        report["traces"] = [f"trace_{i}.csv" for i in range(len(results))] if outdir is not None else []
    return report


def _load(path: str) -> ProblemConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ProblemConfig.loads(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="switch-verdict",
                                 description="Certify switching signals of switched linear systems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("certify", "build the certificate table"),
                        ("classify", "certificates plus margins and the three-way label"),
                        ("simulate", "certificates, margins, trajectories and traces")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-c", "--config", required=True, help="problem description (JSON)")
        p.add_argument("-o", "--outdir", help="write report.json and traces here (default: report to stdout)")
    p = sub.add_parser("reproduce", help="run an embedded reference case")
    p.add_argument("case", choices=sorted(CASES))
    p.add_argument("-o", "--outdir", help="also write report.json and traces here")
    return ap


def _outdir(arg: str | None) -> Path | None:
    if arg is None:
        return None
    out = Path(arg)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _reproduce(case: str, outdir: Path | None) -> int:
    result, session = run_case(case)
    print(result.table())
    if outdir is not None:
        report = build_report("simulate", session.config, outdir)
        report["reproduction"] = result.as_dict()
        write_report(report, outdir)
    return EXIT_OK if result.passed else EXIT_MISMATCH


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        outdir = _outdir(args.outdir)
        if args.command == "reproduce":
            return _reproduce(args.case, outdir)
        config = _load(args.config)
        write_report(build_report(args.command, config, outdir), outdir)
    except (SwitchVerdictError, ValueError, OSError) as exc:
        print(f"switch-verdict: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
