"""Command line entry point: `acclab check|emit|apv|oracle|campaign`."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagnosis import INPUT_ERROR
from .errors import AccLabError
from .lemmas import emit_lemmas
from .workbench import apv_rows, load_protocol, load_relation, load_spec, oracle, prepare, run_check


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("protocol", help=".msr protocol file")
    p.add_argument("spec", help=".acc accountability spec")
    p.add_argument("--lemma", help="accountability lemma to check (default: the first)")
    p.add_argument("--bound", type=int, default=5, help="maximum rule applications per trace")
    p.add_argument("--parties", type=int, default=None,
                   help="party pool size; overrides the pool declared in the protocol (default 3)")
    p.add_argument("--relation", default="ctr", help="ctr or file:PATH")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", help="write output to FILE instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acclab", description="Accountability verification workbench")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("check", help="enumerate, check all conditions and diagnose"))
    _common(sub.add_parser("oracle", help="compare verdicts with the a-posteriori verdict directly"))
    p = sub.add_parser("apv", help="print ctr, verdict and apv per trace")
    _common(p)
    p.add_argument("--trace", type=int, action="append", help="universe index (repeatable); default all")
    p = sub.add_parser("emit", help="compile an .acc file into Tamarin lemmas")
    p.add_argument("spec")
    p.add_argument("--protocol", help="protocol file providing nullary function symbols")
    p.add_argument("--out")
    p = sub.add_parser("campaign", help="random-protocol property campaign")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out")
    return ap


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _setup(args):
    protocol = load_protocol(args.protocol)
    spec = load_spec(args.spec, protocol)
    return prepare(protocol, spec, args.lemma, args.bound, args.parties, load_relation(args.relation))


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (AccLabError, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR


def _dispatch(args) -> int:
    if args.command == "emit":
        protocol = load_protocol(args.protocol) if args.protocol else None
        _write(emit_lemmas(load_spec(args.spec, protocol)), args.out)
        return 0
    if args.command == "campaign":
        from .campaign import run_campaign
        summary = run_campaign(args.count, args.seed)
        text = json.dumps(summary.to_json(), indent=2) + "\n" if args.format == "json" else summary.to_text()
        _write(text, args.out)
        return 0 if summary.ok else 1
    setup = _setup(args)
    if args.command == "check":
        report = run_check(setup)
        text = json.dumps(report.to_json(), indent=2) + "\n" if args.format == "json" else report.to_text()
        _write(text, args.out)
        return report.exit_code
    if args.command == "oracle":
        res = oracle(setup)
        if args.format == "json":
            text = json.dumps(res, indent=2) + "\n"
        else:
            text = f"accountable: {res['accountable']} over {res['trace_count']} traces\n"
            if not res["accountable"]:
                w = res["witness"]
                text += f"witness #{w['index']}: {w['trace']}\n  verdict {w['verdict']}  apv {w['apv']}\n"
        _write(text, args.out)
        return 0 if res["accountable"] else 1
    rows = apv_rows(setup, args.trace)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        parts = []
        for r in rows:
            ctr = ", ".join(f"({c['test']}, {c['instantiation']})" for c in r["ctr"]) or "-"
            parts.append(f"#{r['index']} {r['trace']}\n  property {'holds' if r['satisfies_property'] else 'violated'}"
                         f"  corrupted {{{', '.join(r['corrupted'])}}}\n  ctr {ctr}\n"
                         f"  verdict {r['verdict']}  apv {r['apv']}\n")
        text = "".join(parts)
    _write(text, args.out)
    return 0


def main() -> None:
    sys.exit(run())
