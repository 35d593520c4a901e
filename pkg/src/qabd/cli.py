"""Command-line front door: run fixtures, compare paradigms, replay logs.

Exit codes: 0 success (any outcome), 1 usage, 2 engine error (bad case data,
degenerate update, non-qualitative comparison), 3 I/O or transport error,
4 replay divergence. Canonical artifacts are byte-stable: timestamps live
only in the ``meta.json`` sidecar.

Set ``QABD_SERVICE_URL`` to execute ``run`` and ``compare`` against a live
service instead of in-process.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import urllib.error
import urllib.request
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import casebook, export, service, store
from .classical import compare
from .dynamics import coherence, run
from .errors import (
    ParseError,
    QabdError,
    ReplayMismatchError,
    SchemaViolationError,
    TransportError,
    ValidationFailedError,
)
from .model import CaseFile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENGINE = 2
EXIT_IO = 3
EXIT_REPLAY = 4

_ENGINE_ERRORS = (ParseError, SchemaViolationError, ValidationFailedError, QabdError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qabd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_case_source(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--fixture", help="bundled fixture id")
        group.add_argument("--case", help="path to a schema-1 case file")

    run_p = sub.add_parser("run", help="fold a case's observation log and resolve it")
    add_case_source(run_p)
    run_p.add_argument("--all", action="store_true", help="run every bundled fixture")
    run_p.add_argument("--eta", type=float, help="learning-rate override")
    run_p.add_argument("--theta-collapse", type=float, help="collapse-threshold override")
    run_p.add_argument("--mode", choices=["sum", "max"], help="evidence aggregation override")
    run_p.add_argument("--out", default="qabd-out", help="output directory")
    run_p.add_argument(
        "--format", choices=["json", "dot", "table"], default="json",
        help="dot adds an interference map; table prints a summary",
    )

    cmp_p = sub.add_parser("compare", help="classical elimination vs amplitude dynamics")
    add_case_source(cmp_p)
    cmp_p.add_argument("--out", help="directory for compare.json")
    cmp_p.add_argument("--format", choices=["json", "table"], default="table")

    replay_p = sub.add_parser("replay", help="verify a session log replays bit-identically")
    replay_p.add_argument("log_path", help="path to a .jsonl session log")

    sub.add_parser("fixtures", help="list bundled fixtures")

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8901)
    serve_p.add_argument("--data-dir", default="qabd-data")

    return parser


def _load_case(args) -> CaseFile:
    if args.fixture:
        return casebook.fixture(args.fixture).case
    if args.case:
        path = Path(args.case)
        if not path.exists():
            raise OSError(f"case file not found: {path}")
        return casebook.load_case(path)
    raise SystemExit(EXIT_USAGE)


def _apply_overrides(case: CaseFile, args) -> CaseFile:
    cfg = case.config
    if args.eta is not None:
        if not args.eta > 0:
            print("error: --eta must be > 0", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        cfg = replace(cfg, eta=args.eta)
    if args.theta_collapse is not None:
        if not (0.0 < args.theta_collapse <= 1.0):
            print("error: --theta-collapse must be in (0, 1]", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        cfg = replace(cfg, collapse_threshold=args.theta_collapse)
    if args.mode is not None:
        cfg = replace(cfg, aggregation=args.mode)
    return replace(case, config=cfg)


def _dump_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_meta(out_dir: Path, argv) -> None:
    _dump_json(
        out_dir / "meta.json",
        {
            "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "argv": list(argv),
        },
    )


def _argmax_id(case: CaseFile, amplitudes) -> str:
    squares = [a * a for a in amplitudes]
    return case.hypotheses[squares.index(max(squares))].id


# -- remote execution ---------------------------------------------------------

def _http_json(method: str, url: str, payload=None) -> dict | list:
    body = json.dumps(payload).encode("utf-8") if payload is not None else None
    request = urllib.request.Request(
        url, data=body, method=method, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(request, timeout=30) as response:
            return json.loads(response.read())
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", errors="replace")
        try:
            parsed = json.loads(detail)
            raise QabdError(f"{parsed.get('code')}: {parsed.get('message')}") from None
        except (ValueError, AttributeError):
            raise QabdError(f"HTTP {exc.code}: {detail}") from None
    except (urllib.error.URLError, OSError) as exc:
        raise TransportError(f"service unreachable: {exc}") from exc


def _remote_run(case: CaseFile, base_url: str):
    """Mirror local run semantics through the service: create the case with
    an empty log, then feed observations until the outcome resolves."""
    doc = casebook.serialize_case(replace(case, observations=()))
    created = _http_json("POST", f"{base_url}/cases", doc)
    case_id = created["case_id"]
    traces, last_outcome, state = [], None, None
    for observation in sorted(case.observations, key=lambda o: o.sequence):
        event = _http_json(
            "POST",
            f"{base_url}/cases/{case_id}/observations",
            casebook.observation_to_dict(observation),
        )
        traces.append(event["trace"])
        last_outcome = event["outcome"]
        state = event["state"]
        if last_outcome["kind"] in ("dominant", "hybrid"):
            break
    if state is None:
        payload = _http_json("GET", f"{base_url}/cases/{case_id}/state")
        state = {"amplitudes": payload["amplitudes"], "step": payload["step"]}
        last_outcome = payload["outcome"]
    return case_id, state, traces, last_outcome


# -- subcommands ---------------------------------------------------------------

def _run_one(case: CaseFile, args, out_dir: Path, argv) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    base_url = os.environ.get("QABD_SERVICE_URL", "").rstrip("/")

    if base_url:
        case_id, state, trace_dicts, outcome = _remote_run(case, base_url)
        amplitudes = state["amplitudes"]
        state_doc = {
            "amplitudes": amplitudes,
            "squares": [a * a for a in amplitudes],
            "step": state["step"],
            "coherence": max(a * a for a in amplitudes),
        }
        outcome_doc = dict(outcome)
        trace_lines = "".join(
            json.dumps(t, sort_keys=True, separators=(",", ":")) + "\n"
            for t in trace_dicts
        )
        if args.format == "dot":
            dot = _http_json_text(f"{base_url}/cases/{case_id}/map?format=dot")
            (out_dir / "interference.dot").write_text(dot, encoding="utf-8")
    else:
        result = run(case)
        amplitudes = list(result.state.amplitudes)
        state_doc = {
            "amplitudes": amplitudes,
            "squares": [a * a for a in amplitudes],
            "step": result.state.step,
            "coherence": coherence(result.state),
        }
        outcome_doc = export.outcome_to_dict(result.outcome)
        trace_lines = export.traces_to_jsonl(result.traces)
        if args.format == "dot":
            (out_dir / "interference.dot").write_text(
                export.interference_to_dot(case.hypotheses, result.interference),
                encoding="utf-8",
            )

    outcome_doc["case"] = case.name
    outcome_doc["argmax"] = _argmax_id(case, amplitudes)
    _dump_json(out_dir / "state.json", state_doc)
    _dump_json(out_dir / "outcome.json", outcome_doc)
    (out_dir / "trace.jsonl").write_text(trace_lines, encoding="utf-8")
    _write_meta(out_dir, argv)

    if args.format == "table":
        print(f"case: {case.name}")
        print(f"{'hypothesis':<24} {'amplitude':>10} {'weight':>8}")
        for h, a in zip(case.hypotheses, amplitudes):
            print(f"{h.id + ' ' + h.label:<24} {a:>10.5f} {a * a:>8.4f}")
    print(
        f"{case.name}: {outcome_doc['kind']} members={','.join(outcome_doc['members']) or '-'} "
        f"argmax={outcome_doc['argmax']} confidence={outcome_doc['confidence']:.4f}"
    )
    return EXIT_OK


def _http_json_text(url: str) -> str:
    try:
        with urllib.request.urlopen(url, timeout=30) as response:
            return response.read().decode("utf-8")
    except (urllib.error.URLError, OSError) as exc:
        raise TransportError(f"service unreachable: {exc}") from exc


def cmd_run(args, argv) -> int:
    if args.all:
        out_root = Path(args.out)
        code = EXIT_OK
        for manifest in casebook.list_fixtures():
            case = _apply_overrides(manifest.case, args)
            code = max(code, _run_one(case, args, out_root / manifest.fixture_id, argv))
        return code
    case = _apply_overrides(_load_case(args), args)
    return _run_one(case, args, Path(args.out), argv)


def cmd_compare(args, argv) -> int:
    case = _load_case(args)
    base_url = os.environ.get("QABD_SERVICE_URL", "").rstrip("/")
    if base_url:
        doc = casebook.serialize_case(case)
        created = _http_json("POST", f"{base_url}/cases", doc)
        report = _http_json("GET", f"{base_url}/cases/{created['case_id']}/compare")
    else:
        report = compare(case).to_dict()

    if args.format == "table":
        survivors = ", ".join(report["classical"]["survivors"]) or "(none)"
        outcome = report["quantum"]["outcome"]
        print(f"case: {case.name}")
        print(f"{'paradigm':<12} {'resolution'}")
        print(f"{'classical':<12} survivors: {survivors}")
        print(
            f"{'quantum':<12} {outcome['kind']}: "
            f"{', '.join(outcome['members']) or '(none)'} "
            f"(confidence {outcome['confidence']:.4f})"
        )
        print(f"flags: {', '.join(report['flags']) or '(none)'}")
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _dump_json(out_dir / "compare.json", report)
        _write_meta(out_dir, argv)
    return EXIT_OK


def cmd_replay(args) -> int:
    log_path = Path(args.log_path)
    if not log_path.exists():
        print(f"error: log not found: {log_path}", file=sys.stderr)
        return EXIT_IO
    verified = 0
    try:
        for _case_id, _revision in store.verify_log(log_path):
            verified += 1
    except ReplayMismatchError as exc:
        print(f"replay diverged: case={exc.case_id} revision={exc.revision}", file=sys.stderr)
        return EXIT_REPLAY
    except (json.JSONDecodeError, OSError, KeyError) as exc:
        print(f"error: unreadable log: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"replay ok: {verified} revision(s) verified bit-identical")
    return EXIT_OK


def cmd_fixtures() -> int:
    for manifest in casebook.list_fixtures():
        case = manifest.case
        print(
            f"{manifest.fixture_id:<14} {len(case.hypotheses)} hypotheses, "
            f"{len(case.observations)} observations -- {manifest.description}"
        )
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            if not (args.all or args.fixture or args.case):
                parser.error("run requires --fixture, --case, or --all")
            return cmd_run(args, argv)
        if args.command == "compare":
            if not (args.fixture or args.case):
                parser.error("compare requires --fixture or --case")
            return cmd_compare(args, argv)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "fixtures":
            return cmd_fixtures()
        if args.command == "serve":
            service.serve(args.data_dir, host=args.host, port=args.port)
            return EXIT_OK
    except SystemExit as exc:
        return int(exc.code or 0)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _ENGINE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
