"""Command line front end: validate, generate, chat, serve."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import dialog
from .botgen import (Customization, assemble_agent, export_agent,
                     import_agent)
from .dmn_xml import parse_dmn, validate_model
from .errors import CustomizationError, DmnError
from .relevance import detect_overlaps


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_customization(path):
    if not path:
        return None
    return Customization.from_json(json.loads(_read(path)))


def _validate_report(dmn_text: str) -> int:
    """Print diagnostics and overlap witnesses; return count of errors."""
    try:
        model = parse_dmn(dmn_text)
    except DmnError as exc:
        print(f"error PARSE: {exc}")
        print("1 errors, 0 warnings")
        return 1
    diagnostics = validate_model(model)
    errors = [d for d in diagnostics if d.severity == "error"]
    warnings = [d for d in diagnostics if d.severity == "warning"]
    for d in diagnostics:
        where = f" [{d.location()}]" if d.location() else ""
        print(f"{d.severity} {d.code}{where}: {d.message}")
    overlap_count = 0
    if not errors:
        for decision in model.decisions:
            try:
                overlaps = detect_overlaps(decision.table)
            except DmnError as exc:
                print(f"error DOMAIN [{decision.normalized_name}]: {exc}")
                overlap_count += 1
                continue
            for ov in overlaps:
                witness = ", ".join(f"{k}={v!r}" for k, v in ov.witness.items())
                print(f"error OVERLAP [{decision.normalized_name}]: rules "
                      f"{ov.rule_a} and {ov.rule_b} both match ({witness})")
                overlap_count += 1
    total_errors = len(errors) + overlap_count
    print(f"{total_errors} errors, {len(warnings)} warnings")
    return total_errors


def cmd_validate(args) -> int:
    return 1 if _validate_report(_read(args.dmn)) else 0


def cmd_generate(args) -> int:
    text = _read(args.dmn)
    if _validate_report(text):
        return 1
    model = parse_dmn(text)
    try:
        customization = _load_customization(args.custom)
        bundle = assemble_agent(model, customization, seed=args.seed,
                                max_phrases=args.max_phrases)
    except CustomizationError as exc:
        print(f"customization error: {exc}", file=sys.stderr)
        return 1
    paths = export_agent(bundle, args.out)
    for p in paths:
        print(p)
    print(f"{len(paths)} files -> {args.out}")
    return 0


def _load_bundle(args):
    source = args.source
    if os.path.isdir(source) and os.path.isfile(os.path.join(source, "agent.json")):
        return import_agent(source)
    model = parse_dmn(_read(source))
    return assemble_agent(model, _load_customization(args.custom),
                          seed=args.seed, max_phrases=args.max_phrases)


def _emit(response) -> None:
    print(f"bot> {response.text}")
    if response.suggestions:
        print("[suggestions: " + " | ".join(response.suggestions) + "]")


def cmd_chat(args) -> int:
    try:
        bundle = _load_bundle(args)
    except (DmnError, OSError) as exc:
        print(f"cannot load agent: {exc}", file=sys.stderr)
        return 1
    session, opening = dialog.new_session(bundle, session_id=args.session_id)
    _emit(opening)
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            try:
                line = input("you> ")
            except (EOFError, KeyboardInterrupt):
                print()
                break
        else:
            line = sys.stdin.readline()
            if not line:
                break
            line = line.rstrip("\n")
            print(f"you> {line}")
        line = line.strip()
        if not line:
            continue
        if line == "/context":
            print(f"bot> {dialog.context_summary(session)}")
            continue
        if line == "/help":
            _emit(dialog.help_response(session, session.pending_input))
            continue
        if line == "/cancel":
            session.status = "cancelled"
            print("bot> Okay, I cancelled this conversation.")
            break
        _emit(dialog.handle_turn(session, line))
        if session.status == "cancelled":
            break
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(data_dir=args.data_dir, default_seed=args.seed,
                     max_phrases=args.max_phrases,
                     static_dir=args.webchat_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmnchat",
        description="turn DMN decision models into decision-support chatbots")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a DMN file and report problems")
    p.add_argument("dmn")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="compile a DMN file into agent files")
    p.add_argument("dmn")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--custom", help="customization JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-phrases", type=int, default=500)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chat", help="talk to an agent in the terminal")
    p.add_argument("source", help="agent directory or DMN file")
    p.add_argument("--custom", help="customization JSON (DMN source only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-phrases", type=int, default=500)
    p.add_argument("--session-id", default="cli")
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--data-dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-phrases", type=int, default=500)
    p.add_argument("--webchat-dir")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
