"""Replay scripted conversations against a DMN file and show the trace.

Usage:
    python3 scripts/demo_conversation.py tests/fixtures/membership.dmn \
        membership 40 no minimum
    python3 scripts/demo_conversation.py tests/fixtures/kpi.dmn   # canned
"""
import argparse
import sys

from dmnchat import dialog
from dmnchat.botgen import assemble_agent
from dmnchat.dmn_xml import parse_dmn
from dmnchat.engine import evaluate_drd

CANNED = {
    "Membership": ["membership", "40", "no", "minimum"],
    "KPI": ["kpi visualization", "waiting time", "yes",
            "reveal relationships", "time series", "changes"],
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dmn")
    parser.add_argument("utterances", nargs="*",
                        help="user turns; a canned script runs when omitted")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)

    with open(args.dmn, encoding="utf-8") as fh:
        model = parse_dmn(fh.read())
    bundle = assemble_agent(model, seed=args.seed)

    utterances = args.utterances
    if not utterances:
        utterances = next((u for key, u in CANNED.items()
                           if key.lower() in model.name.lower()),
                          CANNED["Membership"])

    session, opening = dialog.new_session(bundle, session_id="demo")
    print(f"bot> {opening.text}")
    for text in utterances:
        print(f"you> {text}")
        reply = dialog.handle_turn(session, text)
        print(f"bot> {reply.text}")
        if reply.done:
            break

    print()
    print(dialog.context_summary(session))
    if session.status == "decided" and session.active_decision:
        result = evaluate_drd(model, session.active_decision,
                              dict(session.collected))
        print("trace:")
        for entry in result.trace.entries:
            rule = f" rule {entry.rule_number}" if entry.rule_number else ""
            print(f"  {entry.name} = {entry.value!r} ({entry.kind}{rule})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
