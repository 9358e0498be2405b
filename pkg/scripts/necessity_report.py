"""Show which inputs stay worth asking as answers accumulate.

Walks a model's main decision, binding inputs one at a time in
declaration order with values taken from the table domains, and prints
the necessity verdict for every still-unbound input at each step.

Usage:
    python3 scripts/necessity_report.py tests/fixtures/kpi.dmn
"""
import argparse
import sys

from dmnchat.dmn_xml import parse_dmn
from dmnchat.errors import EmptyDomain
from dmnchat.relevance import domain_of, is_necessary, required_inputs


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dmn")
    parser.add_argument("--decision", help="default: the model's main one")
    args = parser.parse_args(argv)

    with open(args.dmn, encoding="utf-8") as fh:
        model = parse_dmn(fh.read())
    target = args.decision or model.main_decision
    inputs = required_inputs(model, target)
    print(f"decision: {target}")
    print(f"inputs:   {', '.join(inputs)}")

    cache = {}
    partial = {}
    for step, name in enumerate([None] + list(inputs)):
        if name is not None:
            try:
                value = domain_of(model, name)[0]
            except EmptyDomain:
                print(f"\nstep {step}: {name} has a wildcard-only column, "
                      "stopping")
                break
            partial[name] = value
            print(f"\nstep {step}: bound {name} = {value!r}")
        else:
            print("\nstep 0: nothing bound yet")
        for inp in inputs:
            if inp in partial:
                continue
            needed = is_necessary(model, target, inp, partial, cache=cache)
            marker = "ask " if needed else "skip"
            print(f"  [{marker}] {inp}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
