"""Command line front end: `plots render --spec spec.json`.

The spec file holds one figure description or a list of them. Relative
input/output paths are resolved against the spec file's directory, so a spec
can live next to the benchmark outputs it renders.
"""

import argparse
import json
import os
import sys

from .figures import FigureSpec, render
from .schemas import SchemaError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SPEC = 3
EXIT_INPUT = 4
EXIT_IO = 7


class SpecError(Exception):
    pass


def _resolve(base, path):
    return path if os.path.isabs(path) else os.path.join(base, path)


def load_specs(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpecError("cannot read spec file: %s" % exc)
    except json.JSONDecodeError as exc:
        raise SpecError("spec file is not valid JSON: %s" % exc)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise SpecError("spec file must hold a figure object or a list of them")
    base = os.path.dirname(os.path.abspath(path))
    specs = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise SpecError("figure %d is not an object" % i)
        unknown = set(entry) - {"kind", "inputs", "out", "title", "options"}
        if unknown:
            raise SpecError("figure %d has unknown key '%s'" % (i, sorted(unknown)[0]))
        try:
            kind = entry["kind"]
            inputs = entry["inputs"]
            out = entry["out"]
        except KeyError as exc:
            raise SpecError("figure %d is missing key %s" % (i, exc))
        if not isinstance(inputs, list):
            raise SpecError("figure %d: 'inputs' must be a list of paths" % i)
        try:
            spec = FigureSpec(kind=kind,
                              inputs=[_resolve(base, p) for p in inputs],
                              out=_resolve(base, out),
                              title=entry.get("title"),
                              options=entry.get("options", {}))
        except ValueError as exc:
            raise SpecError("figure %d: %s" % (i, exc))
        specs.append(spec)
    return specs


def cmd_render(args):
    specs = load_specs(args.spec)
    for spec in specs:
        out_dir = os.path.dirname(spec.out)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        result = render(spec)
        print("wrote %s and %s" % (result["png"], result["svg"]))
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plots", description="Render benchmark CSV outputs into figures.")
    sub = parser.add_subparsers(dest="command", required=True)
    rd = sub.add_parser("render", help="render the figures described by a spec file")
    rd.add_argument("--spec", required=True, help="path to a JSON figure spec")
    args = parser.parse_args(argv)
    try:
        return cmd_render(args)
    except SpecError as exc:
        print("spec error: %s" % exc, file=sys.stderr)
        return EXIT_SPEC
    except SchemaError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
