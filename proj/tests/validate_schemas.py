#!/usr/bin/env python3
"""Runs the CLI and validates its JSON against the checked-in schemas."""
import json
import pathlib
import subprocess
import sys

import jsonschema

tool, schemas = sys.argv[1], pathlib.Path(sys.argv[2])


def run(args, expect):
    p = subprocess.run([tool, *args], capture_output=True, text=True)
    if p.returncode != expect:
        sys.exit(f"{args}: exit {p.returncode}, wanted {expect}\n{p.stderr}")
    return json.loads(p.stdout)


def schema(name):
    s = json.loads((schemas / name).read_text())
    jsonschema.Draft202012Validator.check_schema(s)
    return s


report = schema("solve_report.schema.json")
verdict = schema("check_verdict.schema.json")

solves = [
    (["solve", "--problem", "ex42", "--lambda", "20000"], 0),
    (["solve", "--problem", "ex44", "--n", "5", "--e", "5"], 0),
    (["solve", "--problem", "ex45", "--n", "10", "--e", "5", "--no-timing"], 0),
    (["solve", "--problem", "ex43", "--n", "5", "--e", "5", "--max-outer", "1", "--eps", "1e-300"], 2),
]
checks = [
    (["check", "--problem", "ex42", "--lambda", "2", "--x", "0,0", "--method", "wcnp"], 0),
    (["check", "--problem", "ex42", "--lambda", "2", "--x", "0,0", "--method", "lcnp"], 3),
    (["check", "--problem", "zero-norm", "--n", "2", "--x", "0,0", "--method", "kc"], 4),
]
for args, code in solves:
    jsonschema.validate(run(args, code), report)
for args, code in checks:
    jsonschema.validate(run(args, code), verdict)
print(f"validated {len(solves) + len(checks)} documents")
