#!/usr/bin/env python3
"""Scripted stand-in for an SMT solver.

Usage: mock_solver.py RULES.json INPUT.smt2

RULES.json holds a list of rules; the first whose ``match`` regex (default:
always) occurs in the input decides the behaviour. Keys: ``stdout``,
``stderr``, ``exit``, ``sleep``, ``signal`` and ``model`` (printed after
``stdout`` when the input asks for ``(get-model)``).
"""

import json
import os
import re
import signal
import sys
import time


def main() -> int:
    rules_path, input_path = sys.argv[1], sys.argv[2]
    with open(rules_path) as f:
        rules = json.load(f)
    with open(input_path) as f:
        text = f.read()
    log = os.environ.get("MOCK_SOLVER_LOG")
    if log:
        with open(log, "a") as f:
            f.write(os.path.basename(rules_path) + "\n")
    for rule in rules:
        if re.search(rule.get("match", ""), text, re.S):
            break
    else:
        rule = {"stdout": "unknown"}
    if rule.get("sleep"):
        time.sleep(rule["sleep"])
    out = rule.get("stdout", "")
    if out:
        sys.stdout.write(out + "\n")
    if "model" in rule and "(get-model)" in text:
        sys.stdout.write(rule["model"] + "\n")
    if rule.get("stderr"):
        sys.stderr.write(rule["stderr"] + "\n")
    sys.stdout.flush()
    sys.stderr.flush()
    if rule.get("signal"):
        os.kill(os.getpid(), rule["signal"])
    return rule.get("exit", 0)


if __name__ == "__main__":
    sys.exit(main())
