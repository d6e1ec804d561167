#!/usr/bin/env python3
# Run a few shipped scenario files through the same code path as
# `pparabolic run`, then print where the reports went.
#
# Usage: python demos/scenarios.py [output root]
import sys
import tempfile

from pparabolic.cli import run_scenario, shipped_scenarios

root = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="pparabolic-demo-")
wanted = {"barriers-p3", "bhp-counterexample", "measure-linear", "decay-p2"}
for path in shipped_scenarios():
    if path.stem not in wanted:
        continue
    print(f"== {path.stem}")
    code, art, report = run_scenario(path, threads=2, out=root, log=sys.stdout)
    print(f"   exit {code}, report at {art / 'report.json'}\n")
