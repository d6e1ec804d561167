"""Command line entry point.

Verbs::

    pparabolic run <config> [--threads N] [--out DIR]
    pparabolic validate <config>
    pparabolic list-checks
    pparabolic export <traj> <fmt> [-o PATH]

The artifact directory is ``<root>/<output.dir or name>`` with ``root``
taken from ``--out``, else ``$PPARABOLIC_OUTPUT_ROOT``, else
``./pparabolic-out``.

Exit codes of ``run``: 0 when every check matches its expectation, 2 when
any check hit a hypothesis violation, 1 otherwise (including invalid
configs).
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import __version__
from .checks import REGISTRY, describe, timed
from .errors import ConfigError, HypothesisViolation
from .reports import jsonable
from .scenario import FieldSet, load_scenario
from .solver import Trajectory, export_trajectory, load_trajectory

__all__ = ["main", "run_scenario", "output_root", "shipped_scenarios"]

ENV_ROOT = "PPARABOLIC_OUTPUT_ROOT"
EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS = 0, 1, 2


def output_root(override=None):
    return Path(override or os.environ.get(ENV_ROOT) or "pparabolic-out")


def shipped_scenarios():
    """Paths of the scenario files bundled with the package, sorted by name."""
    base = resources.files("pparabolic") / "scenarios"
    return sorted((Path(str(p)) for p in base.iterdir() if p.name.endswith(".toml")), key=lambda p: p.name)


def _entry(i, spec, rep, err, runtime_ms):
    expect = spec.get("expect", "pass")
    out = {"index": i, "id": spec["id"], "label": spec.get("label", spec["id"]),
           "params": spec.get("params", {}), "expect": expect, "runtime_ms": round(runtime_ms, 3)}
    if err is not None:
        out.update({"lhs": None, "rhs": None, "fitted_constant": None, "budget": spec.get("budget"),
                    "holds": False, "pass": False, "margin": None,
                    "error": {"type": type(err).__name__, "message": str(err),
                              "hypothesis": isinstance(err, HypothesisViolation)}})
        return out
    d = rep.to_dict()
    holds = bool(d["pass"])
    out.update({"lhs": d["lhs"], "rhs": d["rhs"], "fitted_constant": d["fitted_constant"],
                "budget": d["budget"], "holds": holds, "pass": holds == (expect == "pass"),
                "margin": d["margin"], "config": d["config"], "details": d["details"], "error": None})
    return out


def _write_summary(path, entries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "id", "label", "fitted_constant", "budget", "pass", "margin", "error"])
        for e in entries:
            w.writerow([e["index"], e["id"], e["label"], e["fitted_constant"], e["budget"], e["pass"],
                        e["margin"], "" if e["error"] is None else e["error"]["type"]])


def run_scenario(config, threads=1, out=None, log=None):
    """Run every check of a scenario and write the artifact directory.

    Returns
    -------
    (int, Path, dict)
        Exit code, artifact directory and the report.
    """
    sc = load_scenario(config)
    fs = FieldSet(sc)
    art = output_root(out) / sc.output.get("dir", sc.name)
    art.mkdir(parents=True, exist_ok=True)
    # solver fields are built once, before any check runs
    for key in ("data", "data_b"):
        d = getattr(sc, key)
        if d is not None and d["kind"] != "closed_form":
            fs.field(key)

    def job(item):
        i, spec = item
        rep, err, files, ms = timed(REGISTRY[spec["id"]], fs, spec.get("params", {}), spec.get("budget"))
        return i, spec, rep, err, files, ms

    items = list(enumerate(sc.checks))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, items))
    else:
        results = [job(it) for it in items]

    entries, written = [], []
    for i, spec, rep, err, files, ms in results:
        e = _entry(i, spec, rep, err, ms)
        for name, writer in sorted(files.items()):
            fname = f"{i:02d}_{spec['id']}_{name}"
            try:
                writer(str(art / fname))
                written.append(fname)
            except (OSError, TypeError, ValueError) as exc:
                e.setdefault("file_errors", []).append(f"{fname}: {exc}")
        e["files"] = [f for f in written if f.startswith(f"{i:02d}_")]
        entries.append(e)
        if log is not None:
            status = "PASS" if e["pass"] else ("HYPOTHESIS" if e["error"] and e["error"]["hypothesis"] else "FAIL")
            extra = f"fitted={e['fitted_constant']} budget={e['budget']}" if e["error"] is None else e["error"]["message"]
            print(f"[{status}] {e['label']}: {extra}", file=log)

    exported = []
    fmt = sc.output.get("export")
    if fmt:
        for key in ("data", "data_b"):
            if getattr(sc, key) is not None and isinstance(fs.field(key), Trajectory):
                fname = f"trajectory_{key}.{fmt}"
                export_trajectory(fs.field(key), str(art / fname), fmt)
                exported.append(fname)

    if any(e["error"] is not None and e["error"]["hypothesis"] for e in entries):
        code = EXIT_HYPOTHESIS
    elif all(e["pass"] for e in entries):
        code = EXIT_OK
    else:
        code = EXIT_FAIL
    report = jsonable({"scenario": sc.name, "version": __version__, "pparams": sc.pparams,
                       "domain": sc.domain, "exit_code": code, "checks": entries,
                       "trajectories": exported})
    with open(art / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_summary(art / "summary.csv", entries)
    return code, art, report


def _cmd_run(args):
    try:
        code, art, _ = run_scenario(args.config, threads=args.threads, out=args.out, log=sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"artifacts: {art}")
    return code


def _cmd_validate(args):
    try:
        sc = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{sc.name}: {len(sc.checks)} checks, ok")
    return EXIT_OK


def _cmd_list(args):
    for cid, needs, doc in describe():
        need = ",".join(needs) or "-"
        print(f"{cid:24s} {need:22s} {doc}")
    return EXIT_OK


def _cmd_export(args):
    traj = load_trajectory(args.traj)
    fmt = "bin" if args.fmt == "binary" else args.fmt
    dest = args.output or str(Path(args.traj).with_suffix("." + fmt))
    if os.path.abspath(dest) == os.path.abspath(args.traj):
        print("refusing to overwrite the input; pass -o", file=sys.stderr)
        return EXIT_FAIL
    export_trajectory(traj, dest, fmt)
    print(dest)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="pparabolic", description="Run p-parabolic estimate scenarios.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=1, help="run independent checks on N threads")
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config")
    r.add_argument("--out", help=f"output root (default ${ENV_ROOT} or ./pparabolic-out)")
    r.add_argument("--threads", type=int, default=None, dest="threads_run", help=argparse.SUPPRESS)
    r.set_defaults(fn=_cmd_run)
    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("config")
    v.set_defaults(fn=_cmd_validate)
    ls = sub.add_parser("list-checks", help="list registered check ids")
    ls.set_defaults(fn=_cmd_list)
    e = sub.add_parser("export", help="convert a trajectory file between csv and bin")
    e.add_argument("traj")
    e.add_argument("fmt", choices=["csv", "bin", "binary"])
    e.add_argument("-o", "--output")
    e.set_defaults(fn=_cmd_export)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads_run", None) is not None:
        args.threads = args.threads_run
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_FAIL
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
