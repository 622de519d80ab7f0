"""Command line: run scenarios, twin-check them, measure delta vs state sizes.

    deltacrdt run --scenario PATH [--seed N] [--out PATH]
    deltacrdt twin --scenario PATH [--seed N]
    deltacrdt sizebench --type SPEC --ops N --out PATH [--replicas R]
    deltacrdt list

A scenario given by bare name is looked up in ``$DELTACRDT_SCENARIOS`` and
then among the bundled scenarios.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import codec, datatypes, simnet
from .datatypes import SpecError
from .scenario import Scenario, ScenarioError, load

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_STUCK = 0, 1, 2, 3
SCENARIO_ENV = "DELTACRDT_SCENARIOS"


def bundled_dir() -> Path:
    return Path(str(resources.files("deltacrdt") / "scenarios"))


def resolve_scenario(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    dirs = []
    if os.environ.get(SCENARIO_ENV):
        dirs.append(Path(os.environ[SCENARIO_ENV]))
    dirs.append(bundled_dir())
    for d in dirs:
        for cand in (d / name, d / f"{name}.toml"):
            if cand.exists():
                return cand
    raise ScenarioError(f"scenario {name!r} not found (searched {', '.join(str(d) for d in dirs)})")


def _load(args) -> Scenario:
    sc = load(resolve_scenario(args.scenario))
    return sc.with_seed(args.seed) if args.seed is not None else sc


def cmd_run(args) -> int:
    sc = _load(args)
    try:
        report = simnet.run(sc)
    except simnet.SimulationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STUCK
    sys.stdout.write(report.to_text())
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write("\n" + report.to_csv())
    if report.failures:
        print(f"first failure: {report.failures[0]}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_twin(args) -> int:
    sc = _load(args)
    if sc.engine.kind != "causal":
        print("error: twin needs a scenario with engine.kind = \"causal\"", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = simnet.twin_run(sc)
    except simnet.SimulationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STUCK
    sys.stdout.write(report.to_text())
    if report.divergence:
        print(f"divergence: {report.divergence}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


# -- sizebench ---------------------------------------------------------------


def _sample_points(ops: int, samples: int) -> set[int]:
    if ops <= samples:
        return set(range(1, ops + 1))
    step = ops / samples
    return {1, ops} | {max(1, round(step * s)) for s in range(1, samples + 1)}


def sizebench(spec: str, ops: int, replicas: int = 1, samples: int = 500) -> list[tuple]:
    """Rows ``(op, delta_bytes, state_bytes, ratio)``.

    Delta sizes are measured at every op. Full-state sizes cost O(state)
    each, so they are measured at up to ``samples`` evenly spaced ops (always
    including the first and last); other rows leave them empty.
    """
    dt = datatypes.parse(spec)
    ids = [f"r{n}" for n in range(max(1, replicas))]
    state = dt.bottom
    sample = _sample_points(ops, samples)
    rows = []
    for k in range(ops):
        name, args = dt.grow(k)
        d = dt.delta_mutator(name, ids[k % len(ids)], args)(state)
        state = state.join(d)
        dsize = codec.encoded_size(d)
        n = k + 1
        if n in sample:
            ssize = codec.encoded_size(state)
            rows.append((n, dsize, ssize, round(ssize / dsize, 3)))
        else:
            rows.append((n, dsize, "", ""))
    return rows


def cmd_sizebench(args) -> int:
    try:
        rows = sizebench(args.type, args.ops, args.replicas, args.samples)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("op", "delta_bytes", "state_bytes", "ratio"))
        w.writerows(rows)
    if rows:
        deltas = [r[1] for r in rows[1:]] or [rows[0][1]]
        last = rows[-1]
        print(f"type {args.type} ops {args.ops} replicas {args.replicas}")
        print(f"first delta_bytes {rows[0][1]} state_bytes {rows[0][2]}")
        print(f"later delta_bytes min {min(deltas)} max {max(deltas)}")
        print(f"final delta_bytes {last[1]} state_bytes {last[2]} ratio {last[3]}")
    return EXIT_OK


def cmd_list(args) -> int:
    for p in sorted(bundled_dir().glob("*.toml")):
        print(p.stem)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deltacrdt", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and report convergence and metrics")
    run.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--out", help="write machine-readable rows (CSV) here")
    run.set_defaults(func=cmd_run)

    twin = sub.add_parser("twin", help="check the delta engine against the full-state engine")
    twin.add_argument("--scenario", required=True)
    twin.add_argument("--seed", type=int)
    twin.set_defaults(func=cmd_twin)

    sb = sub.add_parser("sizebench", help="per-op delta size vs full-state size")
    sb.add_argument("--type", required=True, help="datatype spec, e.g. gset(int)")
    sb.add_argument("--ops", type=int, required=True)
    sb.add_argument("--out", required=True)
    sb.add_argument("--replicas", type=int, default=1, help="ops rotate over this many replicas")
    sb.add_argument("--samples", type=int, default=500, help="max number of full-state size samples")
    sb.set_defaults(func=cmd_sizebench)

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, SpecError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
