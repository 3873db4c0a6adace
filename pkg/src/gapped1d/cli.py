"""Command line entry point: ``gapped1d {solve,verify,bench,refresh-fixtures}``.

Exit codes: 0 success, 1 failed checks (verify), 2 aborted iteration,
3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import config, exact, hamiltonian, jsonio, lemmas, mps, pipeline
from .errors import ConfigError, IterationAborted

log = logging.getLogger("gapped1d")

EXIT_OK = 0
EXIT_CHECKS = 1
EXIT_ABORTED = 2
EXIT_CONFIG = 3

BENCH_COLUMNS = ["name", "n", "d", "fidelity", "energy_error", "wall_seconds", "peak_set", "peak_bond", "status"]
DEFAULT_SUITE = ("tfim_n4", "tfim_n6", "tfim_n8")


def packaged_config(name: str) -> dict:
    """One of the example run configurations shipped with the package."""
    text = resources.files("gapped1d").joinpath("configs", f"{name}.json").read_text()
    return json.loads(text)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapped1d", description="Viable-set ground state solver for gapped 1D chains.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the full pipeline")
    s.add_argument("--config", required=True)
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--seed", type=int)
    s.add_argument("--oracle", dest="oracle", action="store_true", default=None)
    s.add_argument("--no-oracle", dest="oracle", action="store_false")
    s.add_argument("--out", default="out")

    v = sub.add_parser("verify", help="run the lemma property suites")
    v.add_argument("--config")
    v.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="run a suite of models and write bench.csv")
    b.add_argument("--suite", nargs="*", default=None, help="packaged config names or paths (default: TFIM n=4,6,8)")
    b.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    b.add_argument("--out", default="bench")

    f = sub.add_parser("refresh-fixtures", help="recompute exact-diagonalization fixture values")
    f.add_argument("--out", required=True)
    return p


def _load_cfg(path, overrides, seed=None) -> config.RunConfig:
    return config.load(path, overrides, seed)


def cmd_solve(args) -> int:
    extra = list(args.override)
    if args.oracle is not None:
        extra.append(f"oracle={'true' if args.oracle else 'false'}")
    cfg = _load_cfg(args.config, extra, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    state, report, timings = pipeline.run(cfg)
    total = time.perf_counter() - t0
    (out / "result.mps.json").write_text(mps.to_json(state))
    (out / "report.json").write_text(jsonio.dumps(report))
    (out / "timings.json").write_text(jsonio.dumps({"iterations": timings, "total_seconds": total}))
    summary = pipeline.summary_table(report, timings) + f"wall time    {total:.1f} s\n"
    (out / "summary.txt").write_text(summary)
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.config:
        _load_cfg(args.config, args.override)
    rng = np.random.default_rng(args.seed)
    results = lemmas.run_suite(rng, args.instances)
    ok = True
    for name, (passed, total, worst) in results.items():
        flag = "PASS" if passed == total else "FAIL"
        ok &= passed == total
        print(f"{flag}  {name:<20} {passed}/{total}  worst slack {worst:.3e}")
    return EXIT_OK if ok else EXIT_CHECKS


def _bench_row(name: str, doc: dict, overrides) -> dict:
    merged = config.apply_overrides(config._merge(config.DEFAULTS, doc), overrides)
    cfg = config.from_dict(merged)
    t0 = time.perf_counter()
    row = {"name": name, "n": cfg.model.n, "d": cfg.model.d}
    try:
        _, report, _ = pipeline.run(cfg)
    except IterationAborted as exc:
        row.update({"status": f"aborted: {exc}", "wall_seconds": time.perf_counter() - t0})
        return row
    peak_set = max(max(r[k]["size"] for k in ("extend", "cardinality", "trim", "error_reduce")) for r in report["iterations"])
    peak_bond = max(
        max(r[k]["max_bond"] for k in ("extend", "cardinality", "trim", "error_reduce")) for r in report["iterations"]
    )
    f = report["final"]
    row.update(
        {
            "fidelity": f["fidelity"],
            "energy_error": f["energy_error"],
            "wall_seconds": time.perf_counter() - t0,
            "peak_set": peak_set,
            "peak_bond": peak_bond,
            "status": "ok",
        }
    )
    return row


def bench_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items() if k in BENCH_COLUMNS})
    return buf.getvalue()


def cmd_bench(args) -> int:
    names = DEFAULT_SUITE if args.suite is None else args.suite
    rows = []
    for name in names:
        path = Path(name)
        doc = json.loads(path.read_text()) if path.is_file() else packaged_config(name)
        rows.append(_bench_row(path.stem if path.is_file() else name, doc, args.override))
        print(f"{rows[-1]['name']}: {rows[-1]['status']}", flush=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = bench_csv(rows)
    (out / "bench.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


FIXTURE_MODELS = [
    {"model": "tfim", "n": n, "d": 2, "params": {"g": g}} for n in (2, 4, 6, 8) for g in (0.5, 1.0, 2.0)
] + [{"model": "xxz", "n": n, "d": 2, "params": {"delta": 2.0, "h": 0.0}} for n in (4, 6)]


def cmd_refresh_fixtures(args) -> int:
    records = []
    for doc in FIXTURE_MODELS:
        spec = hamiltonian.ModelSpec.from_dict(doc)
        H = hamiltonian.normalize(hamiltonian.build(spec), with_gap=False)
        records.append(exact.fixture_record(spec, H))
    Path(args.out).write_text(jsonio.dumps({"normalized": True, "records": records}))
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; map to the config-error code
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {
        "solve": cmd_solve,
        "verify": cmd_verify,
        "bench": cmd_bench,
        "refresh-fixtures": cmd_refresh_fixtures,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IterationAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED


if __name__ == "__main__":
    sys.exit(main())
