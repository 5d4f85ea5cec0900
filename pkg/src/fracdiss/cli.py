"""Command line front end: ``run``, ``verify`` and ``dump-kernel``.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 failed
check with a solver that did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
import time
from importlib import metadata, resources
from pathlib import Path

from .runner import ConfigError, apply_override, execute, to_jsonable, validate

log = logging.getLogger("fracdiss")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2, 3
DEFAULT_MANIFEST = "default"


def _dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def load_config(path, overrides=()) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError("<file>", str(err)) from None
    except json.JSONDecodeError as err:
        raise ConfigError("<file>", f"not valid JSON: {err}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def _table_csv(cfg, table) -> str:
    cols, rows = table
    buf = io.StringIO()
    buf.write("# " + json.dumps(to_jsonable(cfg), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in to_jsonable(row)])
    return buf.getvalue()


def run_config(cfg: dict, out_dir=None) -> tuple[int, dict]:
    """Run one config and write its artifacts; returns ``(exit code, verdict)``."""
    t0 = time.perf_counter()
    try:
        cfg = validate(cfg)
        outcome = execute(cfg)
    except ConfigError as err:
        log.error("config error in %s", err)
        return EXIT_CONFIG, {"kind": cfg.get("kind") if isinstance(cfg, dict) else None,
                             "verdict": "ERROR", "error": str(err)}
    except AssertionError as err:
        log.error("check failed: %s", err)
        return EXIT_FAIL, {"kind": cfg["kind"], "verdict": "FAIL", "summary": {}, "flags": [str(err)]}
    wall = time.perf_counter() - t0
    verdict = {
        "kind": cfg["kind"],
        "verdict": "PASS" if outcome.passed else "FAIL",
        "summary": outcome.summary,
        "flags": outcome.flags,
    }
    out = out_dir or cfg.get("output")
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(_dumps({"config": cfg, "result": outcome.record}))
        if outcome.table is not None:
            (out / "results.csv").write_text(_table_csv(cfg, outcome.table))
        (out / "verdict.json").write_text(_dumps(verdict))
        (out / "provenance.json").write_text(_dumps({
            "config": cfg,
            "version": _version(),
            "python": platform.python_version(),
            "threads": os.environ.get("FRACDISS_THREADS"),
            "wall_time_s": wall,
        }))
    if outcome.passed:
        return EXIT_OK, verdict
    return (EXIT_NONCONVERGED if outcome.nonconverged else EXIT_FAIL), verdict


# -- manifests ------------------------------------------------------------------------


def load_manifest(name_or_path) -> tuple[dict, Path | None]:
    if name_or_path in (None, DEFAULT_MANIFEST):
        text = resources.files("fracdiss").joinpath("manifests", "default.json").read_text()
        return json.loads(text), None
    path = Path(name_or_path)
    try:
        return json.loads(path.read_text()), path.parent
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError("<manifest>", str(err)) from None


def _check_expectations(expect: dict, verdict: dict) -> list[str]:
    problems = []
    want = expect.get("verdict", "PASS")
    if verdict["verdict"] != want:
        problems.append(f"verdict {verdict['verdict']} != expected {want}")
    for key, spec in expect.get("values", {}).items():
        got = verdict.get("summary", {}).get(key)
        if got is None:
            problems.append(f"{key} missing from summary")
            continue
        tol = spec.get("rel_tol", 0.0) * abs(spec["value"]) + spec.get("abs_tol", 0.0)
        if abs(got - spec["value"]) > tol:
            problems.append(f"{key}={got:.6g}, expected {spec['value']:.6g} +- {tol:.3g}")
    return problems


def verify_all(manifest: dict, base: Path | None = None, out_dir=None, stream=None) -> int:
    """Run every manifest entry and print a table of anchors and verdicts."""
    stream = stream or sys.stdout
    entries = manifest.get("experiments", [])
    if not isinstance(entries, list):
        raise ConfigError("experiments", "expected a list")
    rows, code = [], EXIT_OK
    for i, entry in enumerate(entries):
        name = entry.get("name", f"entry-{i}")
        cfg = entry.get("config")
        if isinstance(cfg, str):
            cfg = load_config((base or Path.cwd()) / cfg)
        sub = Path(out_dir) / name if out_dir else None
        started = time.perf_counter()
        rc, verdict = run_config(cfg or {}, sub)
        problems = _check_expectations(entry.get("expect", {}), verdict) if rc != EXIT_CONFIG else [verdict["error"]]
        status = "OK" if not problems else "MISMATCH"
        if problems:
            code = EXIT_FAIL
        rows.append((name, entry.get("anchor", ""), verdict["verdict"], status,
                     f"{time.perf_counter() - started:.1f}s", "; ".join(problems)))
    if rows:
        widths = [max(len(str(r[j])) for r in rows + [_HEADER]) for j in range(5)]
        for r in [_HEADER] + rows:
            line = "  ".join(str(c).ljust(w) for c, w in zip(r, widths))
            stream.write((line + ("  " + r[5] if r[5] else "")).rstrip() + "\n")
    stream.write(f"{sum(r[3] == 'OK' for r in rows)}/{len(rows)} as expected\n")
    return code


_HEADER = ("experiment", "anchor", "verdict", "status", "time", "")


# -- kernel dump ----------------------------------------------------------------------


def dump_kernel(alpha: float, t: float, n: int, L: float, N: int, out: Path, waive_guard=False) -> None:
    from .fieldio import field_to_csv, write_field
    from .grid import SLICE, Field, make_grid
    from .kernel import spectral_kernel

    grid = make_grid(n, L, N, 1.0, 2)
    ks = spectral_kernel(alpha, t, grid, waive_guard=waive_guard)
    field = Field(grid, ks.values, SLICE)
    extra = {"alpha": alpha, "t": t, "extend": ks.extend, "total_mass": ks.total_mass}
    if out.suffix == ".csv":
        out.write_text(field_to_csv(field, extra))
    else:
        write_field(out, field, extra)


# -- entry point -----------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracdiss", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, help="output directory (overrides the config's 'output')")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field; dotted keys reach nested objects")

    v = sub.add_parser("verify", help="run a manifest of configs with expected verdicts")
    v.add_argument("manifest", nargs="?", default=DEFAULT_MANIFEST,
                   help="manifest path, or 'default' for the shipped suite")
    v.add_argument("--out", type=Path, help="write each experiment's artifacts under this directory")

    d = sub.add_parser("dump-kernel", help="write a synthesized kernel slice as a field file")
    d.add_argument("alpha", type=float)
    d.add_argument("t", type=float)
    d.add_argument("n", type=int)
    d.add_argument("L", type=float)
    d.add_argument("N", type=int)
    d.add_argument("--out", type=Path, required=True, help="'.csv' for CSV, anything else for binary")
    d.add_argument("--waive-guard", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, args.overrides)
            code, verdict = run_config(cfg, args.out)
            print(json.dumps(to_jsonable(verdict), sort_keys=True))
            return code
        if args.command == "verify":
            manifest, base = load_manifest(args.manifest)
            return verify_all(manifest, base, args.out)
        dump_kernel(args.alpha, args.t, args.n, args.L, args.N, args.out, args.waive_guard)
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
