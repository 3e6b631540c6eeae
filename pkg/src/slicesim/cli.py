"""Command-line entry point: ``slicesim gen|estimate|oracle|compare|verify|bench``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import platform
import statistics
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, checks, corpus, dense
from .driver import EstimatorParams, a_full, asymptotic_feasible, asymptotic_params, detect_heavy_slices
from .lattice import enumerate_slices, extract_slice_circuit, loads_circuit, validate_circuit
from .mps import ExactBase, MpsBase, MpsConfig
from .synthesis import estimate_kappa

SCHEMA_VERSION = "slicesim.result/1"
PARAM_FIELDS = {f.name for f in dataclasses.fields(EstimatorParams)}
CONFIG_KEYS = PARAM_FIELDS | {"delta", "base", "max_bond", "seed"}


class CliError(Exception):
    """Reported as a one-line message with exit code 2."""


# ------------------------------------------------------------------ helpers


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _record(command: str, config: dict, **body) -> dict:
    return {"schema": SCHEMA_VERSION, "version": __version__, "command": command, "created_utc": _now(),
            "host": {"python": platform.python_version(), "numpy": np.__version__}, "config": config, **body}


def _emit(record: dict, out: str | None) -> None:
    text = json.dumps(record, indent=1, sort_keys=True, default=_jsonable)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _load_circuit(path: str):
    p = Path(path)
    try:
        c = loads_circuit(p.read_text())
    except FileNotFoundError:
        raise CliError(f"{path}: no such file")
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: invalid circuit JSON ({exc})")
    report = validate_circuit(c)
    if not report.ok:
        raise CliError(f"{path}: circuit rejected: {'; '.join(report.violations[:5])}")
    return c


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    data = json.loads(Path(path).read_text())
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise CliError(f"{path}: unknown config keys {sorted(unknown)}")
    return data


def _params(args) -> tuple[EstimatorParams, dict]:
    """EstimatorParams from --config, then explicit flags; returns (params, snapshot)."""
    cfg = _load_config(getattr(args, "config", None))
    values = {k: v for k, v in cfg.items() if k in PARAM_FIELDS}
    for name in PARAM_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if getattr(args, "no_memoize", False):
        values["memoize"] = False
    try:
        params = EstimatorParams(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad estimator parameters: {exc}")
    delta = args.delta if args.delta is not None else cfg.get("delta", 0.01)
    base = args.base or cfg.get("base", "mps")
    snap = {"params": dataclasses.asdict(params), "delta": delta, "base": base,
            "max_bond": args.max_bond if args.max_bond is not None else cfg.get("max_bond")}
    return params, snap


def _base(snap: dict):
    if snap["base"] == "exact":
        return ExactBase()
    return MpsBase(MpsConfig(max_bond=snap["max_bond"]))


def _check_asymptotic(args, c) -> dict | None:
    if args.asymptotic_params is None:
        return None
    n = args.asymptotic_params or c.dims.n
    table = asymptotic_params(n, args.delta if args.delta is not None else 0.01)
    print(json.dumps({"n": n, "asymptotic_params": table}, indent=1), file=sys.stderr)
    ok, why = asymptotic_feasible(n, c.dims.as_tuple(), c.depth)
    if not ok:
        raise CliError(f"asymptotic parameters infeasible on this lattice: {why}")
    return table


def _run_estimate(args, c):
    params, snap = _params(args)
    table = _check_asymptotic(args, c)
    if table is not None:
        params = dataclasses.replace(params, asymptotic=True)
        snap["asymptotic"] = table
    base = _base(snap)
    t0 = time.perf_counter()
    trace = a_full(c, base, snap["delta"], params)
    timings = {"a_full": time.perf_counter() - t0}
    if isinstance(base, MpsBase):
        timings["base_case"] = base.seconds
    extra = {}
    if args.dump_bond_profile and isinstance(base, MpsBase):
        extra["bond_profile"] = [r.bond_profile for r in base.last_runs]
        extra["peak_bond"] = base.peak_bond
    return trace, snap, timings, extra


# ----------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    lengths = tuple(int(v) for v in args.lengths.split(","))
    try:
        insts = corpus.generate(args.profile, args.seed, args.count, args.shape, lengths, args.theta,
                                args.offset, args.depth, args.heavy_floor)
    except (ValueError, RuntimeError) as exc:
        raise CliError(str(exc))
    manifest = corpus.write_corpus(insts, args.out)
    print(f"wrote {len(insts)} circuits and {manifest}")
    return 0


def cmd_oracle(args) -> int:
    c = _load_circuit(args.circuit)
    t0 = time.perf_counter()
    try:
        state = dense.statevector(c)
    except ValueError as exc:
        raise CliError(str(exc))
    value = float(abs(state.amplitudes[0]) ** 2)
    if args.json or args.dump_state:
        body = {"oracle": value, "timings": {"dense": time.perf_counter() - t0}}
        if args.dump_state:
            body["state"] = {"qubit_order": [q.to_json() for q in state.qubit_order],
                             "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes]}
        _emit(_record("oracle", {"circuit": args.circuit}, **body), args.out)
    else:
        print(repr(value))
    return 0


def cmd_estimate(args) -> int:
    c = _load_circuit(args.circuit)
    try:
        trace, snap, timings, extra = _run_estimate(args, c)
    except ValueError as exc:
        raise CliError(str(exc))
    snap["circuit"] = args.circuit
    _emit(_record("estimate", snap, estimate=trace.to_dict(), timings=timings, **extra), args.out)
    return 0


def cmd_compare(args) -> int:
    c = _load_circuit(args.circuit)
    try:
        trace, snap, timings, extra = _run_estimate(args, c)
        t0 = time.perf_counter()
        oracle = dense.zero_probability(c)
    except ValueError as exc:
        raise CliError(str(exc))
    timings["dense"] = time.perf_counter() - t0
    gap = abs(trace.value - oracle)
    ok = gap <= 5 * trace.budget
    snap["circuit"] = args.circuit
    _emit(_record("compare", snap, estimate=trace.to_dict(), oracle=oracle, error=gap, budget=trace.budget,
                  within_budget=gap <= trace.budget, ok=ok, timings=timings, **extra), args.out)
    if not ok:
        print(f"FAIL |estimate − oracle| = {gap:.3e} exceeds 5× budget {5 * trace.budget:.3e}", file=sys.stderr)
    return 0 if ok else 1


def fixture_dir() -> Path:
    return Path(str(resources.files("slicesim") / "fixtures"))


def _cases(root: Path) -> list[checks.Case]:
    data = corpus.read_manifest(root)
    out = []
    for entry in data["instances"]:
        c = loads_circuit((root / entry["file"]).read_text())
        geo = entry["slice_geometry"]
        slices = enumerate_slices(c, geo["axis"], geo["w_slice"], geo["spacing"], geo["offset"], geo["m_width"])
        out.append(checks.Case(entry["file"], c, tuple(slices)))
    return out


def run_suites(cases: list[checks.Case], names, seed: int = 0) -> list[checks.SuiteResult]:
    rng = np.random.default_rng(seed)
    runners = {
        "block-encoding": lambda: checks.block_encoding_suite(checks.random_encoding_cases(rng, 40)),
        "projector-bound": lambda: checks.projector_bound_suite(cases),
        "slice-independence": lambda: checks.independence_suite(cases),
        "heavy-slice-count": lambda: checks.heavy_count_suite(cases),
        "top-schmidt-bound": lambda: checks.top_schmidt_suite(cases),
        "inclusion-exclusion": lambda: checks.inclusion_exclusion_suite(cases),
        "product-split": lambda: checks.product_split_suite(cases),
        "kappa-accuracy": lambda: checks.kappa_suite(cases, ExactBase()),
    }
    return [runners[name]() for name in names]


def cmd_verify(args) -> int:
    root = Path(args.corpus) if args.corpus else fixture_dir()
    names = args.suites.split(",") if args.suites else list(checks.SUITES)
    bad = [n for n in names if n not in checks.SUITES]
    if bad:
        raise CliError(f"unknown suites {bad}; choose from {list(checks.SUITES)}")
    try:
        cases = _cases(root)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"{root}: cannot load corpus ({exc})")
    results = []
    for res in run_suites(cases, names, args.seed):
        print(res.line(), file=sys.stderr)
        results.append(res)
    failures = [r.to_dict() for r in results if not r.passed]
    _emit(_record("verify", {"corpus": str(root), "suites": names, "seed": args.seed},
                  suites=[r.to_dict() for r in results], failures=failures), args.out)
    return 0 if not failures else 1


def cmd_bench(args) -> int:
    params, snap = _params(args)
    lengths = [int(v) for v in args.lengths.split(",")]
    rows = []
    for length in lengths:
        inst = corpus.generate("near-identity", args.seed, 1, args.shape, (length,), args.theta)[0]
        c = inst.circuit
        slices = inst.slices()
        row = {"n": c.dims.n, "length": length, "slices": len(slices)}
        base = _base(snap)
        t0 = time.perf_counter()
        detect_heavy_slices(c, slices, snap["delta"], params.h, base)
        row["heavy_detection"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        for sl in slices:
            estimate_kappa(extract_slice_circuit(c, sl), sl, params.T, params.eps2, base)
        row["kappa"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        trace = a_full(c, _base(snap), snap["delta"], params)
        row["a_full"] = time.perf_counter() - t0
        row["branch"] = trace.branch
        if c.dims.n <= min(dense.dense_cap(), args.oracle_max):
            t0 = time.perf_counter()
            oracle = dense.zero_probability(c)
            row["dense"] = time.perf_counter() - t0
            row["error"] = abs(trace.value - oracle)
        row["budget"] = trace.budget
        rows.append(row)
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()),
              file=sys.stderr)
    snap["lengths"] = lengths
    _emit(_record("bench", snap, rows=rows,
                  summary={"median_a_full": statistics.median(r["a_full"] for r in rows)}), args.out)
    return 0


# ------------------------------------------------------------------- parser


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("estimator parameters")
    g.add_argument("--config", help="JSON file of parameter values (flags override it)")
    g.add_argument("--delta", type=float, help="target additive error δ (default 0.01)")
    g.add_argument("--Delta", type=int, help="cuts per division")
    g.add_argument("--K", type=int, help="projector power")
    g.add_argument("--T", type=int, help="κ power")
    g.add_argument("--eta", type=int, help="recursion depth budget")
    g.add_argument("--eps", type=float, help="base-case error")
    g.add_argument("--eps2", type=float, help="κ base-case error")
    g.add_argument("--h", type=float, help="light-slice allowance")
    g.add_argument("--w0", type=int, help="stopping width")
    g.add_argument("--z-width", dest="z_width", type=int, help="width of the central zone")
    g.add_argument("--w-slice", dest="w_slice", type=int, help="width of B and F")
    g.add_argument("--m-width", dest="m_width", type=int, help="width of M")
    g.add_argument("--spacing", type=int, help="gap between consecutive slices")
    g.add_argument("--offset", type=int, help="coordinate of the first slice")
    g.add_argument("--axis", type=int, help="cut axis (0, 1, 2)")
    g.add_argument("--brute-force-delta", dest="brute_force_delta", type=float,
                   help="δ at or below which the answer is computed exactly")
    g.add_argument("--no-memoize", action="store_true", help="recompute repeated children")
    g.add_argument("--base", choices=("mps", "exact"), help="base-case evaluator (default mps)")
    g.add_argument("--max-bond", dest="max_bond", type=int, help="MPS bond cap (default: none)")
    g.add_argument("--asymptotic-params", dest="asymptotic_params", type=int, nargs="?", const=0,
                   metavar="N", help="print the asymptotic parameter schedule for N qubits and use it if feasible")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slicesim", description=__doc__)
    ap.add_argument("--version", action="version", version=f"slicesim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded circuit corpus")
    p.add_argument("--profile", required=True, choices=corpus.PROFILES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--shape", choices=corpus.SHAPES, default="chain")
    p.add_argument("--lengths", default="18", help="comma-separated lattice lengths along z")
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--offset", type=int, default=1)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--heavy-floor", dest="heavy_floor", type=float, default=0.5)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="exact |⟨0|C|0⟩|² by statevector")
    p.add_argument("circuit")
    p.add_argument("--json", action="store_true", help="emit a result record instead of the bare number")
    p.add_argument("--dump-state", dest="dump_state", action="store_true", help="include the statevector")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    for name, func, text in (("estimate", cmd_estimate, "divide-and-conquer estimate"),
                             ("compare", cmd_compare, "estimate vs oracle; exit 1 beyond 5× budget")):
        p = sub.add_parser(name, help=text)
        p.add_argument("circuit")
        _add_params(p)
        p.add_argument("--dump-bond-profile", dest="dump_bond_profile", action="store_true")
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="run the dense property suites on a corpus")
    p.add_argument("corpus", nargs="?", help="corpus directory (default: shipped fixtures)")
    p.add_argument("--suites", help=f"comma-separated subset of {','.join(checks.SUITES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="per-module timings over a size sweep")
    p.add_argument("--lengths", default="12,18,24")
    p.add_argument("--shape", choices=corpus.SHAPES, default="chain")
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-max", dest="oracle_max", type=int, default=22)
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
