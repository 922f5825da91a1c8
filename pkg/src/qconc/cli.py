"""Command-line entry point: ``qconc {verify,concurrence,tangle,simulate,sweep}``.

Exit codes: 0 success, 1 verification or estimation gate failure, 2 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from ._parallel import parallel_map
from .entanglement import (
    concurrence_from_moments,
    tau_from_moments,
    three_tangle_from_reduced,
    three_tangle_hyperdet,
    trace_moments,
    wootters_concurrence,
)
from .observables import (
    SCHEMES,
    rank_checks,
    resolve_two_copy_relation,
    verify_four_copy,
    verify_groups,
    verify_mm_reduction,
    verify_mn_decomposition,
)
from .sampling import simulate, write_shot_csv
from .states import (
    CANONICAL_NAMES,
    DensityMatrix,
    RandomSource,
    State,
    StateValidationError,
    as_density,
    canonical_state,
    haar_random_pure,
    load_state,
    random_rank2_with_parent,
)
from .tensor import PureState, reduce_pure

log = logging.getLogger("qconc")

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2
REDUCED_NAMES = ("ghz_reduced", "w_reduced")
MIN_VERIFY_TRIALS = 50


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int
    tolerance: float
    trials: int
    shots: int
    scheme: str
    state: str | None
    method: str | None
    out: str | None
    format: str
    strict: bool = False


# -- helpers ---------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def resolve_state(source: str, seed: int, want: str = "pair") -> State:
    """Canonical name, ``*_reduced`` name, ``random`` or a state-file path."""
    if source in CANONICAL_NAMES:
        return canonical_state(source)
    if source in REDUCED_NAMES:
        rho = reduce_pure(canonical_state(source.removesuffix("_reduced")), [0, 1])
        return DensityMatrix(rho.data, rho.dims)
    if source == "random":
        rng = RandomSource(seed)
        return haar_random_pure(3, rng) if want == "triple" else random_rank2_with_parent(rng)[0]
    path = source.removeprefix("file:")
    if not os.path.exists(path):
        raise UsageError(f"state {source!r} is neither a known name nor an existing file")
    try:
        return load_state(path)
    except OSError as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from exc


def _two_qubit_density(state: State) -> DensityMatrix:
    if isinstance(state, PureState) and state.dims == (2, 2, 2):
        rho = reduce_pure(state, [0, 1])
        return DensityMatrix(rho.data, rho.dims)
    rho = as_density(state)
    if rho.dims != (2, 2):
        raise UsageError(f"need a two-qubit state (or a three-qubit pure state to reduce), got dims {rho.dims}")
    return rho


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from exc


def _emit(cfg: RunConfig, payload: dict, text_lines: list[str], csv_rows: list[list] | None = None) -> None:
    header = {"config": asdict(cfg), "version": __version__}
    if cfg.format == "json":
        text = json.dumps({**header, **payload}, indent=2, default=_jsonable) + "\n"
    elif cfg.format == "csv":
        buf = io.StringIO()
        buf.write("# config=" + json.dumps(asdict(cfg), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        for row in csv_rows or []:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
        text = buf.getvalue()
    else:
        lines = ["# " + json.dumps(asdict(cfg), sort_keys=True)] + text_lines
        text = "\n".join(lines) + "\n"
    _write(text, cfg.out)


# -- commands --------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.trials < MIN_VERIFY_TRIALS:
        raise UsageError(f"--trials must be >= {MIN_VERIFY_TRIALS} for verify, got {cfg.trials}")
    tol = cfg.tolerance
    src = lambda k: RandomSource(cfg.seed, k)  # noqa: E731
    verdict, two_copy = resolve_two_copy_relation(max(cfg.trials, 100), src(0), tol)
    direction, four_copy = verify_four_copy(cfg.trials, src(1), tol)
    checks = [
        two_copy,
        four_copy,
        verify_mn_decomposition(tol, cfg.trials, src(2), direction or "forward"),
        rank_checks(),
        verify_mm_reduction(cfg.trials, src(3), tol),
        verify_groups("global", cfg.trials, src(4), tol),
        verify_groups("local6", cfg.trials, src(5), tol),
    ]
    failing = [c.identity for c in checks if not c.passed]
    payload = {
        "command": "verify",
        "passed": not failing,
        "first_failure": failing[0] if failing else None,
        "two_copy_relation": verdict,
        "swap_direction": direction or None,
        "identities": [c.to_dict() for c in checks],
    }
    lines = [f"{c.identity:<22} {c.status:<17} max_residual={_fmt(c.max_residual)}" for c in checks]
    lines.append("PASS" if not failing else f"FAIL: {failing[0]}")
    rows = [["identity", "status", "max_residual", "trials", "tolerance"]] + [
        [c.identity, c.status, c.max_residual, c.trials, c.tolerance] for c in checks
    ]
    _emit(cfg, payload, lines, rows)
    if failing:
        log.error("verification failed: %s", failing[0])
        return EXIT_GATE
    return EXIT_OK


def _rank_gate(cfg: RunConfig, rho: DensityMatrix, payload: dict) -> bool:
    """True when the rank-2 formulas may be used."""
    r = rho.rank()
    payload["rank"] = r
    if r <= 2:
        return True
    log.warning("state has rank %d > 2; moment formulas do not apply, reporting the Wootters value", r)
    payload["warning"] = f"rank {r} > 2"
    payload["wootters"] = wootters_concurrence(rho)
    return False


def cmd_concurrence(cfg: RunConfig) -> int:
    method = cfg.method or "wootters"
    if method not in ("wootters", "moments", "sampled"):
        raise UsageError(f"unknown concurrence method {method!r}")
    rho = _two_qubit_density(resolve_state(cfg.state, cfg.seed))
    payload: dict = {"command": "concurrence", "method": method}
    lines = []
    if method == "wootters":
        payload["value"] = wootters_concurrence(rho)
        payload["rank"] = rho.rank()
    elif not _rank_gate(cfg, rho, payload):
        payload["value"] = payload["wootters"]
        if cfg.strict:
            _emit(cfg, payload, [f"rank violation: {payload['warning']}"], [["rank", payload["rank"]]])
            return EXIT_GATE
    elif method == "moments":
        clamps: list = []
        m = trace_moments(rho)
        payload.update(t1=m.t1, t2=m.t2, value=concurrence_from_moments(m, clamps))
        payload["clamps"] = [asdict(c) for c in clamps]
    else:
        sim = simulate(rho, cfg.scheme, cfg.shots, RandomSource(cfg.seed))
        est = sim.reports["concurrence"]
        payload["value"] = est.mean
        payload["estimate"] = est.to_dict()
        lines.append(f"stderr {_fmt(est.stderr)}  ci95 [{_fmt(est.ci95[0])}, {_fmt(est.ci95[1])}]")
    lines.insert(0, f"concurrence ({method}) = {_fmt(payload['value'])}")
    rows = [["quantity", "method", "value"], ["concurrence", method, float(payload["value"])]]
    _emit(cfg, payload, lines, rows)
    return EXIT_OK


def cmd_tangle(cfg: RunConfig) -> int:
    method = cfg.method or "moments"
    if method not in ("moments", "hyperdet", "sampled"):
        raise UsageError(f"unknown tangle method {method!r}")
    state = resolve_state(cfg.state, cfg.seed, want="triple")
    payload: dict = {"command": "tangle", "method": method}
    lines = []
    if method == "hyperdet":
        if not (isinstance(state, PureState) and state.dims == (2, 2, 2)):
            raise UsageError("the hyperdeterminant needs a three-qubit pure state")
        payload["value"] = three_tangle_hyperdet(state)
    else:
        rho = _two_qubit_density(state)
        if not _rank_gate(cfg, rho, payload):
            payload["value"] = None
            _emit(cfg, payload, [f"rank violation: {payload['warning']}"], [["rank", payload["rank"]]])
            return EXIT_GATE if cfg.strict else EXIT_OK
        if method == "moments":
            clamps: list = []
            payload["value"] = three_tangle_from_reduced(rho, clamps)
            payload["clamps"] = [asdict(c) for c in clamps]
        else:
            est = simulate(rho, cfg.scheme, cfg.shots, RandomSource(cfg.seed)).reports["three_tangle"]
            payload["value"] = est.mean
            payload["estimate"] = est.to_dict()
            lines.append(f"stderr {_fmt(est.stderr)}  ci95 [{_fmt(est.ci95[0])}, {_fmt(est.ci95[1])}]")
        if isinstance(state, PureState) and state.dims == (2, 2, 2):
            payload["hyperdet_crosscheck"] = three_tangle_hyperdet(state)
    lines.insert(0, f"three_tangle ({method}) = {_fmt(payload['value'])}")
    rows = [["quantity", "method", "value"], ["three_tangle", method, float(payload["value"])]]
    _emit(cfg, payload, lines, rows)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, shots_csv: str | None = None) -> int:
    rho = _two_qubit_density(resolve_state(cfg.state, cfg.seed))
    payload: dict = {"command": "simulate"}
    if not _rank_gate(cfg, rho, payload) and cfg.strict:
        _emit(cfg, payload, [f"rank violation: {payload['warning']}"], [["rank", payload["rank"]]])
        return EXIT_GATE
    sim = simulate(rho, cfg.scheme, cfg.shots, RandomSource(cfg.seed))
    payload.update(sim.to_dict())
    if shots_csv:
        try:
            write_shot_csv(sim.records, shots_csv)
        except OSError as exc:
            raise UsageError(f"cannot write {shots_csv}: {exc}") from exc
    lines = [
        f"{q:<13} {_fmt(r.mean):>16} +- {_fmt(r.stderr):<16} ci95 [{_fmt(r.ci95[0])}, {_fmt(r.ci95[1])}]"
        for q, r in sim.reports.items()
    ]
    rows = [["quantity", "mean", "stderr", "ci95_low", "ci95_high", "shots_per_group", "scheme"]] + [
        [q, r.mean, r.stderr, r.ci95[0], r.ci95[1], r.shots_per_group, r.scheme] for q, r in sim.reports.items()
    ]
    _emit(cfg, payload, lines, rows)
    return EXIT_OK


SWEEP_COLUMNS = [
    "index", "stream", "C_wootters", "C_moments", "abs_err", "t1", "t2", "tau",
    "tangle_hyperdet", "tangle_moments", "tangle_abs_err",
]


def sweep_row(seed: int, index: int) -> list:
    rho, psi = random_rank2_with_parent(RandomSource(seed, index))
    m = trace_moments(rho)
    cw = wootters_concurrence(rho)
    cm = concurrence_from_moments(m)
    tau = tau_from_moments(m)
    th = three_tangle_hyperdet(psi)
    return [index, index, cw, cm, abs(cw - cm), m.t1, m.t2, tau, th, 2 * tau, abs(th - 2 * tau)]


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.trials < 1:
        raise UsageError("--trials must be >= 1")
    rows = parallel_map(lambda i: sweep_row(cfg.seed, i), range(cfg.trials))
    max_c = max(r[4] for r in rows)
    max_t = max(r[10] for r in rows)
    summary = ["max", "", "", "", max_c, "", "", "", "", "", max_t]
    ok = max_c < cfg.tolerance and max_t < cfg.tolerance
    payload = {
        "command": "sweep",
        "columns": SWEEP_COLUMNS,
        "rows": rows,
        "summary": {"max_abs_err": max_c, "max_tangle_abs_err": max_t, "passed": ok},
    }
    lines = [f"trials {cfg.trials}", f"max |C_moments - C_wootters| = {_fmt(max_c)}",
             f"max |tangle_moments - tangle_hyperdet| = {_fmt(max_t)}"]
    _emit(cfg, payload, lines, [SWEEP_COLUMNS] + rows + [summary])
    return EXIT_OK if ok else EXIT_GATE


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", default=None, help="canonical name, ghz_reduced, w_reduced, random, or JSON file")
    common.add_argument("--method", default=None)
    common.add_argument("--scheme", default="local6", choices=SCHEMES)
    common.add_argument("--shots", type=int, default=100_000, help="shots per measurement group")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", default=None, choices=("json", "csv", "text"))
    common.add_argument("--strict", action="store_true", help="treat rank > 2 as a gate failure")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qconc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="check every operator identity")
    sub.add_parser("concurrence", parents=[common], help="concurrence: wootters | moments | sampled")
    sub.add_parser("tangle", parents=[common], help="3-tangle: moments | hyperdet | sampled")
    sim = sub.add_parser("simulate", parents=[common], help="shot-noise estimates of all quantities")
    sim.add_argument("--shots-csv", default=None, help="also dump per-group outcome counts as CSV")
    sub.add_parser("sweep", parents=[common], help="oracle-equivalence sweep over random states (CSV)")
    return parser


_DEFAULT_TRIALS = {"verify": 200, "sweep": 1000}
_DEFAULT_FORMAT = {"sweep": "csv"}
_NEEDS_STATE = ("concurrence", "tangle", "simulate")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command in _NEEDS_STATE and args.state is None:
        parser.error(f"{args.command} requires --state")
    if args.shots < 1:
        parser.error("--shots must be >= 1")
    cfg = RunConfig(
        command=args.command,
        seed=args.seed,
        tolerance=args.tol,
        trials=args.trials if args.trials is not None else _DEFAULT_TRIALS.get(args.command, 200),
        shots=args.shots,
        scheme=args.scheme,
        state=args.state,
        method=args.method,
        out=args.out,
        format=args.format or _DEFAULT_FORMAT.get(args.command, "json"),
        strict=args.strict,
    )
    if not 0 <= cfg.seed < 2**64:
        parser.error("--seed must be a 64-bit unsigned integer")
    try:
        if cfg.command == "verify":
            return cmd_verify(cfg)
        if cfg.command == "concurrence":
            return cmd_concurrence(cfg)
        if cfg.command == "tangle":
            return cmd_tangle(cfg)
        if cfg.command == "simulate":
            return cmd_simulate(cfg, args.shots_csv)
        return cmd_sweep(cfg)
    except UsageError as exc:
        print(f"qconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateValidationError as exc:
        print(f"qconc: invalid state: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"qconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
