"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 infeasible schedule or
construction, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, TextIO

from .engine import (
    defect_verdict,
    distance_from_trace,
    run_schedule,
    schedule_from_json,
    schedule_to_json,
    switching_certificate,
    value_group_index,
)
from .errors import (
    AsDefectError,
    ConsistencyError,
    DomainError,
    HypothesisViolation,
    InfeasibleStepError,
    MonotonicityError,
    NonUnitLambdaError,
    WrongTypeError,
)
from .values import fmt_rat, rat

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3

COMMANDS = ("simulate", "synthesize", "tower", "distance", "oracle", "report")

TRACE_COLUMNS = ["depth", "type", "c", "jac_ratio", "M", "d_i", "sigma"]
REPORT_COLUMNS = ["p", "c", "schedule_hash", "depth", "lower", "upper", "exact", "dist"]


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input_paths: list[str] = field(default_factory=list)
    output_path: Optional[str] = None
    output_format: Optional[str] = None
    seed_rng: int = 0
    precision: int = 64
    depth: Optional[int] = None
    count: int = 200
    strict: bool = False

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.precision < 8:
            raise InputError("precision must be >= 8")
        if self.output_format not in (None, "json", "csv"):
            raise InputError(f"unknown format {self.output_format!r}")
        if not 0 <= self.seed_rng < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")

    @property
    def input_path(self) -> Optional[str]:
        return self.input_paths[0] if self.input_paths else None


def _read_json(path: Optional[str]) -> dict:
    if path is None:
        raise InputError("--input is required for this command")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    return doc


def schedule_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _emit(config: RunConfig, payload: dict, rows: list[dict], columns: list[str],
          text: str, out: TextIO, meta: Optional[dict] = None) -> None:
    """Structured output to --output (or stdout when a format is forced);
    otherwise the human-readable text."""
    fmt = config.output_format
    structured = None
    if fmt == "csv":
        buf = io.StringIO()
        for k, v in (meta or {}).items():
            buf.write(f"# {k}={v}\n")
        writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        structured = buf.getvalue()
    elif fmt == "json" or config.output_path:
        structured = json.dumps(payload, indent=2) + "\n"
    if config.output_path:
        Path(config.output_path).write_text(structured or "")
        out.write(text)
    elif structured is not None:
        out.write(structured)
    else:
        out.write(text)


def _table(rows: list[dict], columns: list[str]) -> str:
    widths = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) if rows else len(c) for c in columns}
    lines = ["  ".join(c.rjust(widths[c]) for c in columns)]
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).rjust(widths[c]) for c in columns))
    return "\n".join(lines) + "\n"


# --- commands ---------------------------------------------------------------

def _simulate_core(config: RunConfig) -> tuple[dict, list[dict], str, dict]:
    doc = _read_json(config.input_path)
    try:
        state0, schedule = schedule_from_json(doc)
    except (DomainError, ValueError) as exc:
        raise InputError(f"invalid schedule: {exc}") from exc
    depth = config.depth
    if depth is None:
        depth = len(schedule.prefix) + (4 * len(schedule.tail) if schedule.tail else 0)
    trace = run_schedule(state0, schedule, depth, strict=config.strict)
    rows = trace.rows()
    h = schedule_hash(schedule_to_json(state0, schedule))
    verdict = defect_verdict(trace)
    if trace.halted:
        bound = None
        summary = "type T0 reached: the extension splits; no distance is tracked"
    else:
        bound = distance_from_trace(trace)
        summary = bound.describe()
    cert = switching_certificate(trace)
    payload = {
        "p": state0.p,
        "c": state0.c,
        "schedule_hash": h,
        "depth": trace.depth,
        "halted": trace.halted,
        "trace": rows,
        "distance": None if bound is None else bound.to_dict(),
        "verdict": verdict.verdict.value,
        "value_group_index": value_group_index(trace),
        "switching": cert.to_dict(),
        "summary": summary,
    }
    meta = {"p": state0.p, "c": state0.c, "schedule_hash": h}
    if bound is not None:
        meta.update(lower=fmt_rat(bound.lower), upper=fmt_rat(bound.upper), exact=bound.exact)
    text = _table(rows, TRACE_COLUMNS)
    text += f"verdict: {verdict.verdict.value}; value group index {payload['value_group_index']}\n"
    text += summary + "\n"
    return payload, rows, text, meta


def cmd_simulate(config: RunConfig, out: TextIO) -> int:
    payload, rows, text, meta = _simulate_core(config)
    _emit(config, payload, rows, TRACE_COLUMNS, text, out, meta)
    return EXIT_OK


def cmd_distance(config: RunConfig, out: TextIO) -> int:
    payload, _, _, meta = _simulate_core(config)
    small = {k: payload[k] for k in ("p", "c", "schedule_hash", "depth", "distance",
                                     "verdict", "value_group_index", "summary")}
    row = {"p": payload["p"], "c": payload["c"], "schedule_hash": payload["schedule_hash"],
           "depth": payload["depth"], **_bound_cells(payload["distance"])}
    _emit(config, small, [row], REPORT_COLUMNS, payload["summary"] + "\n", out)
    return EXIT_OK


def cmd_synthesize(config: RunConfig, out: TextIO) -> int:
    from .synth import SwitchPlan, SynthParams, synthesize

    doc = _read_json(config.input_path)
    try:
        plan_doc = doc.get("plan", doc)
        plan = SwitchPlan.from_json(plan_doc)
        params = SynthParams(int(doc["p"]), int(doc["p_aux"]), int(doc.get("e", 1)),
                             rat(doc.get("alpha", "0")),
                             config.depth if config.depth is not None else int(doc.get("depth", 20)))
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise InputError(f"invalid synthesis parameters: {exc!r}") from exc
    res = synthesize(params, plan)
    sched = schedule_to_json(res.state0, res.schedule)
    rows = res.trace.rows()
    payload = {
        "schedule": sched,
        "plan": plan.to_json(),
        "alpha": fmt_rat(params.alpha),
        "types": [s.type.value for s in res.trace.states],
        "checkpoints": res.checkpoint_report(),
        "distance": res.bound.to_dict(),
        "trace": rows,
    }
    text = _table(rows, TRACE_COLUMNS)
    text += "schedule: " + json.dumps(sched) + "\n"
    text += f"-dist in [{fmt_rat(res.bound.lower)}, {fmt_rat(res.bound.upper)}], width {float(res.bound.width):.3e} (approx.)\n"
    _emit(config, payload, rows, TRACE_COLUMNS, text, out)
    return EXIT_OK


def cmd_tower(config: RunConfig, out: TextIO) -> int:
    from .tower import build_independent_tower, tower_report, worked_example, worked_tower

    doc = _read_json(config.input_path) if config.input_path else {}
    try:
        kind = doc.get("kind", "independent")
        p = int(doc.get("p", 2))
        depth = config.depth if config.depth is not None else int(doc.get("depth", 8))
        if kind == "independent":
            trace = build_independent_tower(p, depth, int(doc.get("e", 1)))
            exact = None
        elif kind == "dependent":
            c = int(doc.get("c", p - 1))
            trace = worked_tower(p, c, depth)
            exact = worked_example(p, c, max(depth, 1))
        else:
            raise InputError(f"unknown tower kind {kind!r}")
    except (TypeError, ValueError, DomainError) as exc:
        raise InputError(f"invalid tower parameters: {exc}") from exc
    report = tower_report(trace)
    if exact is not None:
        report["exact_lower"] = exact[0].to_dict()
        report["exact_upper"] = exact[1].to_dict()
    rows = []
    for r in report["depths"]:
        rows.append({"depth": r["depth"], "types": "/".join(r["types"]), "c": r.get("c", ""),
                     "c_prime": r.get("c_prime", ""), "d_lower": r.get("d_lower", ""),
                     "d_upper": r.get("d_upper", ""), "audit_flag": r["audit_flag"]})
    cols = ["depth", "types", "c", "c_prime", "d_lower", "d_upper", "audit_flag"]
    text = _table(rows, cols)
    text += f"links ok: {report['links_ok']}; lower -dist in [0, {report['lower_bound']['upper']}], "
    text += f"upper -dist in [0, {report['upper_bound']['upper']}]\n"
    if exact is not None:
        text += f"lower {exact[0].describe()}; upper {exact[1].describe()}\n"
    _emit(config, report, rows, cols, text, out)
    return EXIT_OK if not report["audit_mismatches"] else EXIT_INVARIANT


def cmd_oracle(config: RunConfig, out: TextIO, engine: Optional[Callable] = None) -> int:
    from .series.suite import run_oracle_suite

    kwargs = {} if engine is None else {"engine": engine}
    res = run_oracle_suite(config.count, config.seed_rng, config.precision, **kwargs)
    rows = []
    for c in res.cases:
        rows.append({"case": c.index, "p": c.p, "type": c.kind, "c": c.c, "m": c.m, "q": c.q,
                     "engine": "" if c.engine is None else f"{c.engine[0]}:{c.engine[1]}",
                     "kernel": "" if c.kernel is None else f"{c.kernel[0]}:{c.kernel[1]}",
                     "precision": c.precision, "status": c.status})
    cols = ["case", "p", "type", "c", "m", "q", "engine", "kernel", "precision", "status"]
    summary = (f"{len(res.cases)} cases: {res.count('pass')} pass, {res.mismatches} mismatch, "
               f"{res.skipped} skipped, {res.count('flagged')} flagged\n")
    payload = {"seed": config.seed_rng, "precision": config.precision,
               "cases": [c.to_dict() for c in res.cases], "summary": summary.strip()}
    _emit(config, payload, rows, cols, _table(rows, cols) + summary, out)
    return EXIT_OK if res.mismatches == 0 else EXIT_INVARIANT


def _bound_cells(d: Optional[dict]) -> dict:
    if d is None:
        return {"lower": "", "upper": "", "exact": "", "dist": ""}
    exact = bool(d["exact"])
    return {"lower": d["lower"], "upper": d["upper"], "exact": exact,
            "dist": fmt_rat(-rat(d["upper"])) if exact else ""}


def _report_row_from_json(doc: dict, path: str) -> dict:
    try:
        return {"p": int(doc["p"]), "c": int(doc["c"]), "schedule_hash": str(doc["schedule_hash"]),
                "depth": int(doc["depth"]), **_bound_cells(doc.get("distance"))}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a simulate/distance output ({exc!r})") from exc


def _report_row_from_csv(text: str, path: str) -> dict:
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames is None or list(reader.fieldnames) != TRACE_COLUMNS:
        raise InputError(f"{path}: CSV columns {reader.fieldnames} do not match {TRACE_COLUMNS}")
    rows = list(reader)
    try:
        dist = None
        if "upper" in meta:
            dist = {"lower": meta["lower"], "upper": meta["upper"], "exact": meta.get("exact") == "True"}
        return {"p": int(meta["p"]), "c": int(meta["c"]), "schedule_hash": meta["schedule_hash"],
                "depth": int(rows[-1]["depth"]) if rows else 0, **_bound_cells(dist)}
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: missing trace metadata ({exc!r})") from exc


def cmd_report(config: RunConfig, out: TextIO) -> int:
    merged: dict[tuple, dict] = {}
    for path in config.input_paths:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
            row = _report_row_from_json(doc, path)
        else:
            row = _report_row_from_csv(text, path)
        merged[(row["p"], row["c"], row["schedule_hash"])] = row
    rows = [merged[k] for k in sorted(merged)]
    payload = {"rows": rows}
    _emit(config, payload, rows, REPORT_COLUMNS, _table(rows, REPORT_COLUMNS), out)
    return EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig, TextIO], int]] = {
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "tower": cmd_tower,
    "distance": cmd_distance,
    "oracle": cmd_oracle,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asdefect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", action="append", default=[], help="input file (repeatable for report)")
        sp.add_argument("--output", help="write structured output here")
        sp.add_argument("--format", choices=["json", "csv"], dest="output_format")
        sp.add_argument("--depth", type=int)
        sp.add_argument("--precision", type=int, default=64)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--count", type=int, default=200, help="number of oracle cases")
        sp.add_argument("--strict-eqN3", action="store_true", dest="strict",
                        help="require mbar > 1 on type-2 steps")
    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None,
         err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        config = RunConfig(args.command, args.input, args.output, args.output_format,
                           args.seed, args.precision, args.depth, args.count, args.strict)
        return HANDLERS[config.command](config, out)
    except InputError as exc:
        err.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except (InfeasibleStepError, HypothesisViolation, WrongTypeError) as exc:
        err.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (ConsistencyError, MonotonicityError, NonUnitLambdaError) as exc:
        err.write(f"invariant violation: {exc}\n")
        return EXIT_INVARIANT
    except (DomainError, ValueError) as exc:
        err.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except AsDefectError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
