"""Command-line interface: CSV in, JSON report out.

Every command writes one JSON document to stdout::

    {"command": ..., "inputs_digest": "sha256:...", "results": {...}, "diagnostics": [...]}

Failures exit nonzero with ``{"command": ..., "error": {"type": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import bounds, decide, wald
from .regions import IdentificationInterval, OutcomeRange, Region, intersect

DEFAULT_NA_TOKENS = ("NA",)
FLOAT_DIGITS = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- parsing

def parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"expected 'lo,hi', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"expected two numbers in {text!r}") from None


def parse_interval(text: str) -> IdentificationInterval:
    lo, hi = parse_pair(text)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError(f"interval endpoints must be finite: {text!r}")
    if lo > hi:
        raise UsageError(f"interval {text!r} has lo > hi")
    return IdentificationInterval(lo, hi)


def parse_range(text: str) -> OutcomeRange:
    try:
        return OutcomeRange(*parse_pair(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_rows(path: str, required: Sequence[str]):
    """Yield ``(row_number, {column: cell})`` for each data row.

    In a single-column file a blank line is an empty cell, not a skipped row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: column(s) not found in header: {', '.join(missing)}")
        row = 0
        for cells in reader:
            if not cells and len(header) > 1:
                continue
            row += 1
            cells = cells + [""] * (len(header) - len(cells))
            yield row, dict(zip(header, cells))


def _parse_outcome(cell: str, outcome_range: OutcomeRange, row: int) -> float:
    try:
        y = float(cell)
    except ValueError:
        raise ValueError(f"row {row}: cannot parse outcome {cell!r}") from None
    if not math.isfinite(y):
        raise ValueError(f"row {row}: outcome {cell!r} is not finite")
    if not outcome_range.contains(y):
        raise ValueError(
            f"row {row}: outcome {y!r} outside range [{outcome_range.min}, {outcome_range.max}]"
        )
    return y


def parse_missing_csv(
    path: str,
    outcome_col: str,
    outcome_range: OutcomeRange = bounds.UNIT,
    na_tokens: Sequence[str] = DEFAULT_NA_TOKENS,
) -> bounds.MissingDataSet:
    """Read a missing-data sample.  Empty cells and ``na_tokens`` mark missing outcomes.

    Row numbers in error messages count data rows from 1, after the header.
    """
    na = set(na_tokens)
    outcomes = []
    for row, rec in _read_rows(path, [outcome_col]):
        cell = (rec[outcome_col] or "").strip()
        if cell == "" or cell in na:
            outcomes.append(None)
        else:
            outcomes.append(_parse_outcome(cell, outcome_range, row))
    if not outcomes:
        raise ValueError(f"{path}: no data rows")
    return bounds.MissingDataSet(tuple(outcomes), outcome_range)


def parse_treatment_csv(
    path: str,
    treatment_col: str,
    outcome_col: str,
    group_col: str | None = None,
    outcome_range: OutcomeRange = bounds.UNIT,
    treatments: Sequence[str] | None = None,
) -> bounds.TreatmentDataSet:
    required = [treatment_col, outcome_col] + ([group_col] if group_col else [])
    records = []
    for row, rec in _read_rows(path, required):
        t = (rec[treatment_col] or "").strip()
        if t == "":
            raise ValueError(f"row {row}: empty treatment cell")
        cell = (rec[outcome_col] or "").strip()
        if cell == "":
            raise ValueError(f"row {row}: missing outcome; treatment data need realized outcomes")
        y = _parse_outcome(cell, outcome_range, row)
        group = None
        if group_col:
            group = (rec[group_col] or "").strip()
            if group == "":
                raise ValueError(f"row {row}: empty group cell")
        records.append(bounds.TreatmentRecord(t, y, group))
    if not records:
        raise ValueError(f"{path}: no data rows")
    if treatments is None:
        treatments = tuple(dict.fromkeys(r.treatment for r in records))
    return bounds.TreatmentDataSet(tuple(records), tuple(treatments), outcome_range)


def load_problem(text: str) -> tuple[decide.DecisionProblem, decide.Prior | None]:
    """Parse a problem document (``actions``, ``states``, ``welfare``, optional ``prior``)."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("problem file must hold a JSON object")
    for key in ("actions", "states", "welfare"):
        if key not in doc:
            raise ValueError(f"problem file lacks '{key}'")
    welfare = doc["welfare"]
    if not isinstance(welfare, list) or any(not isinstance(r, list) for r in welfare):
        raise ValueError("'welfare' must be a row-major matrix (list of lists)")
    if any(len(r) != len(doc["states"]) for r in welfare):
        raise ValueError("every welfare row needs one entry per state")
    problem = decide.DecisionProblem(tuple(doc["actions"]), tuple(doc["states"]), welfare)
    prior = None
    if doc.get("prior") is not None:
        prior = decide.Prior(tuple(doc["prior"]))
        if len(prior.weights) != len(problem.states):
            raise ValueError("prior length does not match the number of states")
    return problem, prior


def dump_problem(problem: decide.DecisionProblem, prior: decide.Prior | None = None) -> str:
    doc = {
        "actions": list(problem.actions),
        "states": list(problem.states),
        "welfare": problem.welfare.tolist(),
    }
    if prior is not None:
        doc["prior"] = list(prior.weights)
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------- output

def _num(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in report")
    x = float(f"{x:.{FLOAT_DIGITS}g}")
    return 0.0 if x == 0 else x


def _normalize(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_normalize(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def region_json(region: Region) -> dict:
    if region.is_empty:
        return {"empty": True}
    return {"empty": False, "lo": region.lo, "hi": region.hi}


def render(payload: dict) -> str:
    return json.dumps(_normalize(payload), sort_keys=True, indent=2) + "\n"


class _Inputs:
    """Collects the bytes of every input file for the report digest."""

    def __init__(self):
        self._hash = hashlib.sha256()

    def read(self, path: str) -> str:
        with open(path, "rb") as fh:
            data = fh.read()
        self._hash.update(data)
        return data.decode("utf-8")

    def note(self, path: str) -> str:
        self.read(path)
        return path

    @property
    def digest(self) -> str:
        return "sha256:" + self._hash.hexdigest()


# ---------------------------------------------------------------- commands

def _cmd_bounds_missing(args, inputs, diag):
    data = parse_missing_csv(
        inputs.note(args.input), args.outcome_col, args.range, args.na_token or DEFAULT_NA_TOKENS
    )
    mean = bounds.mean_bound_missing(data)
    out = {
        "n": data.n,
        "n_missing": data.n_missing,
        "frac_missing": data.frac_missing,
        "range": [data.range.min, data.range.max],
        "mean_bound": region_json(mean),
    }
    if mean.note:
        diag.append(f"mean_bound: {mean.note}")
    if args.threshold is not None:
        cdf = bounds.cdf_bound(data, args.threshold)
        out["cdf_bound"] = {"threshold": args.threshold, **region_json(cdf)}
        if cdf.note:
            diag.append(f"cdf_bound: {cdf.note}")
    if data.n_missing < data.n:
        out["mar_point"] = bounds.mar_point(data)
    else:
        diag.append("mar_point: undefined without observed outcomes")
    return out


def _treatment_summary(data, t, diag):
    b = bounds.mean_bound_treatment(data, t)
    if b.note:
        diag.append(f"mean_bound[{t}]: {b.note}")
    out = {"treatment": t, "share": data.share(t), "mean_bound": region_json(b)}
    if data.outcomes_for(t).size:
        out["mar_point"] = bounds.mar_point(data, t)
    else:
        diag.append(f"mar_point[{t}]: undefined, no records received {t!r}")
    return out


def _cmd_bounds_treatment(args, inputs, diag):
    data = parse_treatment_csv(
        inputs.note(args.input), args.treatment_col, args.outcome_col, args.iv_col, args.range
    )
    extra = [t for t in (args.treatment, args.compare) if t and t not in data.treatments]
    if extra:
        declared = data.treatments + tuple(dict.fromkeys(extra))
        data = bounds.TreatmentDataSet(data.records, declared, data.range)
        diag.extend(f"treatment {t!r} does not occur in the data" for t in dict.fromkeys(extra))
    out = {
        "n": data.n,
        "range": [data.range.min, data.range.max],
        "target": _treatment_summary(data, args.treatment, diag),
    }
    if args.compare is not None:
        if args.compare == args.treatment:
            raise UsageError("--compare must differ from --treatment")
        out["compare"] = _treatment_summary(data, args.compare, diag)
        out["ate_bound"] = region_json(bounds.ate_bound(data, args.treatment, args.compare))
    if args.iv_col:
        iv = bounds.iv_intersection_bound(data, args.treatment)
        out["iv"] = {
            "region": region_json(iv.region),
            "groups": {str(g): region_json(b) for g, b in iv.groups.items()},
        }
        diag.extend(f"iv: {d}" for d in iv.diagnostics)
    return out


def _cmd_intersect(args, inputs, diag):
    region = intersect(args.intervals)
    if region.is_empty:
        diag.append("empty intersection: the intervals have no common point")
    return {"inputs": [region_json(r) for r in args.intervals], "interval": region_json(region)}


def _load_prior(value: str, inputs) -> decide.Prior:
    if os.path.exists(value):
        doc = json.loads(inputs.read(value))
        if isinstance(doc, dict):
            doc = doc.get("prior")
        if not isinstance(doc, list):
            raise ValueError("prior file must hold a list of weights or {'prior': [...]}")
        return decide.Prior(tuple(doc))
    try:
        return decide.Prior(tuple(float(x) for x in value.split(",")))
    except ValueError as exc:
        raise UsageError(f"--prior: {exc}") from None


def _cmd_decide(args, inputs, diag):
    problem, prior = load_problem(inputs.read(args.problem))
    if args.prior is not None:
        prior = _load_prior(args.prior, inputs)
    if args.criterion == "maximin":
        action, value = decide.maximin(problem)
    elif args.criterion == "minimax-regret":
        action, value = decide.minimax_regret(problem)
    else:
        if prior is None:
            raise UsageError("bayes criterion needs a prior (--prior or 'prior' in the problem file)")
        action, value = decide.bayes(problem, prior)
    dominated = decide.dominated_actions(problem)
    return {
        "criterion": args.criterion,
        "action": action,
        "value": value,
        "dominated_actions": [a for a in problem.actions if a in dominated],
        "regret_table": {
            "actions": list(problem.actions),
            "states": list(problem.states),
            "values": decide.regret_table(problem),
        },
    }


def _cmd_allocate(args, inputs, diag):
    a, b = args.region_a, args.region_b
    if a.lo >= b.hi or b.lo >= a.hi:
        diag.append("one treatment dominates; choices short-circuit to the dominant treatment")
    alloc, regret = decide.mmr_allocation(a, b)
    return {
        "region_a": region_json(a),
        "region_b": region_json(b),
        "maximin": decide.two_treatment_choice(a, b, "maximin"),
        "minimax_regret": decide.two_treatment_choice(a, b, "minimax-regret"),
        "allocation": {"fraction_b": alloc.fraction_b, "max_regret": regret},
    }


def _parse_rule(text: str, inputs) -> wald.DecisionRule:
    kind, _, arg = text.partition(":")
    if kind == "es":
        if arg in ("", "randomize"):
            return wald.empirical_success_rule()
        if arg == "status-quo":
            return wald.empirical_success_rule("status-quo")
        raise UsageError(f"unknown empirical-success option {arg!r}")
    if kind == "test":
        try:
            alpha = float(arg) if arg else 0.05
        except ValueError:
            raise UsageError(f"bad test level {arg!r}") from None
        return wald.test_rule(alpha)
    if kind == "bayes":
        if not arg:
            raise UsageError("bayes rule needs a prior file: bayes:FILE")
        doc = json.loads(inputs.read(arg))
        try:
            prior = [(wald.TrialState(d["p_a"], d["p_b"]), d["weight"]) for d in doc]
        except (TypeError, KeyError):
            raise ValueError("bayes prior file must be a list of {p_a, p_b, weight}") from None
        return wald.bayes_rule(prior)
    raise UsageError(f"unknown rule {text!r}; expected es, test:ALPHA or bayes:FILE")


def _eval_json(ev: wald.RuleEvaluation) -> dict:
    return {
        "state": {"p_a": ev.state.p_a, "p_b": ev.state.p_b},
        "expected_welfare": ev.expected_welfare,
        "error_probability": ev.error_probability,
        "welfare_gap": ev.welfare_gap,
        "regret": ev.regret,
        "standard_error": ev.standard_error,
        "replications": ev.replications,
    }


def _cmd_wald_eval(args, inputs, diag):
    design = wald.TrialDesign(args.n_a, args.n_b)
    rule = _parse_rule(args.rule, inputs)
    state = wald.TrialState(*parse_pair(args.state))
    out = {"rule": rule.name, "design": {"n_a": design.n_a, "n_b": design.n_b}}
    if args.mc is not None:
        diag.append(f"monte carlo mode engaged: {args.mc} replications, seed {args.seed}")
        ev = wald.evaluate_rule_mc(rule, state, design, args.mc, args.seed)
        out.update(mode="monte-carlo", seed=args.seed)
    else:
        if max(design.n_a, design.n_b) > wald.EXACT_MAX_N:
            diag.append(
                f"exact enumeration of a large design (> {wald.EXACT_MAX_N} per arm); "
                "consider --mc"
            )
        ev = wald.evaluate_rule(rule, state, design)
        out["mode"] = "exact"
    out.update(_eval_json(ev))
    return out


def _cmd_wald_max_regret(args, inputs, diag):
    design = wald.TrialDesign(args.n_a, args.n_b)
    rule = _parse_rule(args.rule, inputs)
    value, state = wald.max_regret(rule, design, args.grid)
    return {
        "rule": rule.name,
        "design": {"n_a": design.n_a, "n_b": design.n_b},
        "grid_step": args.grid,
        "grid_points": len(wald.state_grid(args.grid)),
        "max_regret": value,
        "argmax": {"p_a": state.p_a, "p_b": state.p_b},
    }


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pidecide", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="identification bounds from a CSV sample")
    bsub = b.add_subparsers(dest="kind", required=True)
    m = bsub.add_parser("missing", help="bounds with missing outcomes")
    m.add_argument("--input", required=True)
    m.add_argument("--outcome-col", required=True)
    m.add_argument("--range", type=parse_range, default=bounds.UNIT)
    m.add_argument("--threshold", type=float)
    m.add_argument("--na-token", action="append", help="token marking a missing cell (repeatable)")
    m.set_defaults(func=_cmd_bounds_missing, name="bounds missing")
    t = bsub.add_parser("treatment", help="bounds on mean treatment response")
    t.add_argument("--input", required=True)
    t.add_argument("--treatment-col", required=True)
    t.add_argument("--outcome-col", required=True)
    t.add_argument("--treatment", required=True)
    t.add_argument("--compare")
    t.add_argument("--iv-col")
    t.add_argument("--range", type=parse_range, default=bounds.UNIT)
    t.set_defaults(func=_cmd_bounds_treatment, name="bounds treatment")

    i = sub.add_parser("intersect", help="intersect closed intervals")
    i.add_argument("--intervals", nargs="+", type=parse_interval, required=True)
    i.set_defaults(func=_cmd_intersect, name="intersect")

    d = sub.add_parser("decide", help="solve a finite decision problem")
    d.add_argument("--problem", required=True)
    d.add_argument("--criterion", required=True, choices=["maximin", "minimax-regret", "bayes"])
    d.add_argument("--prior", help="JSON file or inline comma-separated weights")
    d.set_defaults(func=_cmd_decide, name="decide")

    a = sub.add_parser("allocate", help="two-treatment choice over a rectangle")
    a.add_argument("--region-a", required=True, type=parse_interval)
    a.add_argument("--region-b", required=True, type=parse_interval)
    a.set_defaults(func=_cmd_allocate, name="allocate")

    w = sub.add_parser("wald", help="statistical decision rules for two-arm trials")
    wsub = w.add_subparsers(dest="kind", required=True)
    for name, func in (("eval", _cmd_wald_eval), ("max-regret", _cmd_wald_max_regret)):
        c = wsub.add_parser(name)
        c.add_argument("--n-a", required=True, type=int)
        c.add_argument("--n-b", required=True, type=int)
        c.add_argument("--rule", required=True)
        c.set_defaults(func=func, name=f"wald {name}")
        if name == "eval":
            c.add_argument("--state", required=True)
            c.add_argument("--mc", type=int, metavar="REPS")
            c.add_argument("--seed", type=int, default=0)
        else:
            c.add_argument("--grid", type=float, default=0.05)
    return p


def run(argv: Sequence[str] | None = None) -> tuple[int, str]:
    """Execute a command line; returns ``(exit_code, json_text)``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    command = " ".join(argv[:2]) if argv else ""
    try:
        args = build_parser().parse_args(argv)
        command = args.name
        inputs, diag = _Inputs(), []
        results = args.func(args, inputs, diag)
        doc = {
            "command": command,
            "inputs_digest": inputs.digest,
            "results": results,
            "diagnostics": diag,
        }
        return 0, render(doc)
    except UsageError as exc:
        return 2, render({"command": command, "error": {"type": "usage", "message": str(exc)}})
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        kind = "io" if isinstance(exc, OSError) else "invalid-input"
        return 1, render({"command": command, "error": {"type": kind, "message": str(exc)}})


def main(argv: Sequence[str] | None = None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
