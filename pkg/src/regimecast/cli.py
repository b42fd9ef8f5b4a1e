"""Command-line pipeline: synth, changepoint, forecast, compare, ingest-check.

Configuration comes from an optional JSON file plus flags; flags win.  Every
command writes machine-first JSON (sorted keys, no timestamps) so repeated
runs with identical config and seeds produce byte-identical files.  Errors
surface as a single machine-readable JSON object on stdout and a nonzero
exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import ingest
from .changepoint import (
    CostModel,
    PenaltyKind,
    PenaltySpec,
    Segmentation,
    binseg,
    exact_oracle,
    pelt,
)
from .errors import ParameterError, RegimecastError
from .hypotests import anova_oneway, multi_compare
from .regression import build_design, evaluate, fit_ols, predict, split_chronological, stepwise_select
from .series import DailySeries, moving_average, series_from_csv, series_to_csv, slice_periods, PeriodSpec, summarize
from .synth import DgpSpec, RegimeSpec, EMS_REGIME_PRESET, gen_hosp_like, gen_piecewise_normal, gen_regression_dgp

DEFAULT_BOUNDARIES = ("2020-03-18", "2020-05-13")


@dataclass
class StageConfig:
    method: str
    model: str
    penalty: str
    penalty_value: float | None = None
    q_max: int = 2

    def penalty_spec(self) -> PenaltySpec:
        kind = PenaltyKind(self.penalty)
        return PenaltySpec(kind, self.penalty_value if kind is PenaltyKind.MANUAL else None)


@dataclass
class PipelineConfig:
    incidents: str | None = None
    hospitalization: str | None = None
    series: str | None = None
    series_smoothed: str | None = None
    synth: str | None = None
    out: str = ""
    seed: int | None = None
    window: int = 7
    train_frac: float = 0.8
    alpha: float = 0.05
    no_changepoints: bool = False
    cp_dates: tuple[str, ...] = ()  # skip detection, use these regime starts
    boundaries: tuple[str, str] = DEFAULT_BOUNDARIES
    min_problem_total: int = 0
    timestamp_format: str | None = None
    ems_stage: StageConfig = field(default_factory=lambda: StageConfig(
        method="binseg", model="meanvar", penalty="bic", q_max=2))
    hosp_stage: StageConfig = field(default_factory=lambda: StageConfig(
        method="pelt", model="variance", penalty="mbic"))


def build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
        for stage_key in ("ems_stage", "hosp_stage"):
            if stage_key in raw:
                setattr(cfg, stage_key, StageConfig(**raw.pop(stage_key)))
        if "boundaries" in raw:
            raw["boundaries"] = tuple(raw["boundaries"])
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ParameterError(f"unknown config key: {key}")
            setattr(cfg, key, value)

    for key in ("incidents", "hospitalization", "series", "series_smoothed",
                "synth", "seed", "window", "train_frac", "alpha",
                "min_problem_total", "timestamp_format"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "out", None):
        cfg.out = args.out
    if not cfg.out:
        cfg.out = os.environ.get("REGIMECAST_OUT", "out")
    if getattr(args, "no_changepoints", False):
        cfg.no_changepoints = True
    if getattr(args, "boundaries", None):
        cfg.boundaries = tuple(args.boundaries.split(","))
    if getattr(args, "cp_dates", None):
        cfg.cp_dates = tuple(args.cp_dates.split(","))

    # Stage flags apply to whichever detection stage the command runs.
    stage = cfg.ems_stage if args.command == "changepoint" else cfg.hosp_stage
    for flag, attr in (("method", "method"), ("model", "model"), ("penalty", "penalty"),
                       ("penalty_value", "penalty_value"), ("qmax", "q_max")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(stage, attr, value)
    return cfg


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _hosp_to_csv(series: DailySeries) -> str:
    lines = ["date,count"]
    for day, value in zip(series.dates(), series.values):
        lines.append(f"{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def _run_segmentation(series: DailySeries, stage: StageConfig) -> Segmentation:
    model = CostModel(stage.model)
    spec = stage.penalty_spec()
    if stage.method == "binseg":
        return binseg(series, model, spec, q_max=stage.q_max)
    if stage.method == "pelt":
        return pelt(series, model, spec)
    if stage.method == "oracle":
        return exact_oracle(series, model, spec, max_k=stage.q_max)
    raise ParameterError(f"unknown method: {stage.method}")


def cmd_synth(cfg: PipelineConfig, out: Path) -> dict:
    """Generate series CSVs from a spec file or a named preset."""
    target = cfg.synth or "default"
    if target in ("default", "ems", "hosp"):
        spec_obj: dict = {"kind": {"default": "dgp", "ems": "regimes",
                                   "hosp": "hosp"}[target]}
    else:
        spec_obj = json.loads(Path(target).read_text())
    kind = spec_obj.pop("kind", "dgp")
    if cfg.seed is not None:
        spec_obj["seed"] = cfg.seed
    if "seed" not in spec_obj or spec_obj["seed"] is None:
        spec_obj["seed"] = secrets.randbits(32)

    written: list[str] = []
    if kind == "regimes":
        if "segments" not in spec_obj:
            spec_obj["segments"] = [{"n": n, "mean": m, "sd": s}
                                    for n, m, s in EMS_REGIME_PRESET]
        spec = RegimeSpec.from_json_dict(spec_obj)
        _write_text(out / "series.csv", series_to_csv(gen_piecewise_normal(spec)))
        written.append("series.csv")
        echo = spec.to_json_dict()
    elif kind == "hosp":
        seed = spec_obj["seed"]
        series = gen_hosp_like(seed)
        _write_text(out / "hosp.csv", _hosp_to_csv(series))
        written.append("hosp.csv")
        echo = {"seed": seed, "kind": "hosp"}
    elif kind == "dgp":
        spec = DgpSpec.from_json_dict(spec_obj)
        data = gen_regression_dgp(spec)
        _write_text(out / "hosp.csv", _hosp_to_csv(data.hosp))
        written.append("hosp.csv")
        for name, series in (("target_raw.csv", data.target_raw),
                             ("target_smoothed.csv", data.target_smoothed)):
            _write_text(out / name, series_to_csv(series))
            written.append(name)
        echo = spec.to_json_dict()
    else:
        raise ParameterError(f"unknown synth kind: {kind}")
    echo["kind"] = kind
    _write_json(out / "spec_echo.json", echo)
    written.append("spec_echo.json")
    return {"written": written}


def cmd_changepoint(cfg: PipelineConfig, out: Path) -> dict:
    """Segment one series and write the segmentation report plus labels."""
    if cfg.series:
        series = series_from_csv(Path(cfg.series))
    elif cfg.hospitalization:
        series = ingest.parse_hospitalization(Path(cfg.hospitalization))
    else:
        raise ParameterError("changepoint needs --series or --hosp input")
    seg = _run_segmentation(series, cfg.ems_stage)
    _write_json(out / "segmentation.json", seg.to_json_dict())
    lines = ["date,value,segment"]
    bounds = list(seg.changepoints)
    for i, (day, value) in enumerate(zip(series.dates(), series.values)):
        label = sum(1 for t in bounds if i > t)
        lines.append(f"{day.isoformat()},{float(value)!r},{label + 1}")
    _write_text(out / "segments.csv", "\n".join(lines) + "\n")
    return {"written": ["segmentation.json", "segments.csv"],
            "changepoints": [d.isoformat() for d in seg.changepoint_dates]}


def _forecast_inputs(cfg: PipelineConfig):
    """Resolve (hosp, target_raw, target_smoothed) from synth or CSV inputs."""
    if cfg.synth:
        target = cfg.synth
        if target == "default":
            spec = DgpSpec(seed=cfg.seed if cfg.seed is not None else 0)
        else:
            obj = json.loads(Path(target).read_text())
            obj.pop("kind", None)
            if cfg.seed is not None:
                obj["seed"] = cfg.seed
            spec = DgpSpec.from_json_dict(obj)
        data = gen_regression_dgp(spec)
        return data.hosp, data.target_raw, data.target_smoothed
    if not cfg.hospitalization:
        raise ParameterError("forecast needs --synth or --hosp plus --incidents")
    hosp = ingest.parse_hospitalization(Path(cfg.hospitalization))
    if cfg.incidents:
        table = ingest.parse_incidents(Path(cfg.incidents), cfg.timestamp_format)
        calls = ingest.daily_counts(
            table,
            lambda lab: lab.stream is ingest.Stream.PANDEMIC
            and lab.status is ingest.Status.ADMITTED,
            (hosp.start_date, hosp.end_date))
    elif cfg.series:
        calls = series_from_csv(Path(cfg.series))
    else:
        raise ParameterError("forecast needs a pandemic-calls input "
                             "(--incidents or --series)")
    if (calls.start_date, len(calls)) != (hosp.start_date, len(hosp)):
        raise ParameterError("calls and hospitalization series must share a calendar")
    if cfg.series_smoothed:
        smoothed = series_from_csv(Path(cfg.series_smoothed))
        if (smoothed.start_date, len(smoothed)) != (calls.start_date, len(calls)):
            raise ParameterError("smoothed series must share the raw calendar")
    else:
        smoothed = moving_average(calls, cfg.window)
    return hosp, calls, smoothed


def cmd_forecast(cfg: PipelineConfig, out: Path) -> dict:
    """detect -> smooth -> design -> split -> select -> evaluate -> report."""
    hosp, target_raw, target_smoothed = _forecast_inputs(cfg)
    hosp_smoothed = moving_average(hosp, cfg.window)

    if cfg.no_changepoints:
        cp_dates: list[date] = []
        seg_json = None
    else:
        seg = _run_segmentation(hosp, cfg.hosp_stage)
        cp_dates = [d + timedelta(days=1) for d in seg.changepoint_dates]
        seg_json = seg.to_json_dict()

    design = build_design(hosp_smoothed, cp_dates)
    (X_train, y_train_s), (X_test, y_test_s) = split_chronological(
        target_smoothed, design, cfg.train_frac)
    (_, y_train_r), (_, y_test_r) = split_chronological(
        target_raw, design, cfg.train_frac)

    fit = stepwise_select(X_train, y_train_s)
    metrics = evaluate(fit, X_test, y_test_r, y_test_s, y_train_s, X_train)

    model = fit.to_json_dict()
    model["window"] = {
        "train_start": target_raw.start_date.isoformat(),
        "train_end": y_train_r.end_date.isoformat(),
        "test_end": target_raw.end_date.isoformat(),
        "smoothing": cfg.window,
    }
    model["metrics"] = metrics.to_json_dict()
    model["changepoints"] = [d.isoformat() for d in cp_dates]
    if seg_json is not None:
        model["segmentation"] = seg_json
    _write_json(out / "model.json", model)

    fitted = predict(fit, design)
    lines = ["date,raw,smoothed,fitted"]
    for day, raw, smooth, hat in zip(target_raw.dates(), target_raw.values,
                                     target_smoothed.values, fitted):
        lines.append(f"{day.isoformat()},{float(raw)!r},{float(smooth)!r},{float(hat)!r}")
    _write_text(out / "predictions.csv", "\n".join(lines) + "\n")
    return {"written": ["model.json", "predictions.csv"],
            "orders": list(fit.orders),
            "r2_train": metrics.r_squared_train,
            "mse_test": metrics.mse_test}


def cmd_compare(cfg: PipelineConfig, out: Path) -> dict:
    """Per-problem period comparison, hospital ANOVA, response-time table."""
    if not cfg.incidents:
        raise ParameterError("compare needs --incidents")
    table = ingest.parse_incidents(Path(cfg.incidents), cfg.timestamp_format)
    flagged = set(table.report.flagged_keys)
    b1, b2 = (date.fromisoformat(b) for b in cfg.boundaries)

    dated = [r for r in table.records if r.t_phone_pickup is not None]
    if not dated:
        raise ParameterError("no dated records to compare")
    days = [r.t_phone_pickup.date() for r in dated]
    calendar = (min(days), max(days))

    report: dict = {"boundaries": [b1.isoformat(), b2.isoformat()],
                    "alpha": cfg.alpha}

    # Period 1 vs period 3 daily counts per non-pandemic problem type.
    period_error = None
    try:
        spec = PeriodSpec(boundaries=(b1, b2))
        by_problem: dict[str, tuple] = {}
        problems = sorted({r.problem for r in dated
                           if ingest.classify_incident(r).stream
                           is ingest.Stream.NON_PANDEMIC})
        for problem in problems:
            counts = ingest.daily_counts(
                [r for r in dated if r.problem == problem],
                lambda lab: lab.stream is ingest.Stream.NON_PANDEMIC,
                calendar)
            if float(np.sum(counts.values)) < cfg.min_problem_total:
                continue
            p1, _, p3 = slice_periods(counts, spec)
            by_problem[problem] = (p1.values, p3.values)
        if not by_problem:
            raise ParameterError("no problems meet the comparison threshold")
        rows = multi_compare(by_problem, alpha=cfg.alpha)
        report["t_table"] = [{
            "problem": row.problem,
            **({"n1": len(by_problem[row.problem][0]),
                "n2": len(by_problem[row.problem][1]),
                "mean1": float(np.mean(by_problem[row.problem][0])),
                "mean2": float(np.mean(by_problem[row.problem][1])),
                **row.result.to_json_dict()} if row.result else
               {"error": row.error}),
        } for row in rows]
    except RegimecastError as exc:
        period_error = str(exc)
        report["t_table_error"] = period_error

    # Response-time ANOVA across admitted dispositions (hospital groups).
    groups: dict[str, list] = {}
    for record in dated:
        if record.primary_key in flagged:
            continue
        label = ingest.classify_incident(record)
        if label.status is not ingest.Status.ADMITTED:
            continue
        groups.setdefault(record.disposition, []).append(record)
    anova_block = {}
    for name, getter in (("assignment", "assignment_min"),
                         ("dispatch", "dispatch_min"),
                         ("arrival", "arrival_min")):
        samples = []
        labels = []
        for dispo, records in sorted(groups.items()):
            vals = [getattr(ingest.response_intervals(r), getter) for r in records]
            vals = [v for v in vals if v is not None]
            if len(vals) >= 2:
                samples.append(vals)
                labels.append(dispo)
        if len(samples) >= 2:
            result = anova_oneway(samples, alpha=cfg.alpha)
            anova_block[name] = {"groups": labels, **result.to_json_dict()}
        else:
            anova_block[name] = {"error": "fewer than two usable groups"}
    report["anova"] = anova_block

    # Mean/median response intervals per period.
    period_rows = []
    edges = [calendar[0], b1, b2, calendar[1] + timedelta(days=1)]
    names = ["period1", "period2", "period3"]
    for name, lo, hi in zip(names, edges, edges[1:]):
        chunk = {"period": name, "start": lo.isoformat(),
                 "end": (hi - timedelta(days=1)).isoformat()}
        for metric, getter in (("assignment", "assignment_min"),
                               ("dispatch", "dispatch_min"),
                               ("arrival", "arrival_min")):
            vals = []
            for record in dated:
                if record.primary_key in flagged:
                    continue
                day = record.t_phone_pickup.date()
                if lo <= day < hi:
                    v = getattr(ingest.response_intervals(record), getter)
                    if v is not None:
                        vals.append(v)
            if vals:
                chunk[metric] = {"mean": float(np.mean(vals)),
                                 "median": float(np.median(vals)),
                                 "n": len(vals)}
        period_rows.append(chunk)
    report["response_times"] = period_rows

    _write_json(out / "compare.json", report)
    return {"written": ["compare.json"],
            "problems": len(report.get("t_table", [])),
            "period_error": period_error}


def cmd_ingest_check(cfg: PipelineConfig, out: Path) -> dict:
    """Parse incidents and emit the parse report plus stream tallies."""
    if not cfg.incidents:
        raise ParameterError("ingest-check needs --incidents")
    table = ingest.parse_incidents(Path(cfg.incidents), cfg.timestamp_format)
    tally: dict[str, int] = {}
    for record in table.records:
        label = ingest.classify_incident(record)
        key = f"{label.stream.value}/{label.status.value}"
        tally[key] = tally.get(key, 0) + 1
    payload = {"report": table.report.to_json_dict(),
               "records": len(table.records),
               "streams": dict(sorted(tally.items()))}
    _write_json(out / "ingest_report.json", payload)
    return {"written": ["ingest_report.json"], "records": len(table.records)}


COMMANDS = {
    "synth": cmd_synth,
    "changepoint": cmd_changepoint,
    "forecast": cmd_forecast,
    "compare": cmd_compare,
    "ingest-check": cmd_ingest_check,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimecast",
        description="Regime-shift statistics and EMS demand forecasting.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output directory (default $REGIMECAST_OUT or ./out)")
        p.add_argument("--seed", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--train-frac", type=float, dest="train_frac")
        p.add_argument("--alpha", type=float)
        p.add_argument("--method", choices=["binseg", "pelt", "oracle"])
        p.add_argument("--model", choices=["mean", "variance", "meanvar"])
        p.add_argument("--penalty", choices=["aic", "bic", "sic", "mbic", "manual"])
        p.add_argument("--penalty-value", type=float, dest="penalty_value")
        p.add_argument("--qmax", type=int)
        p.add_argument("--no-changepoints", action="store_true", dest="no_changepoints")
        p.add_argument("--incidents", help="incident CSV path")
        p.add_argument("--hosp", dest="hospitalization", help="hospitalization CSV path")
        p.add_argument("--series", help="generic date,value series CSV path")
        p.add_argument("--series-smoothed", dest="series_smoothed",
                       help="pre-smoothed target series CSV (else smoothed in-process)")
        p.add_argument("--synth", help="synth spec JSON path or preset name "
                                       "(default, ems, hosp)")
        p.add_argument("--boundaries", help="two comma-separated period boundary dates")
        p.add_argument("--min-problem-total", type=int, dest="min_problem_total")
        p.add_argument("--timestamp-format", dest="timestamp_format")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, out)
    except (RegimecastError, OSError, ValueError, KeyError, TypeError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}, sort_keys=True))
        return 1
    print(json.dumps({"ok": True, "command": args.command, **summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
