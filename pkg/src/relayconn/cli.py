"""Configuration-driven experiment runner and SVG chart emitter.

Subcommands: ``bound`` (analytics only), ``simulate`` (one Monte Carlo
point), ``sweep`` (full experiment -> CSV), ``plot`` (SVG from CSV).  Exit
status 0 on success, 1 on validation errors, 2 on runtime failures.  All
outputs are deterministic functions of the config file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .analytics import (CONDITIONS, QuadratureError, QuadratureSpec,
                        conditional_upper_bound, connectivity_upper_bound,
                        optimal_window_bound, p_los)
from .model import BlockageModelParams, GrainDistribution, LinkGeometry
from .montecarlo import (MCEstimate, NoAcceptedTrials, estimate_connectivity,
                         paired_kappa_comparison)

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "run_experiment",
    "emit_svg_plot",
    "CSV_COLUMNS",
    "main",
]

CSV_COLUMNS = [
    "sweep_var", "sweep_value", "mc_mean", "mc_stderr", "mc_ci_low",
    "mc_ci_high", "n_effective", "bound_thm1", "bound_cor1_plos",
    "bound_src_outdoor", "bound_both_outdoor", "kappa_star", "bound_cor3",
    "seed",
]

SWEEPABLE = ("lambda_o", "d", "kappa")


class ConfigError(ValueError):
    """Config validation failure with a field path and best-effort line number."""

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.line = line

    def __str__(self) -> str:
        line = self.line if self.line is not None else "?"
        return f"line {line}, field '{self.field}': {super().__str__()}"


Sweepable = Union[float, Tuple[float, ...]]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; exactly one of lambda_o/d/kappa is a sweep list."""

    lambda_o: Sweepable
    width_dist: GrainDistribution
    length_dist: GrainDistribution
    d: Sweepable
    kappa: Sweepable
    n: int
    seed: int
    condition: str = "unconditional"
    workers: int = 1
    csv_path: Optional[str] = None
    svg_path: Optional[str] = None
    abs_tol: float = 1e-10
    max_refinements: int = 30

    def sweep_variable(self) -> Optional[str]:
        for name in SWEEPABLE:
            if isinstance(getattr(self, name), tuple):
                return name
        return None

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.abs_tol, self.max_refinements)

    def to_dict(self) -> dict:
        def scalar_or_list(v):
            return list(v) if isinstance(v, tuple) else v

        return {
            "lambda_o": scalar_or_list(self.lambda_o),
            "width_dist": _dist_to_dict(self.width_dist),
            "length_dist": _dist_to_dict(self.length_dist),
            "d": scalar_or_list(self.d),
            "kappa": scalar_or_list(self.kappa),
            "estimator": {"n": self.n, "seed": self.seed,
                          "condition": self.condition, "workers": self.workers},
            "outputs": {k: v for k, v in
                        (("csv", self.csv_path), ("svg", self.svg_path))
                        if v is not None},
            "quadrature": {"abs_tol": self.abs_tol,
                           "max_refinements": self.max_refinements},
        }


def _dist_to_dict(dist: GrainDistribution) -> dict:
    if dist.kind == "deterministic":
        return {"kind": "deterministic", "value": dist.value}
    if dist.kind == "uniform":
        return {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}
    return {"kind": "pmf", "values": list(dist.values), "probs": list(dist.probs)}


def _dist_from_dict(obj, field: str) -> GrainDistribution:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(field, "expected an object with a 'kind' key")
    kind = obj["kind"]
    try:
        if kind == "deterministic":
            return GrainDistribution.deterministic(_number(obj, "value", field))
        if kind == "uniform":
            return GrainDistribution.uniform(_number(obj, "lo", field),
                                             _number(obj, "hi", field))
        if kind == "pmf":
            values = obj.get("values")
            probs = obj.get("probs")
            if not isinstance(values, list) or not isinstance(probs, list):
                raise ConfigError(field, "pmf needs 'values' and 'probs' lists")
            return GrainDistribution.pmf(values, probs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, str(exc)) from exc
    raise ConfigError(field, f"unknown distribution kind {kind!r}; "
                             "use deterministic | uniform | pmf")


def _number(obj: dict, key: str, field: str) -> float:
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{field}.{key}", "expected a number")
    return float(v)


def _sweepable(obj: dict, key: str) -> Sweepable:
    v = obj.get(key)
    if isinstance(v, list):
        if not v:
            raise ConfigError(key, "sweep list must be nonempty")
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigError(key, "sweep list entries must be numbers")
        return tuple(float(x) for x in v)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise ConfigError(key, "expected a number or a list of numbers")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON object into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in ("lambda_o", "width_dist", "length_dist", "d", "kappa", "estimator"):
        if key not in raw:
            raise ConfigError(key, "missing required field")
    lambda_o = _sweepable(raw, "lambda_o")
    d = _sweepable(raw, "d")
    kappa = _sweepable(raw, "kappa")
    sweeps = [k for k, v in (("lambda_o", lambda_o), ("d", d), ("kappa", kappa))
              if isinstance(v, tuple)]
    if len(sweeps) > 1:
        raise ConfigError("lambda_o/d/kappa",
                          "at most one of lambda_o, d, kappa may be a sweep list"
                          f" (got {len(sweeps)}: {', '.join(sweeps)})")
    width_dist = _dist_from_dict(raw["width_dist"], "width_dist")
    length_dist = _dist_from_dict(raw["length_dist"], "length_dist")

    est = raw["estimator"]
    if not isinstance(est, dict):
        raise ConfigError("estimator", "expected an object")
    n = est.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("estimator.n", "expected a positive integer")
    seed = est.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("estimator.seed", "expected a nonnegative integer")
    condition = est.get("condition", "unconditional")
    if condition not in CONDITIONS:
        raise ConfigError("estimator.condition",
                          f"must be one of {', '.join(CONDITIONS)}")
    workers = est.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError("estimator.workers", "expected a positive integer")

    outputs = raw.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs", "expected an object")
    csv_path = outputs.get("csv")
    svg_path = outputs.get("svg")
    for key, val in (("outputs.csv", csv_path), ("outputs.svg", svg_path)):
        if val is not None and not isinstance(val, str):
            raise ConfigError(key, "expected a path string")

    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        raise ConfigError("quadrature", "expected an object")
    abs_tol = quad.get("abs_tol", 1e-10)
    if not isinstance(abs_tol, (int, float)) or isinstance(abs_tol, bool) or abs_tol <= 0:
        raise ConfigError("quadrature.abs_tol", "expected a positive number")
    max_refinements = quad.get("max_refinements", 30)
    if not isinstance(max_refinements, int) or isinstance(max_refinements, bool) \
            or max_refinements < 0:
        raise ConfigError("quadrature.max_refinements",
                          "expected a nonnegative integer")

    try:
        return ExperimentConfig(
            lambda_o=lambda_o, width_dist=width_dist, length_dist=length_dist,
            d=d, kappa=kappa, n=n, seed=seed, condition=condition,
            workers=workers, csv_path=csv_path, svg_path=svg_path,
            abs_tol=float(abs_tol), max_refinements=max_refinements)
    except ValueError as exc:
        raise ConfigError("<config>", str(exc)) from exc


def _line_of_field(text: str, field: str) -> Optional[int]:
    # Best-effort: first occurrence of the field's final key in the raw text.
    key = field.split(".")[-1].split("/")[0]
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment config, with line diagnostics."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, line=exc.lineno) from exc
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        if exc.line is None:
            exc.line = _line_of_field(text, exc.field)
        raise


def _scalar(value: Sweepable) -> float:
    if isinstance(value, tuple):
        raise ValueError("expected a scalar, got a sweep list")
    return value


def _point_rows(config: ExperimentConfig) -> List[Dict[str, object]]:
    """One result row per sweep point, in config order."""
    sweep_var = config.sweep_variable()
    if sweep_var is None:
        raise ConfigError(sweep_var or "lambda_o/d/kappa",
                          "config has no sweep list")
    values = list(getattr(config, sweep_var))
    quad = config.quadrature()

    def link_for(kappa: float, d: float) -> LinkGeometry:
        return LinkGeometry(d=d, kappa=kappa)

    def params_for(lam: float) -> BlockageModelParams:
        return BlockageModelParams(lam, config.width_dist, config.length_dist)

    estimates: List[MCEstimate] = []
    if sweep_var == "kappa":
        params = params_for(_scalar(config.lambda_o))
        d = _scalar(config.d)
        estimates = paired_kappa_comparison(
            params, LinkGeometry(d, values[0]), values, config.n, config.seed,
            condition=config.condition, workers=config.workers)
    else:
        for v in values:
            lam = v if sweep_var == "lambda_o" else _scalar(config.lambda_o)
            d = v if sweep_var == "d" else _scalar(config.d)
            kappa = _scalar(config.kappa)
            estimates.append(estimate_connectivity(
                params_for(lam), link_for(kappa, d), config.condition,
                config.n, config.seed, workers=config.workers))

    rows = []
    for v, est in zip(values, estimates):
        lam = v if sweep_var == "lambda_o" else _scalar(config.lambda_o)
        d = v if sweep_var == "d" else _scalar(config.d)
        kappa = v if sweep_var == "kappa" else _scalar(config.kappa)
        params = params_for(lam)
        link = link_for(kappa, d)
        kappa_star, cor3 = optimal_window_bound(params, d, quad)
        rows.append({
            "sweep_var": sweep_var,
            "sweep_value": v,
            "mc_mean": est.mean,
            "mc_stderr": est.std_err,
            "mc_ci_low": est.ci_low,
            "mc_ci_high": est.ci_high,
            "n_effective": est.n_effective,
            "bound_thm1": connectivity_upper_bound(params, link, quad).value,
            "bound_cor1_plos": p_los(params, d).value,
            "bound_src_outdoor":
                conditional_upper_bound(params, link, "src_outdoor", quad).value,
            "bound_both_outdoor":
                conditional_upper_bound(params, link, "both_outdoor", quad).value,
            "kappa_star": kappa_star,
            "bound_cor3": cor3.value,
            "seed": config.seed,
        })
    return rows


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_csv(rows: List[Dict[str, object]], path: str) -> None:
    """Write result rows with the fixed column schema, LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[col]) for col in CSV_COLUMNS])


def run_experiment(config: ExperimentConfig) -> List[Dict[str, object]]:
    """Run the configured sweep and write its CSV (and optional SVG chart)."""
    if config.csv_path is None:
        raise ConfigError("outputs.csv", "sweep requires an output CSV path")
    rows = _point_rows(config)
    write_csv(rows, config.csv_path)
    if config.svg_path is not None:
        emit_svg_plot(config.csv_path, "sweep_value",
                      ["mc_mean", "bound_thm1", "bound_cor1_plos"],
                      config.svg_path)
    return rows


# --------------------------------------------------------------------------
# SVG chart emitter
# --------------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _read_table(path: str) -> Tuple[List[str], List[Dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return header, rows


def _column(rows: List[Dict[str, str]], name: str, path: str) -> List[float]:
    try:
        return [float(r[name]) for r in rows]
    except KeyError:
        raise ValueError(f"missing column '{name}' in {path}") from None


def _nice_ticks(lo: float, hi: float, target: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _SvgCanvas:
    """Minimal line-chart writer producing a single self-contained SVG."""

    WIDTH, HEIGHT = 720, 480
    MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 20, 20, 56

    def __init__(self, xs: Sequence[float], logx: bool):
        self.logx = logx
        if logx and min(xs) <= 0.0:
            raise ValueError("log-scale x axis requires positive x values")
        tx = [math.log10(x) for x in xs] if logx else list(xs)
        self.x_lo, self.x_hi = min(tx), max(tx)
        if self.x_lo == self.x_hi:
            self.x_lo -= 1.0
            self.x_hi += 1.0
        self.y_lo = math.inf
        self.y_hi = -math.inf
        self.body: List[str] = []

    def extend_y(self, ys: Sequence[float]) -> None:
        self.y_lo = min(self.y_lo, min(ys))
        self.y_hi = max(self.y_hi, max(ys))

    def finish_y(self) -> None:
        if not math.isfinite(self.y_lo):
            self.y_lo, self.y_hi = 0.0, 1.0
        if self.y_lo == self.y_hi:
            self.y_lo -= 0.5
            self.y_hi += 0.5
        pad = 0.05 * (self.y_hi - self.y_lo)
        self.y_lo -= pad
        self.y_hi += pad

    def px(self, x: float) -> float:
        tx = math.log10(x) if self.logx else x
        frac = (tx - self.x_lo) / (self.x_hi - self.x_lo)
        return self.MARGIN_L + frac * (self.WIDTH - self.MARGIN_L - self.MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return self.HEIGHT - self.MARGIN_B - frac * (self.HEIGHT - self.MARGIN_T - self.MARGIN_B)

    def band(self, xs, lo, hi, color) -> None:
        pts = [f"{self.px(x):.2f},{self.py(v):.2f}" for x, v in zip(xs, lo)]
        pts += [f"{self.px(x):.2f},{self.py(v):.2f}"
                for x, v in zip(reversed(xs), reversed(hi))]
        self.body.append(
            f'<polygon points="{" ".join(pts)}" fill="{color}" '
            'fill-opacity="0.15" stroke="none"/>')

    def line(self, xs, ys, color) -> None:
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.body.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')

    def render(self, x_label: str, series_names: Sequence[str],
               colors: Sequence[str]) -> str:
        w, h = self.WIDTH, self.HEIGHT
        left, right = self.MARGIN_L, w - self.MARGIN_R
        top, bottom = self.MARGIN_T, h - self.MARGIN_B
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
            f'<rect x="{left}" y="{top}" width="{right - left}" '
            f'height="{bottom - top}" fill="none" stroke="#333"/>',
        ]
        if self.logx:
            lo_dec = math.ceil(self.x_lo - 1e-9)
            hi_dec = math.floor(self.x_hi + 1e-9)
            xticks = [(10.0 ** k, f"1e{k:+d}") for k in range(lo_dec, hi_dec + 1)]
        else:
            xticks = [(t, format(t, "g")) for t in _nice_ticks(self.x_lo, self.x_hi)]
        for xv, label in xticks:
            px = self.px(xv)
            parts.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" '
                         f'y2="{bottom + 5}" stroke="#333"/>')
            parts.append(f'<text x="{px:.2f}" y="{bottom + 18}" font-size="11" '
                         f'text-anchor="middle" font-family="sans-serif">{label}</text>')
        for yv in _nice_ticks(self.y_lo, self.y_hi):
            py = self.py(yv)
            parts.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" '
                         f'y2="{py:.2f}" stroke="#333"/>')
            parts.append(f'<text x="{left - 8}" y="{py + 4:.2f}" font-size="11" '
                         f'text-anchor="end" font-family="sans-serif">{format(yv, "g")}</text>')
        parts.append(f'<text x="{(left + right) / 2:.2f}" y="{h - 12}" font-size="13" '
                     f'text-anchor="middle" font-family="sans-serif">{x_label}</text>')
        parts.extend(self.body)
        for idx, name in enumerate(series_names):
            ly = top + 16 + 16 * idx
            color = colors[idx % len(colors)]
            parts.append(f'<line x1="{left + 10}" y1="{ly - 4}" x2="{left + 34}" '
                         f'y2="{ly - 4}" stroke="{color}" stroke-width="1.8"/>')
            parts.append(f'<text x="{left + 40}" y="{ly}" font-size="12" '
                         f'font-family="sans-serif">{name}</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _render_series(xs: List[float],
                   series: List[Tuple[str, List[float],
                                      Optional[Tuple[List[float], List[float]]]]],
                   x_label: str, out_path: str, logx: bool) -> None:
    canvas = _SvgCanvas(xs, logx)
    for _, ys, band in series:
        canvas.extend_y(ys)
        if band is not None:
            canvas.extend_y(band[0])
            canvas.extend_y(band[1])
    canvas.finish_y()
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    xs_sorted = [xs[i] for i in order]
    for idx, (_, ys, band) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        if band is not None:
            canvas.band(xs_sorted, [band[0][i] for i in order],
                        [band[1][i] for i in order], color)
    for idx, (_, ys, _) in enumerate(series):
        canvas.line(xs_sorted, [ys[i] for i in order],
                    _PALETTE[idx % len(_PALETTE)])
    svg = canvas.render(x_label, [name for name, _, _ in series], _PALETTE)
    with open(out_path, "w", newline="") as fh:
        fh.write(svg)


def _ci_band_for(header: List[str], rows: List[Dict[str, str]], y_col: str,
                 path: str) -> Optional[Tuple[List[float], List[float]]]:
    # A column like mc_mean gets a band from mc_ci_low/mc_ci_high when the
    # matching stderr/ci columns are present.
    if not y_col.endswith("mean"):
        return None
    stem = y_col[: -len("mean")]
    lo_col, hi_col = stem + "ci_low", stem + "ci_high"
    if lo_col in header and hi_col in header and stem + "stderr" in header:
        return _column(rows, lo_col, path), _column(rows, hi_col, path)
    return None


def emit_svg_plot(csv_path: str, x_column: str, y_columns: Sequence[str],
                  out_path: str, logx: bool = False) -> None:
    """Render a self-contained SVG line chart from a result CSV.

    One polyline per y column; a shaded confidence band is added for *mean
    columns whose sibling stderr/ci columns are present.  Raises ValueError
    for an empty CSV body or a missing column.
    """
    header, rows = _read_table(csv_path)
    xs = _column(rows, x_column, csv_path)
    series = []
    for y_col in y_columns:
        ys = _column(rows, y_col, csv_path)
        series.append((y_col, ys, _ci_band_for(header, rows, y_col, csv_path)))
    _render_series(xs, series, x_column, out_path, logx)


def _plot_multi(csv_paths: Sequence[str], x_column: str,
                y_columns: Sequence[str], out_path: str, logx: bool) -> None:
    """Overlay the same columns from several CSVs (merged on the x column)."""
    xs_ref: Optional[List[float]] = None
    series = []
    for path in csv_paths:
        header, rows = _read_table(path)
        xs = _column(rows, x_column, path)
        if xs_ref is None:
            xs_ref = xs
        elif xs != xs_ref:
            raise ValueError(f"x column '{x_column}' differs between "
                             f"{csv_paths[0]} and {path}")
        stem = Path(path).stem
        for y_col in y_columns:
            name = f"{stem}:{y_col}" if len(csv_paths) > 1 else y_col
            series.append((name, _column(rows, y_col, path),
                           _ci_band_for(header, rows, y_col, path)))
    _render_series(xs_ref, series, x_column, out_path, logx)


# --------------------------------------------------------------------------
# Command-line front end
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1
        self.exit(1, f"{self.prog}: error: {message}\n")


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        updates["csv_path"] = args.out
    if getattr(args, "svg", None) is not None:
        updates["svg_path"] = args.svg
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    return replace(config, **updates) if updates else config


def _require_scalars(config: ExperimentConfig, command: str) -> None:
    sweep = config.sweep_variable()
    # Configs always carry one sweep list; pointwise commands use its first
    # value only when it is a singleton.
    if sweep is not None and len(getattr(config, sweep)) != 1:
        raise ConfigError(sweep, f"'{command}' needs scalar parameters; "
                                 "use a singleton sweep list")


def _cmd_bound(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    quad = config.quadrature()
    sweep_var = config.sweep_variable()
    values = list(getattr(config, sweep_var))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sweep_var", "sweep_value", "bound_thm1",
                     "bound_cor1_plos", "bound_src_outdoor",
                     "bound_both_outdoor", "kappa_star", "bound_cor3"])
    for v in values:
        lam = v if sweep_var == "lambda_o" else _scalar(config.lambda_o)
        d = v if sweep_var == "d" else _scalar(config.d)
        kappa = v if sweep_var == "kappa" else _scalar(config.kappa)
        params = BlockageModelParams(lam, config.width_dist, config.length_dist)
        link = LinkGeometry(d, kappa)
        kappa_star, cor3 = optimal_window_bound(params, d, quad)
        cells = [sweep_var, v,
                 connectivity_upper_bound(params, link, quad).value,
                 p_los(params, d).value,
                 conditional_upper_bound(params, link, "src_outdoor", quad).value,
                 conditional_upper_bound(params, link, "both_outdoor", quad).value,
                 kappa_star, cor3.value]
        writer.writerow([_format_cell(c) for c in cells])
    text = out.getvalue()
    sys.stdout.write(text)
    if config.csv_path:
        with open(config.csv_path, "w", newline="") as fh:
            fh.write(text)
    return 0


def _cmd_simulate(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    _require_scalars(config, "simulate")
    sweep_var = config.sweep_variable()

    def value_of(name):
        v = getattr(config, name)
        return v[0] if isinstance(v, tuple) else v

    params = BlockageModelParams(value_of("lambda_o"), config.width_dist,
                                 config.length_dist)
    link = LinkGeometry(value_of("d"), value_of("kappa"))
    est = estimate_connectivity(params, link, config.condition, config.n,
                                config.seed, workers=config.workers)
    for name in ("mean", "std_err", "ci_low", "ci_high"):
        print(f"{name} = {getattr(est, name):.9g}")
    print(f"n_effective = {est.n_effective}")
    print(f"n_total = {est.n_total}")
    print(f"seed = {est.seed}")
    return 0


def _cmd_sweep(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    run_experiment(config)
    return 0


def _cmd_plot(args) -> int:
    y_columns = [c.strip() for c in args.y.split(",") if c.strip()]
    if not y_columns:
        raise ValueError("--y must name at least one column")
    if len(args.csv) == 1:
        emit_svg_plot(args.csv[0], args.x, y_columns, args.out, logx=args.logx)
    else:
        _plot_multi(args.csv, args.x, y_columns, args.out, logx=args.logx)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="relayconn",
                     description="Strip connectivity: Monte Carlo estimates "
                                 "and analytical upper bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, with_svg=True):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output CSV path (overrides config)")
        if with_svg:
            p.add_argument("--svg", help="output SVG path (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--workers", type=int, help="worker process count")

    p_bound = sub.add_parser("bound", help="evaluate the analytical bounds only")
    add_config_flags(p_bound, with_svg=False)
    p_bound.set_defaults(func=_cmd_bound)

    p_sim = sub.add_parser("simulate", help="one Monte Carlo point")
    add_config_flags(p_sim, with_svg=False)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="full experiment -> CSV (+ SVG)")
    add_config_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="SVG line chart from result CSVs")
    p_plot.add_argument("csv", nargs="+", help="input CSV file(s)")
    p_plot.add_argument("--x", default="sweep_value", help="x column name")
    p_plot.add_argument("--y", default="mc_mean",
                        help="comma-separated y column names")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--logx", action="store_true", help="log-scale x axis")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, NoAcceptedTrials) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
