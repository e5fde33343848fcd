"""CSV, JSON and SVG artifacts.

Floats are written with ``repr`` so every CSV reads back bit-exactly, rows end
in ``"\\n"`` on every platform and JSON keys are sorted, which makes the files
byte-identical across runs with the same seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..errors import IoError

SVG_WIDTH = 720
SVG_HEIGHT = 440
SVG_MARGIN = 56
SVG_MAX_REPLICATES = 30


def jsonable(obj):
    """Recursively convert numpy values to plain Python and non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def write_json(path, payload: dict) -> Path:
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"
    return _write_text(Path(path), text)


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def table_text(columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta:
        buf.write("# " + " ".join(f"{k}={_cell(meta[k])}" for k in sorted(meta)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, meta: dict | None = None) -> Path:
    return _write_text(Path(path), table_text(list(columns), rows, meta))


def read_table(path) -> tuple[dict, list[str], list[list]]:
    """Inverse of :func:`write_table`: ``(meta, columns, rows)`` with typed cells."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    meta = {}
    if lines and lines[0].startswith("# "):
        for item in lines.pop(0)[2:].split():
            key, _, value = item.partition("=")
            meta[key] = _parse_cell(value)
    reader = csv.reader([ln for ln in lines if ln])
    try:
        columns = next(reader)
    except StopIteration:
        raise IoError(f"{path} has no header") from None
    return meta, columns, [[_parse_cell(c) for c in row] for row in reader]


def read_columns(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Numeric CSV as ``{column: float array}``."""
    meta, columns, rows = read_table(path)
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return meta, {c: data[:, j] for j, c in enumerate(columns)}


# ---------------------------------------------------------------------------
# scenario artifacts


def artifact_name(case: str, seed: int, kind: str, ext: str) -> str:
    return f"{case}_{seed}_{kind}.{ext}"


def curves_table(result) -> tuple[list[str], list[list]]:
    M = result.replicate_curves.shape[0]
    columns = ["t", "beta", "projection", "mean", "variance"] + [f"rep_{m:03d}" for m in range(M)]
    cols = [result.grid, result.beta_curve, result.projection_curve, result.mean_curve,
            result.variance_curve] + [result.replicate_curves[m] for m in range(M)]
    rows = [list(r) for r in zip(*(np.asarray(c, dtype=float).tolist() for c in cols))]
    return columns, rows


def summary_payload(result) -> dict:
    cfg = result.config
    return {
        "case": cfg.case,
        "seed": cfg.seed,
        "config": {
            "beta": cfg.beta,
            "subspace": cfg.subspace,
            "process": cfg.process,
            "process_params": dict(sorted(cfg.process_params.items())),
            "n": cfg.n,
            "replicates": cfg.replicates,
            "sigma": cfg.sigma,
            "k_s": cfg.k_s,
            "grid_points": cfg.grid_points,
            "center": cfg.center,
        },
        "metrics": result.metrics,
        "replicate_count": len(result.replicates),
        "beta_D": [[float(v) for v in r.beta_D] for r in result.replicates],
        "thresholds": dict(sorted(cfg.thresholds.items())),
    }


def emit_scenario(result, out_dir, formats=("csv", "json", "svg")) -> dict[str, Path]:
    """Write the curves CSV, summary JSON and figure SVG of one scenario.

    With no replicates only the JSON summary is written.
    """
    cfg = result.config
    out = Path(out_dir)
    files: dict[str, Path] = {}
    has_curves = len(result.replicates) > 0
    if "json" in formats:
        files["summary"] = write_json(out / artifact_name(cfg.case, cfg.seed, "summary", "json"),
                                      summary_payload(result))
    if not has_curves:
        return files
    if "csv" in formats:
        columns, rows = curves_table(result)
        meta = {"case": cfg.case, "seed": cfg.seed, "n": cfg.n, "replicates": len(result.replicates)}
        files["curves"] = write_table(out / artifact_name(cfg.case, cfg.seed, "curves", "csv"),
                                      columns, rows, meta)
    if "svg" in formats:
        svg = figure_svg(result.grid, result.beta_curve, result.projection_curve, result.mean_curve,
                         result.replicate_curves, title=f"{cfg.case} (seed {cfg.seed}, n = {cfg.n})")
        files["figure"] = _write_text(out / artifact_name(cfg.case, cfg.seed, "figure", "svg"), svg)
    return files


# ---------------------------------------------------------------------------
# SVG


def _nice_range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return -1.0, 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _polyline(xs, ys, style: str) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline points="{pts}" fill="none" {style}/>'


def figure_svg(grid, beta, projection, mean, replicates=None, title: str = "") -> str:
    """Static line chart: solid true beta, dashed projection, dotted mean, faint replicates.

    The x axis is fixed to ``[-1, 1]``; the automatic y range is stored in the
    root element's ``data-ymin``/``data-ymax`` attributes.
    """
    grid = np.asarray(grid, dtype=float)
    reps = np.zeros((0, len(grid))) if replicates is None else np.asarray(replicates, dtype=float)
    reps = reps[:SVG_MAX_REPLICATES]
    stack = [np.asarray(beta), np.asarray(projection), np.asarray(mean)] + list(reps)
    ymin, ymax = _nice_range(np.concatenate([np.ravel(s) for s in stack]))
    W, H, m = SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN
    pw, ph = W - 2 * m, H - 2 * m

    def sx(t):
        return m + (np.asarray(t) + 1.0) / 2.0 * pw

    def sy(v):
        return m + (ymax - np.asarray(v)) / (ymax - ymin) * ph

    xs = sx(grid)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" data-xmin="-1" data-xmax="1" '
        f'data-ymin="{ymin!r}" data-ymax="{ymax!r}">',
        f"<!-- y range [{ymin!r}, {ymax!r}] -->",
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="{m / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{_escape(title)}</text>',
        f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for t in (-1.0, -0.5, 0.0, 0.5, 1.0):
        x = float(sx(t))
        parts.append(f'<line x1="{x:.2f}" y1="{m + ph}" x2="{x:.2f}" y2="{m + ph + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{m + ph + 20}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{t:g}</text>')
    for v in np.linspace(ymin, ymax, 5):
        y = float(sy(v))
        parts.append(f'<line x1="{m - 5}" y1="{y:.2f}" x2="{m}" y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{m - 8}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{v:.3g}</text>')
    parts.append('<g class="replicates">')
    for r in reps:
        parts.append(_polyline(xs, sy(r), 'stroke="#1f77b4" stroke-opacity="0.15" stroke-width="1"'))
    parts.append("</g>")
    parts.append('<g class="beta">' + _polyline(xs, sy(beta), 'stroke="black" stroke-width="2"') + "</g>")
    parts.append('<g class="projection">' + _polyline(
        xs, sy(projection), 'stroke="#d62728" stroke-width="2" stroke-dasharray="8,5"') + "</g>")
    parts.append('<g class="mean">' + _polyline(
        xs, sy(mean), 'stroke="#2ca02c" stroke-width="2.5" stroke-dasharray="2,4"') + "</g>")
    legend = [("true beta", 'stroke="black" stroke-width="2"'),
              ("projection on D", 'stroke="#d62728" stroke-width="2" stroke-dasharray="8,5"'),
              ("pointwise mean", 'stroke="#2ca02c" stroke-width="2.5" stroke-dasharray="2,4"')]
    for i, (label, style) in enumerate(legend):
        y = m + 16 + 16 * i
        parts.append(f'<line x1="{m + 10}" y1="{y}" x2="{m + 40}" y2="{y}" {style}/>')
        parts.append(f'<text x="{m + 46}" y="{y + 4}" font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
