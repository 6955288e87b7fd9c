"""Bjøntegaard delta rate and delta distortion between RD curves.

Two interpolants are available: ``"pchip"`` (default, shape-preserving
piecewise cubic) and ``"cubic"`` (the classic single least-squares cubic).
Both are integrated with exact polynomial antiderivatives over the strict
overlap of the two curves.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .metrics import CIEDE_OFFSET, ms_ssim_db

METHODS = ("pchip", "cubic")
TRANSFORMS = ("quality", "reciprocal")
# metrics where a larger value is better once on the BD axis
KNOWN_METRICS = ("psnr", "msssim", "msssim_db", "ciede2000", "ciede_quality")
DATASETS = {
    "kodak_learned_rgb": "kodak_learned_rgb.csv",
    "kodak_vtm_comparison": "kodak_vtm_comparison.csv",
    "tecnick_chroma_channels": "tecnick_chroma_channels.csv",
}


@dataclass(frozen=True)
class RdPoint:
    rate: float
    distortion: float
    metric: str = "psnr"

    def __post_init__(self):
        if not (math.isfinite(self.rate) and math.isfinite(self.distortion)):
            raise ValueError(f"non-finite RD point ({self.rate}, {self.distortion})")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")


@dataclass
class RdCurve:
    codec: str
    metric: str
    points: list

    def __post_init__(self):
        pts = sorted(self.points, key=lambda p: p.rate)
        rates = [p.rate for p in pts]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError(f"{self.codec}/{self.metric}: duplicate rates")
        self.points = pts
        d = np.diff(self.distortions)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            warnings.warn(f"{self.codec}/{self.metric}: distortion is not strictly monotone in rate",
                          stacklevel=3)  # skip the generated __init__

    @classmethod
    def from_pairs(cls, codec: str, metric: str, pairs) -> "RdCurve":
        return cls(codec, metric, [RdPoint(float(r), float(d), metric) for r, d in pairs])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=np.float64)

    @property
    def distortions(self) -> np.ndarray:
        return np.array([p.distortion for p in self.points], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BdResult:
    bd_rate_percent: float
    bd_distortion: float
    distortion_overlap: tuple
    rate_overlap: tuple
    method: str

    def as_dict(self) -> dict:
        return {
            "bd_rate_percent": self.bd_rate_percent,
            "bd_distortion": self.bd_distortion,
            "distortion_overlap": list(self.distortion_overlap),
            "rate_overlap": list(self.rate_overlap),
            "method": self.method,
        }


def bd_axis(metric: str, values, transform: str = "quality") -> np.ndarray:
    """Map raw metric values onto the axis BD integrates over."""
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    v = np.asarray(values, dtype=np.float64)
    if metric == "msssim":
        return np.array([ms_ssim_db(float(x)) for x in v])
    if metric == "ciede2000":
        return 1.0 / v if transform == "reciprocal" else CIEDE_OFFSET - v
    if metric == "ciede_quality":
        return 1.0 / (CIEDE_OFFSET - v) if transform == "reciprocal" else v
    return v


def axis_label(metric: str, transform: str = "quality") -> str:
    if metric in ("ciede2000", "ciede_quality"):
        return "1 / ΔE00" if transform == "reciprocal" else "5.0 − ΔE00"
    return {"psnr": "PSNR [dB]", "msssim": "MS-SSIM [dB]", "msssim_db": "MS-SSIM [dB]"}.get(metric, metric)


def _check(curve: RdCurve) -> None:
    if len(curve) < 3:
        raise ValueError(f"{curve.codec}/{curve.metric}: need at least 3 points, got {len(curve)}")


def _integral(x: np.ndarray, y: np.ndarray, lo: float, hi: float, method: str) -> float:
    """Exact integral over [lo, hi] of the interpolant through (x, y)."""
    order = np.argsort(x)
    x, y = x[order], y[order]
    if np.any(np.diff(x) <= 0):
        raise ValueError("interpolation abscissae must be distinct")
    if method == "pchip":
        return float(PchipInterpolator(x, y, extrapolate=False).integrate(lo, hi))
    if method == "cubic":
        poly = np.polyint(np.polyfit(x, y, 3))
        return float(np.polyval(poly, hi) - np.polyval(poly, lo))
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _overlap(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    lo, hi = max(a.min(), b.min()), min(a.max(), b.max())
    if not hi > lo:
        raise ValueError("curves do not overlap")
    return float(lo), float(hi)


def _prepare(anchor: RdCurve, test: RdCurve, transform: str):
    _check(anchor)
    _check(test)
    if anchor.metric != test.metric:
        raise ValueError(f"metric mismatch: {anchor.metric} vs {test.metric}")
    da = bd_axis(anchor.metric, anchor.distortions, transform)
    dt = bd_axis(test.metric, test.distortions, transform)
    if not (np.all(np.isfinite(da)) and np.all(np.isfinite(dt))):
        raise ValueError("non-finite distortion after transform")
    return np.log10(anchor.rates), da, np.log10(test.rates), dt


def bd_rate(anchor: RdCurve, test: RdCurve, method: str = "pchip", transform: str = "quality") -> float:
    """Average rate difference (percent) of ``test`` over ``anchor`` at equal quality."""
    return _bd_rate(anchor, test, method, transform)[0]


def _bd_rate(anchor, test, method, transform):
    ra, da, rt, dt = _prepare(anchor, test, transform)
    lo, hi = _overlap(da, dt)
    diff = (_integral(dt, rt, lo, hi, method) - _integral(da, ra, lo, hi, method)) / (hi - lo)
    return (10.0 ** diff - 1.0) * 100.0, (lo, hi)


def bd_distortion(anchor: RdCurve, test: RdCurve, method: str = "pchip", transform: str = "quality") -> float:
    """Average quality difference of ``test`` over ``anchor`` at equal rate (BD-axis units)."""
    return _bd_distortion(anchor, test, method, transform)[0]


def _bd_distortion(anchor, test, method, transform):
    ra, da, rt, dt = _prepare(anchor, test, transform)
    lo, hi = _overlap(ra, rt)
    diff = (_integral(rt, dt, lo, hi, method) - _integral(ra, da, lo, hi, method)) / (hi - lo)
    return diff, (10.0 ** lo, 10.0 ** hi)


def bd(anchor: RdCurve, test: RdCurve, method: str = "pchip", transform: str = "quality") -> BdResult:
    rate, d_lap = _bd_rate(anchor, test, method, transform)
    dist, r_lap = _bd_distortion(anchor, test, method, transform)
    return BdResult(rate, dist, d_lap, r_lap, f"{method}/{anchor.metric}/{transform}")


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


@dataclass
class BdCell:
    codec: str
    metric: str
    bd_rate: float | None = None
    bd_distortion: float | None = None
    error: str | None = None
    marks: dict = field(default_factory=dict)  # {"rate": "best"|"second", "distortion": ...}

    @property
    def available(self) -> bool:
        return self.error is None


@dataclass
class BdTable:
    anchor: str
    codecs: list
    metrics: list
    cells: dict  # (codec, metric) -> BdCell
    method: str
    transform: str

    def cell(self, codec: str, metric: str) -> BdCell:
        return self.cells[(codec, metric)]

    def rows(self) -> list[dict]:
        out = []
        for c in self.codecs:
            for m in self.metrics:
                cell = self.cells[(c, m)]
                out.append({
                    "codec": c, "metric": m,
                    "bd_rate_percent": cell.bd_rate, "bd_distortion": cell.bd_distortion,
                    "rate_mark": cell.marks.get("rate", ""), "distortion_mark": cell.marks.get("distortion", ""),
                    "error": cell.error or "",
                })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["codec", "metric", "bd_rate_percent", "bd_distortion", "rate_mark", "distortion_mark", "error"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            row = dict(row)
            for k in ("bd_rate_percent", "bd_distortion"):
                row[k] = "--" if row[k] is None else f"{row[k]:.6f}"
            w.writerow(row)
        return buf.getvalue()

    def to_text(self) -> str:
        def fmt(v, mark, digits):
            if v is None:
                return "--"
            s = f"{v:.{digits}f}"
            return {"best": f"*{s}*", "second": f"_{s}_"}.get(mark, s)

        head = ["codec"] + [f"{m} {k}" for m in self.metrics for k in ("BD-BR%", "BD-D")]
        body = []
        for c in self.codecs:
            row = [c]
            for m in self.metrics:
                cell = self.cells[(c, m)]
                row += [fmt(cell.bd_rate, cell.marks.get("rate"), 2),
                        fmt(cell.bd_distortion, cell.marks.get("distortion"), 4)]
            body.append(row)
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        lines = ["  ".join(s.ljust(w) for s, w in zip(r, widths)) for r in [head] + body]
        lines.append(f"anchor: {self.anchor}; method: {self.method}; transform: {self.transform}; "
                     "*best* _second_")
        return "\n".join(lines) + "\n"


def _mark(cells: list, attr: str, key: str, better_low: bool) -> None:
    vals = sorted({getattr(c, attr) for c in cells if getattr(c, attr) is not None},
                  reverse=not better_low)
    for c in cells:
        v = getattr(c, attr)
        if v is None:
            continue
        if v == vals[0]:
            c.marks[key] = "best"
        elif len(vals) > 1 and v == vals[1]:
            c.marks[key] = "second"


def bd_table(curves, anchor: str, tests=None, metrics=None, method: str = "pchip",
             transform: str = "quality") -> BdTable:
    """BD-rate / BD-distortion for every (test codec, metric) against ``anchor``."""
    index = {(c.codec, c.metric): c for c in curves}
    if metrics is None:
        metrics = list(dict.fromkeys(c.metric for c in curves if c.codec == anchor))
    if tests is None:
        tests = [c for c in dict.fromkeys(c.codec for c in curves) if c != anchor]
    if not tests:
        raise ValueError("no test codecs")
    cells = {}
    for m in metrics:
        for t in tests:
            cell = BdCell(t, m)
            a, b = index.get((anchor, m)), index.get((t, m))
            if a is None or b is None:
                cell.error = "missing curve"
            else:
                try:
                    cell.bd_rate = _bd_rate(a, b, method, transform)[0]
                    cell.bd_distortion = _bd_distortion(a, b, method, transform)[0]
                except ValueError as exc:
                    cell.bd_rate = cell.bd_distortion = None
                    cell.error = str(exc)
            cells[(t, m)] = cell
        column = [cells[(t, m)] for t in tests]
        _mark(column, "bd_rate", "rate", better_low=True)
        _mark(column, "bd_distortion", "distortion", better_low=False)
    return BdTable(anchor, list(tests), list(metrics), cells, method, transform)


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

CSV_FIELDS = ("codec", "metric", "rate_bpp", "distortion")


def parse_curves(text: str) -> list[RdCurve]:
    """Parse ``codec,metric,rate_bpp,distortion`` rows; ``#`` lines are comments."""
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_FIELDS:
        raise ValueError(f"expected header {','.join(CSV_FIELDS)}, got {reader.fieldnames}")
    groups: dict[tuple[str, str], list] = {}
    for i, row in enumerate(reader, start=2):
        try:
            rate, dist = float(row["rate_bpp"]), float(row["distortion"])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"row {i}: {exc}") from exc
        groups.setdefault((row["codec"], row["metric"]), []).append((rate, dist))
    return [RdCurve.from_pairs(c, m, pts) for (c, m), pts in groups.items()]


def read_curves(path) -> list[RdCurve]:
    return parse_curves(Path(path).read_text())


def format_curves(curves, header: str = "") -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    lines.append(",".join(CSV_FIELDS))
    for c in curves:
        lines += [f"{c.codec},{c.metric},{p.rate!r},{p.distortion!r}" for p in c.points]
    return "\n".join(lines) + "\n"


def write_curves(path, curves, header: str = "") -> None:
    Path(path).write_text(format_curves(curves, header))


def load_dataset(name: str) -> list[RdCurve]:
    """Shipped RD point sets; see ``DATASETS`` for names."""
    if name not in DATASETS:
        raise KeyError(f"unknown dataset {name!r}; available: {sorted(DATASETS)}")
    text = resources.files("chromabench").joinpath("data").joinpath(DATASETS[name]).read_text()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return parse_curves(text)


def find_curve(curves, codec: str, metric: str) -> RdCurve:
    for c in curves:
        if c.codec == codec and c.metric == metric:
            return c
    raise KeyError(f"no curve {codec}/{metric}")
