"""``chromabench`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__, analysis, bd, codec, color, metrics, rdo
from .imageio import (
    NOMINAL_RANGES,
    PLANE_NAMES,
    ColorSpace,
    PlanarImage,
    read_gray16,
    read_image,
    write_gray16,
    write_image,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
IMAGE_SUFFIXES = (".png", ".ppm", ".pnm")
THREADS_ENV = "CHROMABENCH_THREADS"
CURVE_METRICS = ("psnr", "msssim_db", "ciede_quality")
COMPONENT_COLUMNS = ("side", "main", "luma-side", "luma-main", "chroma-side", "chroma-main")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"{d} is not a directory")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


# ---------------------------------------------------------------------------
# convert
# ---------------------------------------------------------------------------

SPACE_ARG = {"srgb": ColorSpace.SRGB, "linear": ColorSpace.LINEAR_RGB, "yuv": ColorSpace.YUV,
             "lab": ColorSpace.LAB}


def cmd_convert(args) -> int:
    if args.inverse:
        meta_path = Path(args.input)
        meta = json.loads(meta_path.read_text())
        space = ColorSpace(meta["space"])
        planes = []
        for p in meta["planes"]:
            lo, hi = p["range"]
            planes.append(lo + read_gray16(meta_path.parent / p["file"]) * (hi - lo))
        image = color.to_srgb(PlanarImage(np.stack(planes), space))
        write_image(args.output, PlanarImage(np.clip(image.as_float64(), 0, 1)))
        return EXIT_OK

    if args.space is None:
        raise UsageError("--space is required unless --inverse is given")
    space = SPACE_ARG[args.space]
    image = color.convert(read_image(args.input), space)
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, plane, (lo, hi) in zip(PLANE_NAMES[space], image.as_float64(), NOMINAL_RANGES[space]):
        fname = f"{prefix.name}_{name}.png"
        write_gray16(prefix.parent / fname, (plane - lo) / (hi - lo))
        entries.append({"name": name, "file": fname, "range": [lo, hi]})
    meta = {
        "space": space.value,
        "width": image.width,
        "height": image.height,
        "encoding": "16-bit gray PNG, value = lo + sample/65535 * (hi - lo)",
        "planes": entries,
        "color": color.describe(),
    }
    Path(f"{prefix}.json").write_text(_json(meta))
    return EXIT_OK


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

METRIC_FIELDS = ("image", "psnr", "msssim", "msssim_db", "ciede2000", "ciede_quality")


def _metric_row(name: str, ref: PlanarImage, dist: PlanarImage) -> dict:
    r = metrics.evaluate(ref, dist)
    return {"image": name, "psnr": r.psnr_db, "msssim": r.msssim, "msssim_db": r.msssim_db,
            "ciede2000": r.ciede2000, "ciede_quality": r.ciede_quality}


def _rows_csv(rows: list[dict], fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else ("" if v is None else v))
                    for k, v in row.items()})
    return buf.getvalue()


def cmd_metrics(args) -> int:
    ref, dist = Path(args.reference), Path(args.distorted)
    if ref.is_dir() != dist.is_dir():
        raise UsageError("reference and distorted must both be files or both be directories")
    if ref.is_dir():
        refs = _list_images(ref)
        if not refs:
            raise DataError(f"no images in {ref}")
        rows = []
        for p in refs:
            q = next((dist / (p.stem + s) for s in IMAGE_SUFFIXES if (dist / (p.stem + s)).exists()), None)
            if q is None:
                raise DataError(f"no distorted counterpart for {p.name} in {dist}")
            rows.append(_metric_row(p.stem, read_image(p), read_image(q)))
        mean = {"image": "mean"}
        for k in METRIC_FIELDS[1:]:
            mean[k] = float(np.mean([r[k] for r in rows]))
        rows.append(mean)
    else:
        rows = [_metric_row(ref.stem, read_image(ref), read_image(dist))]
    if args.format == "csv":
        _emit(_rows_csv(rows, METRIC_FIELDS), args.output)
    else:
        body = rows if len(rows) > 1 else rows[0]
        _emit(_json({"metrics": body, "psnr_cap_db": metrics.PSNR_CAP_DB}), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------


def _config_from_args(args) -> codec.CodecConfig:
    n2 = args.block * args.block
    chroma = args.chroma_channels
    if args.space == "rgb":
        if chroma is not None and chroma != n2:
            raise UsageError(f"--space rgb keeps all {n2} channels; --chroma-channels is not allowed")
        chroma = n2
    elif chroma is None:
        chroma = n2
    try:
        return codec.CodecConfig(args.space, args.op_point, chroma, args.block)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def bpp_line(trace: codec.EncodeTrace) -> str:
    parts = [f"bpp={trace.bpp:.6f}"] + [f"{k}={v:.6f}" for k, v in trace.component_bpp().items()]
    return " ".join(parts)


def cmd_encode(args) -> int:
    cfg = _config_from_args(args)
    image = read_image(args.input)
    bs = codec.encode_image(image, cfg)
    Path(args.output).write_bytes(bs.to_bytes())
    print(bpp_line(bs.trace))
    if args.trace:
        trace = bs.trace
        Path(args.trace).write_text(_json({
            "config": cfg.describe(),
            "width": trace.width,
            "height": trace.height,
            "bpp": trace.bpp,
            "component_bytes": trace.component_bytes,
            "component_bpp": trace.component_bpp(),
            "channels": [{"branch": c.branch, "channel": c.channel, "bits": c.bits} for c in trace.channels],
        }))
    return EXIT_OK


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    image = codec.decode_image(data)
    write_image(args.output, image)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepJob:
    image: str
    path: str
    space: str
    op_point: int
    chroma_channels: int

    @property
    def config_id(self) -> str:
        return f"{self.space}-c{self.chroma_channels}-q{self.op_point}"

    @property
    def curve_id(self) -> str:
        return f"{self.space}-c{self.chroma_channels}"


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        m = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(m, dict) or "corpus" not in m or "output" not in m or "configs" not in m:
        raise DataError("manifest needs 'corpus', 'output' and 'configs'")
    base = path.parent
    m["corpus"] = str((base / m["corpus"]).resolve()) if not os.path.isabs(m["corpus"]) else m["corpus"]
    m["output"] = str((base / m["output"]).resolve()) if not os.path.isabs(m["output"]) else m["output"]
    if not m["configs"]:
        raise DataError("manifest lists no codec configs")
    pooling = m.get("pooling", "mean")
    if pooling not in ("mean", "pooled"):
        raise DataError(f"unknown pooling mode {pooling!r}")
    m["pooling"] = pooling
    return m


def expand_jobs(manifest: dict, images: list[Path]) -> list[SweepJob]:
    jobs = set()
    for entry in manifest["configs"]:
        space = entry.get("space", "yuv")
        ops = entry.get("op_points", [1, 2, 3, 4])
        chroma = entry.get("chroma_channels", [64])
        if isinstance(chroma, int):
            chroma = [chroma]
        if space == "rgb":
            chroma = [64]
        for c in chroma:
            for op in ops:
                codec.CodecConfig(space, op, c)  # validate early
                for p in images:
                    jobs.add(SweepJob(p.stem, str(p), space, op, c))
    return sorted(jobs, key=lambda j: (j.image, j.config_id))


def run_job(job: SweepJob) -> dict:
    """Encode, decode and score one (image, config) pair."""
    row = {"image": job.image, "config": job.config_id, "space": job.space,
           "op_point": job.op_point, "chroma_channels": job.chroma_channels}
    t0 = time.perf_counter()
    try:
        x = read_image(job.path)
        cfg = codec.CodecConfig(job.space, job.op_point, job.chroma_channels)
        bs = codec.encode_image(x, cfg)
        y = codec.decode_image(bs.to_bytes())
        rep = metrics.evaluate(x, y)
        row.update({"pixels": x.width * x.height, "bits": bs.trace.total_bits, "bpp": bs.trace.bpp})
        for name, v in bs.trace.component_bpp().items():
            row[f"bpp_{name}"] = v
        row.update({"psnr": rep.psnr_db, "mse": metrics.mse(x, y), "msssim": rep.msssim,
                    "msssim_db": rep.msssim_db, "ciede2000": rep.ciede2000,
                    "ciede_quality": rep.ciede_quality, "error": ""})
    except Exception as exc:  # recorded per image; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time_s"] = time.perf_counter() - t0
    return row


ROW_FIELDS = (["image", "config", "space", "op_point", "chroma_channels", "pixels", "bits", "bpp"]
              + [f"bpp_{c}" for c in COMPONENT_COLUMNS]
              + ["psnr", "mse", "msssim", "msssim_db", "ciede2000", "ciede_quality", "error"])


def aggregate(rows: list[dict], pooling: str = "mean") -> list[bd.RdCurve]:
    """One RD curve per (space, C) and metric; points ordered by op point."""
    groups: dict[str, dict[int, list]] = {}
    for r in rows:
        if r.get("error"):
            continue
        key = f"{r['space']}-c{r['chroma_channels']}"
        groups.setdefault(key, {}).setdefault(r["op_point"], []).append(r)
    curves = []
    for key in sorted(groups):
        pts = {m: [] for m in CURVE_METRICS}
        for op in sorted(groups[key]):
            rs = groups[key][op]
            if pooling == "pooled":
                px = sum(r["pixels"] for r in rs)
                rate = sum(r["bits"] for r in rs) / px
                w = np.array([r["pixels"] for r in rs], dtype=np.float64) / px
                mse = float(np.dot(w, [r["mse"] for r in rs]))
                psnr = metrics.cap_db(10 * math.log10(1.0 / mse) if mse > 0 else math.inf)
                ssim = float(np.dot(w, [r["msssim"] for r in rs]))
                vals = {"psnr": psnr, "msssim_db": metrics.ms_ssim_db(min(ssim, 1.0)),
                        "ciede_quality": metrics.ciede_quality(float(np.dot(w, [r["ciede2000"] for r in rs])))}
            else:
                rate = float(np.mean([r["bpp"] for r in rs]))
                vals = {m: float(np.mean([r[m] for r in rs])) for m in CURVE_METRICS}
            for m in CURVE_METRICS:
                pts[m].append((rate, vals[m]))
        for m in CURVE_METRICS:
            try:
                curves.append(bd.RdCurve.from_pairs(key, m, pts[m]))
            except ValueError:
                continue  # duplicate rates; no usable curve
    return curves


def sweep_workers(manifest: dict) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV} must be an integer") from exc
    else:
        n = int(manifest.get("workers", 1))
    return max(1, n)


def cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    images = _list_images(manifest["corpus"])
    if not images:
        raise DataError(f"corpus {manifest['corpus']} contains no images")
    try:
        jobs = expand_jobs(manifest, images)
    except ValueError as exc:
        raise DataError(f"invalid config in manifest: {exc}") from exc
    workers = sweep_workers(manifest)
    out = Path(manifest["output"])
    out.mkdir(parents=True, exist_ok=True)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_job, jobs, chunksize=1))
    else:
        rows = [run_job(j) for j in jobs]

    (out / "rows.csv").write_text(_rows_csv([{k: r.get(k) for k in ROW_FIELDS} for r in rows], ROW_FIELDS))
    (out / "timings.csv").write_text(_rows_csv(
        [{"image": r["image"], "config": r["config"], "wall_time_s": r["wall_time_s"]} for r in rows],
        ("image", "config", "wall_time_s")))
    curves = aggregate(rows, manifest["pooling"])
    bd.write_curves(out / "rd_points.csv", curves,
                    header=f"aggregation: {manifest['pooling']} over {len(images)} images")
    failures = [{"image": r["image"], "config": r["config"], "error": r["error"]} for r in rows if r["error"]]
    summary = {
        "version": __version__,
        "corpus": sorted(p.name for p in images),
        "configs": sorted({j.config_id for j in jobs}),
        "resolved_configs": {j.config_id: codec.CodecConfig(j.space, j.op_point, j.chroma_channels).describe()
                             for j in jobs},
        "aggregation": manifest["pooling"],
        "rows": len(rows),
        "failures": failures,
        "color": color.describe(),
        "lagrangian_presets": [vars(p) for p in rdo.lagrangian_presets()],
    }
    (out / "summary.json").write_text(_json(summary))
    print(f"{len(rows)} rows, {len(failures)} failures, {len(curves)} curves -> {out}")
    return EXIT_DATA if failures and len(failures) == len(rows) else EXIT_OK


# ---------------------------------------------------------------------------
# bd
# ---------------------------------------------------------------------------


def _load_curve_sources(paths, dataset) -> list[bd.RdCurve]:
    curves = []
    if dataset:
        try:
            curves += bd.load_dataset(dataset)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc
    for p in paths or []:
        curves += bd.read_curves(p)
    if not curves:
        raise UsageError("no curves given (pass CSV files or --dataset)")
    return curves


def cmd_bd(args) -> int:
    curves = _load_curve_sources(args.curves, args.dataset)
    codecs = list(dict.fromkeys(c.codec for c in curves))
    anchor = args.anchor or codecs[0]
    if anchor not in codecs:
        raise DataError(f"anchor {anchor!r} not found; codecs: {codecs}")
    tests = args.test or [c for c in codecs if c != anchor]
    table = bd.bd_table(curves, anchor, tests, args.metric or None, args.method, args.transform)
    if args.format == "csv":
        _emit(table.to_csv(), args.output)
    elif args.format == "json":
        _emit(_json({"anchor": table.anchor, "method": table.method, "transform": table.transform,
                     "cells": table.rows()}), args.output)
    else:
        _emit(table.to_text(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-12:
        out.append(round(t, 10))
        t += step
    return out


def render_svg(curves: list[bd.RdCurve], metric: str, transform: str = "quality",
               width: int = 640, height: int = 440, title: str = "") -> str:
    if not curves:
        raise DataError("nothing to plot")
    ml, mr, mt, mb = 70, 170, 30 if title else 16, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([c.rates for c in curves])
    ys = np.concatenate([bd.bd_axis(metric, c.distortions, transform) for c in curves])
    x0, x1 = 0.0, float(xs.max()) * 1.05
    pad = 0.05 * max(float(ys.max() - ys.min()), 1e-9)
    y0, y1 = float(ys.min()) - pad, float(ys.max()) + pad

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<rect class="frame" x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 4}" stroke="black"/>'
                   f'<text x="{sx(t):.2f}" y="{mt + ph + 17}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 4}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>'
                   f'<text x="{ml - 7}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text class="xlabel" x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
               f'Rate [bpp]</text>')
    out.append(f'<text class="ylabel" transform="translate(18 {mt + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(bd.axis_label(metric, transform))}</text>')
    for i, c in enumerate(curves):
        col = PALETTE[i % len(PALETTE)]
        yv = bd.bd_axis(metric, c.distortions, transform)
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(c.rates, yv))
        label = escape(c.codec)
        out.append(f'<g class="curve" data-codec="{label}">')
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for x, y in zip(c.rates, yv):
            out.append(f'<circle class="marker" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" fill="{col}"/>')
        out.append("</g>")
        ly = mt + 12 + 18 * i
        out.append(f'<g class="legend-entry"><line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 36}" y2="{ly}" '
                   f'stroke="{col}" stroke-width="2"/><text class="legend" x="{ml + pw + 42}" '
                   f'y="{ly + 4}">{label}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args) -> int:
    curves = [c for c in _load_curve_sources(args.curves, args.dataset) if c.metric == args.metric]
    if args.codec:
        curves = [c for c in curves if c.codec in set(args.codec)]
    if not curves:
        raise DataError(f"no curves for metric {args.metric!r}")
    _emit(render_svg(curves, args.metric, args.transform, title=args.title or ""), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# impulse / complexity / presets
# ---------------------------------------------------------------------------


def cmd_impulse(args) -> int:
    cfg = _config_from_args(args)
    report = None
    if args.image:
        bs = codec.encode_image(read_image(args.image), cfg)
        report = analysis.channel_bit_allocation(bs.trace)
    mosaic, patches = analysis.impulse_mosaic(cfg, report, amplitude=args.amplitude)
    write_image(args.output, PlanarImage(mosaic))
    if args.report and report is not None:
        Path(args.report).write_text(report.to_csv())
    print(_json({
        "config": cfg.describe(),
        "patches": len(patches),
        "channels": [{"branch": p.branch, "channel": p.channel} for p in patches],
        "ranking": "bitrate" if report is not None else "zigzag",
    }), end="")
    return EXIT_OK


def cmd_complexity(args) -> int:
    try:
        spec = json.loads(Path(args.arch).read_text())
        layers = spec["layers"] if isinstance(spec, dict) else spec
        specs = [analysis.LayerSpec.from_dict(d) for d in layers]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.arch}: malformed architecture file ({exc})") from exc
    res = analysis.complexity(specs)
    _emit(_json({"name": spec.get("name", Path(args.arch).stem) if isinstance(spec, dict) else Path(args.arch).stem,
                 "layers": len(specs), **res.as_dict()}), args.output)
    return EXIT_OK


def cmd_presets(args) -> int:
    ops = [codec.CodecConfig("yuv", op).describe() for op in range(1, 5)]
    _emit(_json({
        "lagrangian": [vars(p) for p in rdo.lagrangian_presets()],
        "codec_operating_points": [{"op_point": o["operating_point"], "luma_step": o["luma_step"],
                                    "chroma_step_dual": o["chroma_step"]} for o in ops],
    }), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _add_codec_args(p):
    p.add_argument("--space", choices=sorted(codec.SPACE_IDS), default="yuv")
    p.add_argument("--op-point", type=int, choices=(1, 2, 3, 4), default=4)
    p.add_argument("--chroma-channels", type=int, choices=codec.CHROMA_CHOICES, default=None)
    p.add_argument("--block", type=int, default=8, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="chromabench", description="Color-space rate-distortion benchmarking toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="write color-converted planes as 16-bit gray PNGs")
    p.add_argument("input", help="image, or the JSON metadata file with --inverse")
    p.add_argument("output", help="output prefix, or output image with --inverse")
    p.add_argument("--space", choices=sorted(SPACE_ARG))
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("metrics", help="PSNR / MS-SSIM / CIEDE2000 between images or directories")
    p.add_argument("reference")
    p.add_argument("distorted")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("encode", help="encode an image to a .cbs stream")
    p.add_argument("input")
    p.add_argument("output")
    _add_codec_args(p)
    p.add_argument("--trace", help="write the per-channel rate trace as JSON")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a .cbs stream to an image")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="run a corpus x config sweep from a JSON manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bd", help="BD-rate / BD-distortion table")
    p.add_argument("curves", nargs="*", help="CSV files: codec,metric,rate_bpp,distortion")
    p.add_argument("--dataset", choices=sorted(bd.DATASETS))
    p.add_argument("--anchor")
    p.add_argument("--test", action="append")
    p.add_argument("--metric", action="append")
    p.add_argument("--method", choices=bd.METHODS, default="pchip")
    p.add_argument("--transform", choices=bd.TRANSFORMS, default="quality")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--output")
    p.set_defaults(func=cmd_bd)

    p = sub.add_parser("plot", help="render RD curves as SVG")
    p.add_argument("curves", nargs="*")
    p.add_argument("--dataset", choices=sorted(bd.DATASETS))
    p.add_argument("--metric", default="psnr")
    p.add_argument("--codec", action="append")
    p.add_argument("--transform", choices=bd.TRANSFORMS, default="quality")
    p.add_argument("--title")
    p.add_argument("--output")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("impulse", help="latent-channel impulse response mosaic (PNG)")
    _add_codec_args(p)
    p.add_argument("--image", help="rank channels by their bits on this image")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--report", help="write the channel ranking CSV here")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_impulse)

    p = sub.add_parser("complexity", help="parameter and kMACs/pixel count of a layer list")
    p.add_argument("arch")
    p.add_argument("--output")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("presets", help="print loss and codec operating points")
    p.add_argument("--output")
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"chromabench {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError, KeyError) as exc:
        print(f"chromabench {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"chromabench {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
