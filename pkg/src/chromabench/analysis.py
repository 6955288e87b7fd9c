"""Latent-channel diagnostics and a layer-list complexity calculator.

Covers bitrate-ranked channel importance, impulse responses rendered as
patch mosaics, single-channel reconstructions and parameter / kMACs counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import (
    CodecConfig,
    EncodeTrace,
    LatentTensor,
    branch_names,
    from_branches,
    kept_channels,
    synthesis,
    to_branches,
)
from .imageio import ColorSpace, PlanarImage

PATCH_SIZE = 16
MOSAIC_COLUMNS = 16
DUAL_LAYOUT = {"luma": 32, "chroma": 16}
SINGLE_LAYOUT = {"rgb": 48}
BRANCH_ORDER = {"rgb": 0, "luma": 0, "chroma": 1}


@dataclass(frozen=True)
class ChannelEntry:
    branch: str
    channel: int
    bits: float
    rank: int


@dataclass
class ChannelReport:
    entries: list
    total_bits: float

    def by_branch(self, branch: str) -> list:
        return [e for e in self.entries if e.branch == branch]

    def top(self, branch: str, k: int) -> list:
        return self.by_branch(branch)[:k]

    def to_csv(self) -> str:
        lines = ["branch,channel,bits,rank"]
        lines += [f"{e.branch},{e.channel},{e.bits:.6f},{e.rank}" for e in self.entries]
        return "\n".join(lines) + "\n"


def channel_bit_allocation(trace: EncodeTrace) -> ChannelReport:
    """Rank latent channels by coded bits, highest first."""
    if trace is None or not trace.channels:
        raise ValueError("trace has no channel records")
    totals: dict[tuple[str, int], float] = {}
    for c in trace.channels:
        key = (c.branch, c.channel)
        totals[key] = totals.get(key, 0.0) + c.bits
    order = sorted(totals.items(), key=lambda kv: (-kv[1], BRANCH_ORDER.get(kv[0][0], 9), kv[0][1]))
    entries = [ChannelEntry(b, ch, bits, r + 1) for r, ((b, ch), bits) in enumerate(order)]
    return ChannelReport(entries, float(sum(totals.values())))


# ---------------------------------------------------------------------------
# Impulse responses
# ---------------------------------------------------------------------------


def _planes_per_branch(branch: str) -> int:
    return {"rgb": 3, "luma": 1, "chroma": 2}[branch]


def _validate_channel(cfg: CodecConfig, branch: str, channel: int) -> tuple[int, int]:
    if branch not in branch_names(cfg):
        raise ValueError(f"branch {branch!r} not present in {cfg.space} mode")
    n2 = cfg.block * cfg.block
    if not 0 <= channel < _planes_per_branch(branch) * n2:
        raise ValueError(f"channel {channel} out of range for branch {branch}")
    plane, sub = divmod(channel, n2)
    if sub not in kept_channels(cfg, branch):
        raise ValueError(f"channel {channel} is masked out at C={cfg.chroma_channels}")
    return plane, sub


def neutral_base(cfg: CodecConfig) -> dict[str, np.ndarray]:
    """Branch planes of a mid-gray block; impulses are added on top of it."""
    gray = np.full((3, cfg.block, cfg.block), 0.5)
    return to_branches(gray, cfg.space)


@dataclass
class ImpulsePatch:
    branch: str
    channel: int
    response: np.ndarray  # operating-space response, (planes, N, N)
    rgb: np.ndarray  # sRGB display patch, (3, N, N) in [0, 1]

    def display(self, size: int = PATCH_SIZE) -> np.ndarray:
        """Nearest-neighbour upscaled sRGB patch, (3, size, size)."""
        n = self.rgb.shape[-1]
        idx = np.arange(size) * n // size
        return self.rgb[:, idx][:, :, idx]


def impulse_response(cfg: CodecConfig, branch: str, channel: int, amplitude: float = 1.0) -> ImpulsePatch:
    """Synthesize one N x N block from a single latent impulse.

    ``response`` is the raw synthesis output for the impulsed branch. The
    display patch biases it around mid-gray (0.5 + r / (2 max|r|)) in the
    operating space of that plane, keeps the other planes neutral and
    converts to sRGB.
    """
    plane, sub = _validate_channel(cfg, branch, channel)
    n = cfg.block
    nplanes = _planes_per_branch(branch)
    coeffs = np.zeros((nplanes, n * n, 1, 1))
    coeffs[plane, sub] = amplitude
    response = synthesis(LatentTensor(branch, coeffs, n, n, n))

    base = neutral_base(cfg)
    peak = float(np.max(np.abs(response)))
    scaled = response / (2.0 * peak) if peak > 0 else response
    if branch == "rgb":
        base[branch] = 0.5 + scaled
    else:
        base[branch] = base[branch] + scaled
    rgb = from_branches(base, cfg.space)
    return ImpulsePatch(branch, channel, response, rgb)


def _ranked_channels(cfg: CodecConfig, branch: str, report: ChannelReport | None) -> list[int]:
    n2 = cfg.block * cfg.block
    allowed = [p * n2 + c for p in range(_planes_per_branch(branch)) for c in kept_channels(cfg, branch)]
    if report is None:
        # without a bit ranking fall back to frequency order, plane-interleaved
        from .codec import zigzag_order
        rank = {c: i for i, c in enumerate(zigzag_order(cfg.block))}
        return sorted(allowed, key=lambda ch: (rank[ch % n2], ch // n2))
    ranked = [e.channel for e in report.by_branch(branch) if e.channel in set(allowed)]
    return ranked + [c for c in allowed if c not in set(ranked)]


def mosaic_channels(cfg: CodecConfig, report: ChannelReport | None = None,
                    layout: dict | None = None) -> list[tuple[str, int]]:
    """(branch, channel) pairs in mosaic order: top luma then top chroma."""
    layout = layout or (DUAL_LAYOUT if cfg.dual else SINGLE_LAYOUT)
    picks = []
    for branch, k in layout.items():
        picks += [(branch, c) for c in _ranked_channels(cfg, branch, report)[:k]]
    return picks


def impulse_mosaic(cfg: CodecConfig, report: ChannelReport | None = None, amplitude: float = 1.0,
                   columns: int = MOSAIC_COLUMNS, patch: int = PATCH_SIZE,
                   layout: dict | None = None) -> tuple[np.ndarray, list]:
    """Tile impulse patches into a (3, rows*patch, columns*patch) sRGB mosaic."""
    picks = mosaic_channels(cfg, report, layout)
    if not picks:
        raise ValueError("no channels to render")
    rows = math.ceil(len(picks) / columns)
    out = np.full((3, rows * patch, columns * patch), 0.5)
    patches = []
    for i, (branch, ch) in enumerate(picks):
        p = impulse_response(cfg, branch, ch, amplitude)
        r, c = divmod(i, columns)
        out[:, r * patch:(r + 1) * patch, c * patch:(c + 1) * patch] = p.display(patch)
        patches.append(p)
    return out, patches


# ---------------------------------------------------------------------------
# Single-channel reconstruction
# ---------------------------------------------------------------------------


def single_channel_reconstruction(latents: dict, cfg: CodecConfig, subband: int,
                                  branch: str | None = None) -> PlanarImage:
    """Synthesize using one subband only; every other channel is zeroed.

    ``latents`` maps branch name to ``LatentTensor``. With ``branch`` given,
    the other branch is replaced by its neutral (mid-gray) content so only
    the chosen branch contributes; otherwise subband ``subband`` is kept in
    every plane of every branch.
    """
    n2 = cfg.block * cfg.block
    if not 0 <= subband < n2:
        raise ValueError(f"subband {subband} out of range")
    planes = {}
    for name, lat in latents.items():
        if branch is not None and name != branch:
            hb, wb = lat.coeffs.shape[2:]
            gray = to_branches(np.full((3, 1, 1), 0.5), cfg.space)[name]
            coeffs = np.zeros_like(lat.coeffs)
            coeffs[:, 0] = gray[:, 0, 0, None, None] * cfg.block
        else:
            coeffs = np.zeros_like(lat.coeffs)
            coeffs[:, subband] = lat.coeffs[:, subband]
        planes[name] = synthesis(lat.copy(coeffs))
    return PlanarImage(from_branches(planes, cfg.space), ColorSpace.SRGB)


def box_lowpass(planes: np.ndarray, block: int) -> np.ndarray:
    """Per-block means broadcast back to full size (edge-replicated padding)."""
    planes = np.asarray(planes, dtype=np.float64)
    p, h, w = planes.shape
    hb, wb = -(-h // block), -(-w // block)
    padded = np.pad(planes, ((0, 0), (0, hb * block - h), (0, wb * block - w)), mode="edge")
    means = padded.reshape(p, hb, block, wb, block).mean(axis=(2, 4))
    up = np.repeat(np.repeat(means, block, axis=1), block, axis=2)
    return up[:, :h, :w]


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.corrcoef(np.ravel(a), np.ravel(b))[0, 1])


# ---------------------------------------------------------------------------
# Complexity
# ---------------------------------------------------------------------------


LAYER_KINDS = ("conv", "deconv", "dense")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    cin: int
    cout: int
    kh: int = 1
    kw: int = 1
    stride: int = 1
    divisor: int = 1  # output resolution relative to the source image
    bias: bool = True

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.divisor == 0:
            raise ValueError("resolution divisor must be non-zero")
        for name in ("cin", "cout", "kh", "kw", "stride", "divisor"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def weights(self) -> int:
        return self.cin * self.cout * self.kh * self.kw

    @property
    def params(self) -> int:
        return self.weights + (self.cout if self.bias else 0)

    @property
    def macs_per_pixel(self) -> float:
        # each output position costs one weight pass; outputs are 1/divisor^2 as dense as pixels
        return self.weights / self.divisor ** 2

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        kernel = d.get("kernel", [1, 1])
        if isinstance(kernel, int):
            kernel = [kernel, kernel]
        return cls(d["kind"], int(d["in"]), int(d["out"]), int(kernel[0]), int(kernel[1]),
                   int(d.get("stride", 1)), int(d.get("divisor", 1)), bool(d.get("bias", True)))


@dataclass(frozen=True)
class Complexity:
    params: int
    kmacs_per_pixel: float

    def as_dict(self) -> dict:
        return {"params": self.params, "kmacs_per_pixel": self.kmacs_per_pixel}


def complexity(layers) -> Complexity:
    layers = list(layers)
    if not layers:
        raise ValueError("layer list is empty")
    params = sum(l.params for l in layers)
    macs = math.fsum(l.macs_per_pixel for l in layers)
    return Complexity(params, macs / 1000.0)
