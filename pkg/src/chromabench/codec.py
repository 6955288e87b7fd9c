"""Block-DCT surrogate codec with single-branch (RGB) or luma/chroma topology.

Each plane is split into N x N blocks and transformed with an orthonormal
2-D DCT-II. Coefficient (u, v) of every block is gathered into "latent
channel" ``u * N + v``, so a plane yields N**2 channels on a
ceil(H/N) x ceil(W/N) grid. Channels are quantized with a uniform step and
coded with a zero-mean Gaussian whose scale is fitted per channel and sent as
side information (the DC channel also sends its mean). This is a fixed
stand-in for learned analysis/synthesis transforms, not a reimplementation.

Bitstream layout (big-endian)::

    "CBS1" | version u8 | space u8 | block u8 | chroma_channels u8 |
    operating_point u8 | width u32 | height u32 | n_components u8 |
    n_components * (id u8, length u32) | payloads
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import entropy
from .color import lab_to_srgb_array, rgb_to_yuv_array, srgb_to_lab_array, yuv_to_rgb_array
from .imageio import ColorSpace, PlanarImage

MAGIC = b"CBS1"
VERSION = 1
SPACE_IDS = {"rgb": 0, "yuv": 1, "lab": 2}
SPACE_NAMES = {v: k for k, v in SPACE_IDS.items()}
CHROMA_CHOICES = (64, 32, 16, 8)

# Luma step per operating point, in 8-bit code values; q1 is the lowest rate.
LUMA_STEPS_8BIT = (64.0, 32.0, 16.0, 8.0)
CHROMA_STEP_FACTOR = 2.0
SCALE_STEP_LOG2 = 0.25
N_SCALES = math.ceil(math.log2(entropy.SIGMA_MAX / entropy.SIGMA_MIN) / SCALE_STEP_LOG2) + 1

SINGLE_COMPONENTS = ("side", "main")
DUAL_COMPONENTS = ("luma-side", "luma-main", "chroma-side", "chroma-main")


class BitstreamError(ValueError):
    """Malformed, truncated or tampered bitstream."""


@dataclass(frozen=True)
class CodecConfig:
    space: str = "yuv"
    operating_point: int = 4
    chroma_channels: int = 64
    block: int = 8
    luma_step: float | None = None
    chroma_step: float | None = None

    def __post_init__(self):
        if self.space not in SPACE_IDS:
            raise ValueError(f"unknown space {self.space!r}; expected one of {sorted(SPACE_IDS)}")
        if not 1 <= self.block <= 32:
            raise ValueError("block size must be in 1..32")
        n2 = self.block * self.block
        if not 1 <= self.chroma_channels <= n2:
            raise ValueError(f"chroma_channels must be in 1..{n2}")
        if self.space == "rgb" and self.chroma_channels != n2:
            raise ValueError("single-branch RGB mode keeps all channels; chroma_channels must be N*N")
        if self.operating_point == 0:
            if self.luma_step is None or self.luma_step <= 0:
                raise ValueError("operating point 0 (custom) needs a positive luma_step")
        elif not 1 <= self.operating_point <= len(LUMA_STEPS_8BIT):
            raise ValueError("operating_point must be 1..4, or 0 with explicit steps")
        elif self.luma_step is not None or self.chroma_step is not None:
            raise ValueError("explicit steps require operating_point=0")

    @property
    def dual(self) -> bool:
        return self.space != "rgb"

    @property
    def steps(self) -> tuple[float, float, float]:
        """(luma step, chroma step, side-info step in log2 units)."""
        if self.operating_point:
            luma = LUMA_STEPS_8BIT[self.operating_point - 1] / 255.0
        else:
            luma = float(self.luma_step)
        if not self.dual:
            return luma, luma, SCALE_STEP_LOG2
        chroma = self.chroma_step if self.chroma_step is not None else CHROMA_STEP_FACTOR * luma
        return luma, float(chroma), SCALE_STEP_LOG2

    @property
    def label(self) -> str:
        q = f"q{self.operating_point}" if self.operating_point else f"step{self.steps[0]:.6g}"
        return f"{self.space}-c{self.chroma_channels}-{q}"

    def describe(self) -> dict:
        luma, chroma, side = self.steps
        return {
            "space": self.space,
            "operating_point": self.operating_point,
            "chroma_channels": self.chroma_channels,
            "block": self.block,
            "luma_step": luma,
            "chroma_step": chroma,
            "scale_step_log2": side,
        }


# ---------------------------------------------------------------------------
# Transform
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix; row k is the k-th basis vector."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    m[0] /= math.sqrt(2.0)
    m.setflags(write=False)
    return m


def basis_function(n: int, channel: int) -> np.ndarray:
    """N x N spatial pattern of latent channel ``channel``."""
    d = dct_matrix(n)
    u, v = divmod(channel, n)
    return np.outer(d[u], d[v])


@dataclass
class LatentTensor:
    """Transform coefficients of one branch: shape (planes, N*N, rows, cols)."""

    branch: str
    coeffs: np.ndarray
    block: int
    height: int
    width: int

    @property
    def planes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0] * self.coeffs.shape[1]

    def copy(self, coeffs: np.ndarray | None = None) -> "LatentTensor":
        return LatentTensor(self.branch, self.coeffs.copy() if coeffs is None else coeffs,
                            self.block, self.height, self.width)


@dataclass
class QuantizedLatent:
    branch: str
    symbols: np.ndarray  # int64, same layout as LatentTensor.coeffs
    step: float
    block: int
    height: int
    width: int

    def dequantize(self) -> LatentTensor:
        return LatentTensor(self.branch, self.symbols * self.step, self.block, self.height, self.width)


def analysis(planes: np.ndarray, block: int = 8, branch: str = "rgb") -> LatentTensor:
    """Forward blockwise DCT; edges are padded by replication."""
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim == 2:
        planes = planes[None]
    p, h, w = planes.shape
    n = block
    hb, wb = -(-h // n), -(-w // n)
    padded = np.pad(planes, ((0, 0), (0, hb * n - h), (0, wb * n - w)), mode="edge")
    blocks = padded.reshape(p, hb, n, wb, n)
    d = dct_matrix(n)
    coeffs = np.einsum("ui,pbiwj,vj->puvbw", d, blocks, d, optimize=True)
    return LatentTensor(branch, coeffs.reshape(p, n * n, hb, wb), n, h, w)


def synthesis(latent: LatentTensor) -> np.ndarray:
    """Inverse blockwise DCT, cropped to the original plane size."""
    p, nn, hb, wb = latent.coeffs.shape
    n = latent.block
    if nn != n * n:
        raise ValueError(f"latent has {nn} channels per plane, block {n} needs {n * n}")
    if hb * n < latent.height or wb * n < latent.width:
        raise ValueError("latent grid too small for the stated image size")
    d = dct_matrix(n)
    coeffs = latent.coeffs.reshape(p, n, n, hb, wb)
    blocks = np.einsum("ui,puvbw,vj->pbiwj", d, coeffs, d, optimize=True)
    return blocks.reshape(p, hb * n, wb * n)[:, :latent.height, :latent.width]


def zigzag_order(n: int) -> list[int]:
    """Channel indices of an N x N block in JPEG zigzag order."""
    cells = sorted(((u, v) for u in range(n) for v in range(n)),
                   key=lambda uv: (uv[0] + uv[1], uv[0] if (uv[0] + uv[1]) % 2 else -uv[0]))
    return [u * n + v for u, v in cells]


def chroma_channel_mask(c: int, block: int = 8) -> list[int]:
    """First ``c`` subbands in zigzag order."""
    if not 1 <= c <= block * block:
        raise ValueError(f"chroma channel count must be in 1..{block * block}, got {c}")
    return zigzag_order(block)[:c]


def quantize(latent: LatentTensor, step: float) -> QuantizedLatent:
    symbols = np.rint(latent.coeffs / step).astype(np.int64)
    return QuantizedLatent(latent.branch, symbols, step, latent.block, latent.height, latent.width)


# ---------------------------------------------------------------------------
# Color-space staging
# ---------------------------------------------------------------------------


def to_branches(rgb: np.ndarray, space: str) -> dict[str, np.ndarray]:
    """Split sRGB planes into the codec's nominal [0, 1]-scaled branch planes."""
    if space == "rgb":
        return {"rgb": rgb}
    if space == "yuv":
        yuv = rgb_to_yuv_array(rgb)
        return {"luma": yuv[:1], "chroma": yuv[1:]}
    lab = srgb_to_lab_array(rgb)
    scaled = np.stack([lab[0] / 100.0, (lab[1] + 128.0) / 255.0, (lab[2] + 128.0) / 255.0])
    return {"luma": scaled[:1], "chroma": scaled[1:]}


def from_branches(planes: dict[str, np.ndarray], space: str) -> np.ndarray:
    """Inverse of ``to_branches``; output is sRGB clipped to [0, 1]."""
    if space == "rgb":
        rgb = planes["rgb"]
    elif space == "yuv":
        rgb = yuv_to_rgb_array(np.concatenate([planes["luma"], planes["chroma"]]))
    else:
        s = np.concatenate([planes["luma"], planes["chroma"]])
        lab = np.stack([s[0] * 100.0, s[1] * 255.0 - 128.0, s[2] * 255.0 - 128.0])
        rgb = lab_to_srgb_array(lab)
    return np.clip(rgb, 0.0, 1.0)


def branch_names(cfg: CodecConfig) -> tuple[str, ...]:
    return ("luma", "chroma") if cfg.dual else ("rgb",)


def kept_channels(cfg: CodecConfig, branch: str) -> list[int]:
    if branch == "chroma":
        return sorted(chroma_channel_mask(cfg.chroma_channels, cfg.block))
    return list(range(cfg.block * cfg.block))


def branch_step(cfg: CodecConfig, branch: str) -> float:
    luma, chroma, _ = cfg.steps
    return chroma if branch == "chroma" else luma


# ---------------------------------------------------------------------------
# Side information
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelParams:
    scale_index: int
    mean: int = 0

    @property
    def sigma(self) -> float:
        return min(entropy.SIGMA_MIN * 2.0 ** (self.scale_index * SCALE_STEP_LOG2), entropy.SIGMA_MAX)

    def table(self) -> entropy.CdfTable:
        return entropy.build_gaussian_cdf(entropy.GaussianParams(float(self.mean), self.sigma))


@lru_cache(maxsize=1)
def scale_table() -> entropy.CdfTable:
    """Fixed, input-independent prior for scale indices."""
    return entropy.uniform_table(N_SCALES)


def fit_channel(symbols: np.ndarray, dc: bool) -> ChannelParams:
    """Maximum-likelihood Gaussian scale (zero mean except on DC), log-quantized."""
    s = symbols.astype(np.float64).ravel()
    mean = int(np.floor(np.mean(s) + 0.5)) if dc else 0
    sigma = math.sqrt(float(np.mean((s - mean) ** 2)))
    sigma = min(max(sigma, entropy.SIGMA_MIN), entropy.SIGMA_MAX)
    idx = int(np.floor(math.log2(sigma / entropy.SIGMA_MIN) / SCALE_STEP_LOG2 + 0.5))
    return ChannelParams(min(max(idx, 0), N_SCALES - 1), mean)


# ---------------------------------------------------------------------------
# Container
# ---------------------------------------------------------------------------


@dataclass
class ChannelBits:
    branch: str
    channel: int  # plane * N*N + subband, within the branch
    plane: int
    subband: int
    bits: float  # ideal code length of the channel's main-component symbols
    symbols: int


@dataclass
class EncodeTrace:
    width: int
    height: int
    component_bytes: dict
    channels: list
    config: dict = field(default_factory=dict)

    @property
    def total_bits(self) -> int:
        return 8 * sum(self.component_bytes.values())

    @property
    def bpp(self) -> float:
        return self.total_bits / (self.width * self.height)

    def component_bpp(self) -> dict:
        px = self.width * self.height
        return {name: 8 * n / px for name, n in self.component_bytes.items()}

    def main_ideal_bits(self, branch: str | None = None) -> float:
        return float(sum(c.bits for c in self.channels if branch is None or c.branch == branch))


@dataclass
class Bitstream:
    space: str
    block: int
    chroma_channels: int
    operating_point: int
    width: int
    height: int
    components: list  # [(component id, payload bytes)]
    trace: EncodeTrace | None = field(default=None, repr=False, compare=False)

    @property
    def component_names(self) -> tuple[str, ...]:
        return DUAL_COMPONENTS if self.space != "rgb" else SINGLE_COMPONENTS

    @property
    def payload_size(self) -> int:
        return sum(len(p) for _, p in self.components)

    def component_ranges(self) -> list[tuple[int, int, int]]:
        """(id, start, end) byte ranges within the concatenated payload."""
        out, pos = [], 0
        for cid, payload in self.components:
            out.append((cid, pos, pos + len(payload)))
            pos += len(payload)
        return out

    def header_bytes(self) -> bytes:
        head = MAGIC + struct.pack(">BBBBBIIB", VERSION, SPACE_IDS[self.space], self.block,
                                   self.chroma_channels, self.operating_point, self.width,
                                   self.height, len(self.components))
        for cid, payload in self.components:
            head += struct.pack(">BI", cid, len(payload))
        return head

    def to_bytes(self) -> bytes:
        return self.header_bytes() + b"".join(p for _, p in self.components)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        data = bytes(data)
        fixed = struct.calcsize(">BBBBBIIB")
        if len(data) < 4 + fixed:
            raise BitstreamError("truncated header")
        if data[:4] != MAGIC:
            raise BitstreamError("bad magic")
        version, space, block, chroma, op, width, height, count = struct.unpack(
            ">BBBBBIIB", data[4:4 + fixed])
        if version != VERSION:
            raise BitstreamError(f"unsupported version {version}")
        if space not in SPACE_NAMES:
            raise BitstreamError(f"unknown space id {space}")
        pos = 4 + fixed
        table = []
        for _ in range(count):
            if pos + 5 > len(data):
                raise BitstreamError("truncated component table")
            cid, length = struct.unpack(">BI", data[pos:pos + 5])
            table.append((cid, length))
            pos += 5
        components = []
        for cid, length in table:
            if pos + length > len(data):
                raise BitstreamError(f"component {cid} truncated")
            components.append((cid, data[pos:pos + length]))
            pos += length
        if pos != len(data):
            raise BitstreamError(f"{len(data) - pos} trailing bytes after the last component")
        return cls(SPACE_NAMES[space], block, chroma, op, width, height, components)

    def config(self) -> CodecConfig:
        return CodecConfig(self.space, self.operating_point, self.chroma_channels, self.block,
                           luma_step=1.0 if self.operating_point == 0 else None)


# ---------------------------------------------------------------------------
# Encode / decode
# ---------------------------------------------------------------------------


def _encode_branch(q: QuantizedLatent, cfg: CodecConfig, send_step: bool):
    n2 = cfg.block * cfg.block
    side = entropy.RangeEncoder()
    main = entropy.RangeEncoder()
    if send_step:
        side.encode_bits(struct.unpack(">I", struct.pack(">f", q.step))[0], 32)
    stable = scale_table()
    channel_bits = []
    for p in range(q.symbols.shape[0]):
        for c in kept_channels(cfg, q.branch):
            syms = q.symbols[p, c]
            params = fit_channel(syms, dc=(c == 0))
            entropy.encode_symbol(side, stable, params.scale_index)
            if c == 0:
                side.encode_sint(params.mean)
            table = params.table()
            entropy.encode_array(main, table, syms)
            channel_bits.append(ChannelBits(q.branch, p * n2 + c, p, c,
                                            float(entropy.symbol_bits(syms, table).sum()), syms.size))
    return side.finish(), main.finish(), channel_bits


def _stage(image: PlanarImage, cfg: CodecConfig) -> dict[str, QuantizedLatent]:
    if image.space is not ColorSpace.SRGB:
        raise ValueError(f"encode_image expects an sRGB image, got {image.space.value}")
    out = {}
    for branch, planes in to_branches(image.as_float64(), cfg.space).items():
        latent = analysis(planes, cfg.block, branch)
        if branch == "chroma":
            drop = np.setdiff1d(np.arange(cfg.block ** 2), chroma_channel_mask(cfg.chroma_channels, cfg.block))
            latent.coeffs[:, drop] = 0.0
        out[branch] = quantize(latent, branch_step(cfg, branch))
    return out


def quantized_latents(image: PlanarImage, cfg: CodecConfig) -> dict[str, QuantizedLatent]:
    """Encoder-side quantized latents per branch (what the decoder will see)."""
    return _stage(image, cfg)


def encode_image(image: PlanarImage, cfg: CodecConfig) -> Bitstream:
    """Encode an sRGB image; the result carries an ``EncodeTrace``."""
    latents = _stage(image, cfg)
    names = DUAL_COMPONENTS if cfg.dual else SINGLE_COMPONENTS
    payloads, channels = [], []
    for branch in branch_names(cfg):
        side, main, bits = _encode_branch(latents[branch], cfg, send_step=cfg.operating_point == 0)
        payloads += [side, main]
        channels += bits
    components = list(enumerate(payloads))
    trace = EncodeTrace(
        width=image.width,
        height=image.height,
        component_bytes={name: len(p) for name, p in zip(names, payloads)},
        channels=channels,
        config=cfg.describe(),
    )
    return Bitstream(cfg.space, cfg.block, cfg.chroma_channels, cfg.operating_point,
                     image.width, image.height, components, trace)


def _finish(dec: entropy.RangeDecoder, name: str) -> None:
    if dec.consumed != len(dec.data):
        raise BitstreamError(f"{name}: decoded {dec.consumed} of {len(dec.data)} bytes")


def _decode_branch(bs: Bitstream, branch: str, side_data: bytes, main_data: bytes,
                   names: tuple[str, str], step: float | None, cfg: CodecConfig) -> QuantizedLatent:
    n = bs.block
    hb, wb = -(-bs.height // n), -(-bs.width // n)
    nplanes = 3 if branch == "rgb" else (1 if branch == "luma" else 2)
    try:
        side = entropy.RangeDecoder(side_data)
        if step is None:
            step = struct.unpack(">f", struct.pack(">I", side.decode_bits(32)))[0]
            if not step > 0 or not math.isfinite(step):
                raise BitstreamError(f"{names[0]}: invalid custom step {step}")
        stable = scale_table()
        params = []
        for _ in range(nplanes):
            row = []
            for c in kept_channels(cfg, branch):
                idx = entropy.decode_symbol(side, stable)
                row.append((c, ChannelParams(idx, side.decode_sint() if c == 0 else 0)))
            params.append(row)
        _finish(side, names[0])

        main = entropy.RangeDecoder(main_data)
        symbols = np.zeros((nplanes, n * n, hb, wb), dtype=np.int64)
        for p, row in enumerate(params):
            for c, prm in row:
                symbols[p, c] = entropy.decode_array(main, prm.table(), hb * wb).reshape(hb, wb)
        _finish(main, names[1])
    except BitstreamError:
        raise
    except ValueError as exc:
        raise BitstreamError(f"{branch} branch: {exc}") from exc
    return QuantizedLatent(branch, symbols, step, n, bs.height, bs.width)


def decode_latents(bs: Bitstream) -> dict[str, QuantizedLatent]:
    """Entropy-decode every branch of a stream."""
    if bs.space not in SPACE_IDS:
        raise BitstreamError(f"unknown space {bs.space!r}")
    try:
        cfg = bs.config()
    except ValueError as exc:
        raise BitstreamError(f"invalid configuration in header: {exc}") from exc
    names = bs.component_names
    ids = [cid for cid, _ in bs.components]
    if ids != list(range(len(names))):
        raise BitstreamError(f"expected components {list(range(len(names)))}, found {ids}")
    if bs.width < 1 or bs.height < 1:
        raise BitstreamError("empty image dimensions")
    out = {}
    for i, branch in enumerate(branch_names(cfg)):
        step = None if bs.operating_point == 0 else branch_step(cfg, branch)
        out[branch] = _decode_branch(bs, branch, bs.components[2 * i][1], bs.components[2 * i + 1][1],
                                     names[2 * i:2 * i + 2], step, cfg)
    return out


def reconstruct(latents: dict[str, LatentTensor], space: str) -> PlanarImage:
    planes = {b: synthesis(lat) for b, lat in latents.items()}
    return PlanarImage(from_branches(planes, space), ColorSpace.SRGB)


def decode_image(bs: Bitstream | bytes) -> PlanarImage:
    if not isinstance(bs, Bitstream):
        bs = Bitstream.from_bytes(bs)
    q = decode_latents(bs)
    return reconstruct({b: ql.dequantize() for b, ql in q.items()}, bs.space)
