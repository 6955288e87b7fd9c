"""Distortion metrics: PSNR, MS-SSIM and CIEDE2000.

MSE and MS-SSIM operate on gamma-encoded sRGB samples in [0, 1]; CIEDE2000
converts to CIELAB (D65) first. Means use numpy's pairwise summation over
C-contiguous arrays, so results do not depend on threading.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .color import srgb_to_lab_array
from .imageio import ColorSpace, PlanarImage

PSNR_CAP_DB = 100.0
MSSSIM_DB_CAP = 100.0
CIEDE_OFFSET = 5.0

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class MsSsimConfig:
    scales: int = 5
    weights: tuple = MSSSIM_WEIGHTS
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.scales < 1:
            raise ValueError("scales must be >= 1")
        if len(self.weights) != self.scales:
            raise ValueError(f"need {self.scales} weights, got {len(self.weights)}")
        # the standard five weights sum to 1.0001
        if abs(sum(self.weights) - 1.0) > 1e-3:
            raise ValueError("MS-SSIM weights must sum to 1")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def reduced(self, min_dim: int) -> "MsSsimConfig":
        """Drop coarse scales that would not fit the window; weights renormalized."""
        if min_dim < self.window:
            raise ValueError(f"image too small for MS-SSIM: min dimension {min_dim} < window {self.window}")
        scales = self.scales
        while scales > 1 and self.window * 2 ** (scales - 1) > min_dim:
            scales -= 1
        if scales == self.scales:
            return self
        warnings.warn(f"MS-SSIM: {min_dim}px image supports only {scales} of {self.scales} scales", stacklevel=3)
        w = np.asarray(self.weights[:scales], dtype=np.float64)
        return MsSsimConfig(scales, tuple((w / w.sum()).tolist()), self.window, self.sigma,
                            self.k1, self.k2, self.dynamic_range)


@dataclass
class MetricReport:
    psnr_db: float
    msssim: float
    msssim_db: float
    ciede2000: float
    ciede_quality: float
    psnr_per_channel: tuple = field(default=(0.0, 0.0, 0.0))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["psnr_per_channel"] = list(self.psnr_per_channel)
        return d


def _check_pair(x: PlanarImage, y: PlanarImage) -> None:
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def _rgb_pair(x: PlanarImage, y: PlanarImage):
    _check_pair(x, y)
    for im in (x, y):
        if im.space is not ColorSpace.SRGB:
            raise ValueError(f"expected sRGB images, got {im.space.value}")
    return x.as_float64(), y.as_float64()


def mse(x: PlanarImage, y: PlanarImage) -> float:
    a, b = _rgb_pair(x, y)
    return float(np.mean((a - b) ** 2))


def _psnr_from_mse(m: float, peak: float) -> float:
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / m)


def psnr(x: PlanarImage, y: PlanarImage, peak: float = 1.0) -> float:
    """PSNR over all 3*H*W samples; ``inf`` for identical inputs."""
    return _psnr_from_mse(mse(x, y), peak)


def psnr_per_channel(x: PlanarImage, y: PlanarImage, peak: float = 1.0) -> tuple:
    a, b = _rgb_pair(x, y)
    return tuple(_psnr_from_mse(float(np.mean((a[c] - b[c]) ** 2)), peak) for c in range(3))


def cap_db(value: float, cap: float = PSNR_CAP_DB) -> float:
    return min(value, cap)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    half = len(win) // 2
    out = correlate1d(img, win, axis=0, mode="constant")
    out = correlate1d(out, win, axis=1, mode="constant")
    h, w = img.shape
    return out[half:h - (len(win) - 1 - half), half:w - (len(win) - 1 - half)]


def _ssim_maps(a: np.ndarray, b: np.ndarray, win: np.ndarray, c1: float, c2: float):
    mu_a = _filter_valid(a, win)
    mu_b = _filter_valid(b, win)
    s_aa = _filter_valid(a * a, win) - mu_a ** 2
    s_bb = _filter_valid(b * b, win) - mu_b ** 2
    s_ab = _filter_valid(a * b, win) - mu_a * mu_b
    cs = (2.0 * s_ab + c2) / (s_aa + s_bb + c2)
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)
    return lum, cs


def _downsample(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    img = img[:h, :w]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def ms_ssim_plane(a: np.ndarray, b: np.ndarray, cfg: MsSsimConfig | None = None) -> float:
    """Single-plane MS-SSIM: contrast-structure at every scale, luminance at the coarsest."""
    cfg = (cfg or MsSsimConfig()).reduced(min(a.shape))
    win = _gaussian_window(cfg.window, cfg.sigma)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    value = 1.0
    for j, w in enumerate(cfg.weights):
        lum, cs = _ssim_maps(a, b, win, cfg.c1, cfg.c2)
        if j == cfg.scales - 1:
            term = float(np.mean(lum * cs))
        else:
            term = float(np.mean(cs))
            a, b = _downsample(a), _downsample(b)
        # negative correlation is clipped so fractional powers stay real
        value *= max(term, 0.0) ** w
    return min(value, 1.0)


def ms_ssim(x: PlanarImage, y: PlanarImage, cfg: MsSsimConfig | None = None) -> float:
    """Mean of per-channel MS-SSIM with equal RGB weights."""
    a, b = _rgb_pair(x, y)
    if np.array_equal(a, b):
        return 1.0
    return float(np.mean([ms_ssim_plane(a[c], b[c], cfg) for c in range(3)]))


def ms_ssim_db(v: float) -> float:
    """-10*log10(1 - v), capped at 100 dB for v == 1."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"MS-SSIM value {v} outside [0, 1]")
    if v >= 1.0:
        return MSSSIM_DB_CAP
    return min(-10.0 * math.log10(1.0 - v), MSSSIM_DB_CAP)


def ciede2000_lab(lab1: np.ndarray, lab2: np.ndarray, kl: float = 1.0, kc: float = 1.0,
                  kh: float = 1.0) -> np.ndarray:
    """Per-sample CIEDE2000 between two (3, ...) CIELAB arrays."""
    L1, a1, b1 = np.asarray(lab1, dtype=np.float64)
    L2, a2, b2 = np.asarray(lab2, dtype=np.float64)

    c_bar = 0.5 * (np.hypot(a1, b1) + np.hypot(a2, b2))
    c7 = c_bar ** 7
    g = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0 ** 7)))
    a1p, a2p = (1.0 + g) * a1, (1.0 + g) * a2
    c1p, c2p = np.hypot(a1p, b1), np.hypot(a2p, b2)
    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    # hue is undefined for neutral colors
    h1p = np.where((a1p == 0) & (b1 == 0), 0.0, h1p)
    h2p = np.where((a2p == 0) & (b2 == 0), 0.0, h2p)

    dLp = L2 - L1
    dCp = c2p - c1p
    cprod = c1p * c2p
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, np.where(dh < -180.0, dh + 360.0, dh))
    dh = np.where(cprod == 0, 0.0, dh)
    dHp = 2.0 * np.sqrt(cprod) * np.sin(np.radians(dh) / 2.0)

    Lbp = 0.5 * (L1 + L2)
    Cbp = 0.5 * (c1p + c2p)
    hsum = h1p + h2p
    hbar = np.where(np.abs(h1p - h2p) <= 180.0, 0.5 * hsum,
                    np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)))
    hbar = np.where(cprod == 0, hsum, hbar)

    t = (1.0 - 0.17 * np.cos(np.radians(hbar - 30.0)) + 0.24 * np.cos(np.radians(2.0 * hbar))
         + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0)) - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0)))
    d_theta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cb7 = Cbp ** 7
    rc = 2.0 * np.sqrt(cb7 / (cb7 + 25.0 ** 7))
    l50 = (Lbp - 50.0) ** 2
    sl = 1.0 + 0.015 * l50 / np.sqrt(20.0 + l50)
    sc = 1.0 + 0.045 * Cbp
    sh = 1.0 + 0.015 * Cbp * t
    rt = -np.sin(np.radians(2.0 * d_theta)) * rc

    tl = dLp / (kl * sl)
    tc = dCp / (kc * sc)
    th = dHp / (kh * sh)
    return np.sqrt(tl ** 2 + tc ** 2 + th ** 2 + rt * tc * th)


def _as_lab(image: PlanarImage) -> np.ndarray:
    if image.space is ColorSpace.LAB:
        return image.as_float64()
    if image.space is ColorSpace.SRGB:
        return srgb_to_lab_array(image.as_float64())
    raise ValueError(f"CIEDE2000 needs sRGB or LAB input, got {image.space.value}")


def ciede2000(x: PlanarImage, y: PlanarImage) -> float:
    """Arithmetic mean of per-pixel CIEDE2000 (kL = kC = kH = 1)."""
    _check_pair(x, y)
    return float(np.mean(ciede2000_lab(_as_lab(x), _as_lab(y))))


def ciede_quality(d: float) -> float:
    return CIEDE_OFFSET - d


def evaluate(x: PlanarImage, y: PlanarImage, cfg: MsSsimConfig | None = None) -> MetricReport:
    """All report metrics for an (original, reconstruction) pair."""
    p = cap_db(psnr(x, y))
    s = ms_ssim(x, y, cfg)
    d = ciede2000(x, y)
    return MetricReport(
        psnr_db=p,
        msssim=s,
        msssim_db=ms_ssim_db(s),
        ciede2000=d,
        ciede_quality=ciede_quality(d),
        psnr_per_channel=tuple(cap_db(v) for v in psnr_per_channel(x, y)),
    )
