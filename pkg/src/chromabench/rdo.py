"""Composite rate-distortion loss and its Lagrangian operating points.

    L = R + l1 * MSE + l2 * (1 - MS-SSIM) + l3 * dE00

R is in bits per pixel. MSE uses [0, 1] samples (the same scale as PSNR with
peak 1); rate counts actual coded bits rather than a differentiable proxy.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from . import metrics
from .imageio import PlanarImage


@dataclass(frozen=True)
class LagrangianConfig:
    lambda1: float
    lambda2: float
    lambda3: float
    label: str = ""

    def __post_init__(self):
        lams = (self.lambda1, self.lambda2, self.lambda3)
        if any(v < 0 for v in lams):
            raise ValueError("Lagrangian multipliers must be non-negative")
        if not any(v > 0 for v in lams):
            raise ValueError("at least one Lagrangian multiplier must be positive")

    def scaled(self, k: float) -> "LagrangianConfig":
        return LagrangianConfig(self.lambda1 * k, self.lambda2 * k, self.lambda3 * k, self.label)


@dataclass(frozen=True)
class LossBreakdown:
    rate_bpp: float
    mse: float
    msssim: float
    ciede2000: float
    mse_term: float
    msssim_term: float
    ciede_term: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


_LAMBDA1 = (0.001, 0.005, 0.01, 0.02)
_LAMBDA2 = (0.01, 0.12, 2.4, 4.8)
_LAMBDA3 = (0.024, 0.12, 0.24, 0.48)


def lagrangian_presets() -> list[LagrangianConfig]:
    """The four operating points q1..q4, lowest rate first."""
    return [
        LagrangianConfig(l1, l2, l3, f"q{i + 1}")
        for i, (l1, l2, l3) in enumerate(zip(_LAMBDA1, _LAMBDA2, _LAMBDA3))
    ]


def combine(rate_bpp: float, mse: float, msssim: float, ciede: float,
            cfg: LagrangianConfig) -> LossBreakdown:
    """Assemble the loss from raw metric values."""
    mse_term = cfg.lambda1 * mse
    msssim_term = cfg.lambda2 * (1.0 - msssim)
    ciede_term = cfg.lambda3 * ciede
    return LossBreakdown(
        rate_bpp=rate_bpp,
        mse=mse,
        msssim=msssim,
        ciede2000=ciede,
        mse_term=mse_term,
        msssim_term=msssim_term,
        ciede_term=ciede_term,
        total=rate_bpp + mse_term + msssim_term + ciede_term,
    )


def evaluate_loss(x: PlanarImage, xhat: PlanarImage, total_bits: float,
                  cfg: LagrangianConfig) -> LossBreakdown:
    if x.shape != xhat.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {xhat.shape}")
    if total_bits < 0:
        raise ValueError("total_bits must be non-negative")
    rate = total_bits / (x.height * x.width)
    return combine(rate, metrics.mse(x, xhat), metrics.ms_ssim(x, xhat), metrics.ciede2000(x, xhat), cfg)
