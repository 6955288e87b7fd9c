"""Conversions between sRGB, linear RGB, YUV and CIELAB.

Array-level helpers take and return float64 arrays whose leading axis holds
the three channels; the ``PlanarImage`` wrappers check tags and re-wrap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio import ColorSpace, PlanarImage


@dataclass(frozen=True)
class ColorMatrix:
    """Affine 3x3 transform: out = matrix @ in + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, planes: np.ndarray) -> np.ndarray:
        planes = np.asarray(planes, dtype=np.float64)
        out = np.tensordot(self.matrix, planes, axes=([1], [0]))
        return out + self.offset.reshape((3,) + (1,) * (planes.ndim - 1))

    def inverse(self) -> "ColorMatrix":
        inv = np.linalg.inv(self.matrix)
        return ColorMatrix(inv, -inv @ self.offset)


# Full-range BT.709 analog YUV applied to gamma-encoded samples.
KR, KB = 0.2126, 0.0722
KG = 1.0 - KR - KB
U_SCALE = 2.0 * (1.0 - KB)  # 1.8556
V_SCALE = 2.0 * (1.0 - KR)  # 1.5748

YUV_FORWARD = ColorMatrix(
    np.array([
        [KR, KG, KB],
        [-KR / U_SCALE, -KG / U_SCALE, (1.0 - KB) / U_SCALE],
        [(1.0 - KR) / V_SCALE, -KG / V_SCALE, -KB / V_SCALE],
    ]),
    np.zeros(3),
)
# Closed-form inverse; avoids the small error of a numerical inversion.
YUV_INVERSE = ColorMatrix(
    np.array([
        [1.0, 0.0, V_SCALE],
        [1.0, -KB * U_SCALE / KG, -KR * V_SCALE / KG],
        [1.0, U_SCALE, 0.0],
    ]),
    np.zeros(3),
)


def _primaries_matrix(xy_r, xy_g, xy_b, xy_w) -> np.ndarray:
    """RGB->XYZ matrix from chromaticities, normalized so white has Y = 1."""
    def xyz(xy):
        x, y = xy
        return np.array([x / y, 1.0, (1.0 - x - y) / y])

    prim = np.column_stack([xyz(xy_r), xyz(xy_g), xyz(xy_b)])
    scale = np.linalg.solve(prim, xyz(xy_w))
    return prim * scale


@dataclass(frozen=True)
class LabContext:
    white: np.ndarray
    rgb_to_xyz: np.ndarray
    epsilon: float = 216.0 / 24389.0
    kappa: float = 24389.0 / 27.0

    @property
    def xyz_to_rgb(self) -> np.ndarray:
        return np.linalg.inv(self.rgb_to_xyz)

    def f(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return np.where(t > self.epsilon, np.cbrt(t), (self.kappa * t + 16.0) / 116.0)

    def f_inv(self, ft: np.ndarray) -> np.ndarray:
        ft = np.asarray(ft, dtype=np.float64)
        cube = ft ** 3
        return np.where(cube > self.epsilon, cube, (116.0 * ft - 16.0) / self.kappa)


_SRGB_TO_XYZ = _primaries_matrix((0.64, 0.33), (0.30, 0.60), (0.15, 0.06), (0.3127, 0.3290))
# White is the image of RGB (1, 1, 1), so sRGB white lands exactly on a = b = 0.
D65 = LabContext(white=_SRGB_TO_XYZ.sum(axis=1), rgb_to_xyz=_SRGB_TO_XYZ)


def srgb_to_linear_array(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    return np.where(s <= 0.04045, s / 12.92, ((np.maximum(s, 0.04045) + 0.055) / 1.055) ** 2.4)


def linear_to_srgb_array(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * np.maximum(c, 0.0031308) ** (1.0 / 2.4) - 0.055)


def srgb_to_lab_array(rgb: np.ndarray, ctx: LabContext = D65) -> np.ndarray:
    lin = srgb_to_linear_array(rgb)
    xyz = np.tensordot(ctx.rgb_to_xyz, lin, axes=([1], [0]))
    shape = (3,) + (1,) * (xyz.ndim - 1)
    fx, fy, fz = ctx.f(xyz / ctx.white.reshape(shape))
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)])


def lab_to_srgb_array(lab: np.ndarray, ctx: LabContext = D65, clamp: bool = True) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    L, a, b = lab
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0
    # Y uses the L*-domain branch test so the inverse is exact on both sides of the knee
    y = np.where(L > ctx.kappa * ctx.epsilon, fy ** 3, L / ctx.kappa)
    xyz = np.stack([ctx.f_inv(fx), y, ctx.f_inv(fz)])
    xyz = xyz * ctx.white.reshape((3,) + (1,) * (xyz.ndim - 1))
    lin = np.tensordot(ctx.xyz_to_rgb, xyz, axes=([1], [0]))
    if clamp:
        lin = np.clip(lin, 0.0, 1.0)
    return linear_to_srgb_array(lin)


def rgb_to_yuv_array(rgb: np.ndarray) -> np.ndarray:
    return YUV_FORWARD.apply(rgb)


def yuv_to_rgb_array(yuv: np.ndarray) -> np.ndarray:
    return YUV_INVERSE.apply(yuv)


def _require(image: PlanarImage, space: ColorSpace, op: str) -> None:
    if image.space is not space:
        raise ValueError(f"{op} expects a {space.value} image, got {image.space.value}")


def srgb_to_linear(image: PlanarImage) -> PlanarImage:
    _require(image, ColorSpace.SRGB, "srgb_to_linear")
    return PlanarImage(srgb_to_linear_array(image.as_float64()), ColorSpace.LINEAR_RGB)


def linear_to_srgb(image: PlanarImage) -> PlanarImage:
    _require(image, ColorSpace.LINEAR_RGB, "linear_to_srgb")
    return PlanarImage(linear_to_srgb_array(image.as_float64()), ColorSpace.SRGB)


def rgb_to_yuv(image: PlanarImage) -> PlanarImage:
    _require(image, ColorSpace.SRGB, "rgb_to_yuv")
    return PlanarImage(rgb_to_yuv_array(image.as_float64()), ColorSpace.YUV)


def yuv_to_rgb(image: PlanarImage) -> PlanarImage:
    _require(image, ColorSpace.YUV, "yuv_to_rgb")
    return PlanarImage(yuv_to_rgb_array(image.as_float64()), ColorSpace.SRGB)


def rgb_to_lab(image: PlanarImage) -> PlanarImage:
    _require(image, ColorSpace.SRGB, "rgb_to_lab")
    return PlanarImage(srgb_to_lab_array(image.as_float64()), ColorSpace.LAB)


def lab_to_rgb(image: PlanarImage) -> PlanarImage:
    """Inverse LAB chain; out-of-gamut values are clamped in RGB only."""
    _require(image, ColorSpace.LAB, "lab_to_rgb")
    return PlanarImage(lab_to_srgb_array(image.as_float64()), ColorSpace.SRGB)


def to_srgb(image: PlanarImage) -> PlanarImage:
    """Convert any supported space back to sRGB."""
    if image.space is ColorSpace.SRGB:
        return image
    return {
        ColorSpace.LINEAR_RGB: linear_to_srgb,
        ColorSpace.YUV: yuv_to_rgb,
        ColorSpace.LAB: lab_to_rgb,
    }[image.space](image)


def convert(image: PlanarImage, space: ColorSpace) -> PlanarImage:
    """Convert an image to ``space`` going through sRGB when needed."""
    space = ColorSpace(space)
    if image.space is space:
        return image
    srgb = to_srgb(image)
    if space is ColorSpace.SRGB:
        return srgb
    return {
        ColorSpace.LINEAR_RGB: srgb_to_linear,
        ColorSpace.YUV: rgb_to_yuv,
        ColorSpace.LAB: rgb_to_lab,
    }[space](srgb)


def describe() -> dict:
    """Resolved color constants, embedded in report metadata."""
    return {
        "yuv": {
            "standard": "BT.709 full-range analog, on gamma-encoded sRGB",
            "forward": YUV_FORWARD.matrix.tolist(),
            "inverse": YUV_INVERSE.matrix.tolist(),
        },
        "lab": {
            "white": "D65",
            "white_xyz": D65.white.tolist(),
            "rgb_to_xyz": D65.rgb_to_xyz.tolist(),
            "epsilon": "216/24389",
            "kappa": "24389/27",
        },
    }
