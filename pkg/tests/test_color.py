import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromabench import color
from chromabench.color import (
    D65,
    YUV_FORWARD,
    YUV_INVERSE,
    lab_to_srgb_array,
    linear_to_srgb_array,
    rgb_to_yuv_array,
    srgb_to_lab_array,
    srgb_to_linear_array,
    yuv_to_rgb_array,
)
from chromabench.imageio import ColorSpace, PlanarImage

unit = st.floats(0.0, 1.0, allow_nan=False)


def px(*rgb):
    return np.array(rgb, dtype=np.float64).reshape(3, 1)


def test_transfer_breakpoints():
    assert srgb_to_linear_array(0.0) == 0.0
    assert srgb_to_linear_array(1.0) == pytest.approx(1.0, abs=1e-15)
    assert srgb_to_linear_array(0.04045) == pytest.approx(0.04045 / 12.92, abs=1e-15)
    assert linear_to_srgb_array(0.0) == 0.0
    assert linear_to_srgb_array(0.0031308) == pytest.approx(0.04045, abs=1e-7)


def test_transfer_inverse(rng):
    s = rng.random(1000)
    assert np.abs(linear_to_srgb_array(srgb_to_linear_array(s)) - s).max() < 1e-6


def test_yuv_matrix_structure():
    np.testing.assert_allclose(YUV_FORWARD.matrix[1:].sum(axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(YUV_FORWARD.matrix @ YUV_INVERSE.matrix, np.eye(3), atol=1e-6)
    np.testing.assert_allclose(YUV_INVERSE.matrix, np.linalg.inv(YUV_FORWARD.matrix), atol=1e-12)


def test_yuv_examples():
    np.testing.assert_allclose(rgb_to_yuv_array(px(1, 1, 1)).ravel(), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(rgb_to_yuv_array(px(0.3, 0.3, 0.3)).ravel(), [0.3, 0, 0], atol=1e-15)
    red = rgb_to_yuv_array(px(1, 0, 0)).ravel()
    # hand arithmetic: Y = Kr, U = -Kr / 1.8556, V = (1 - Kr) / 1.5748
    np.testing.assert_allclose(red, [0.2126, -0.2126 / 1.8556, 0.7874 / 1.5748], atol=1e-12)
    assert red[2] == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(yuv_to_rgb_array(px(1, 0, 0)).ravel(), [1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(yuv_to_rgb_array(px(0.2126, -0.11457, 0.5)).ravel(), [1, 0, 0], atol=1e-5)


def test_lab_reference_points():
    np.testing.assert_allclose(srgb_to_lab_array(px(1, 1, 1)).ravel(), [100, 0, 0], atol=1e-9)
    np.testing.assert_allclose(srgb_to_lab_array(px(0, 0, 0)).ravel(), [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(lab_to_srgb_array(px(100, 0, 0)).ravel(), [1, 1, 1], atol=1e-4)


def test_lab_mid_gray_closed_form():
    # independent two-stage evaluation: sRGB decode, then the cube-root branch of L*
    y = ((0.5 + 0.055) / 1.055) ** 2.4
    expected_l = 116.0 * y ** (1.0 / 3.0) - 16.0
    lab = srgb_to_lab_array(px(0.5, 0.5, 0.5)).ravel()
    assert lab[0] == pytest.approx(expected_l, abs=1e-9)
    assert abs(lab[1]) < 1e-9 and abs(lab[2]) < 1e-9


def test_lab_against_skimage(rng):
    from skimage.color import rgb2lab

    rgb = rng.random((20, 20, 3))
    ours = srgb_to_lab_array(rgb.transpose(2, 0, 1)).transpose(1, 2, 0)
    # skimage uses rounded primaries and white; agreement to a few hundredths is expected
    assert np.abs(ours - rgb2lab(rgb, illuminant="D65")).max() < 0.05


def test_lab_out_of_gamut_clamped():
    rgb = lab_to_srgb_array(px(50, 200, 0)).ravel()
    assert np.all((rgb >= 0) & (rgb <= 1))


def test_lab_f_continuity():
    eps = D65.epsilon
    lin = (D65.kappa * eps + 16.0) / 116.0
    assert np.cbrt(eps) == pytest.approx(lin, abs=1e-12)
    assert D65.f(np.nextafter(eps, 1.0)) - D65.f(eps) < 1e-9


def test_white_derived_from_primaries():
    np.testing.assert_allclose(D65.white, [0.95045593, 1.0, 1.08905775], atol=1e-6)


@pytest.mark.parametrize("space", [ColorSpace.LINEAR_RGB, ColorSpace.YUV, ColorSpace.LAB])
def test_image_roundtrip(rng, space):
    img = PlanarImage(rng.random((3, 8, 9)))
    out = color.convert(img, space)
    assert out.space is space
    back = color.to_srgb(out)
    assert np.abs(back.as_float64() - img.as_float64()).max() < 1e-4


def test_wrong_tag_rejected():
    lab = PlanarImage(np.zeros((3, 1, 1)), ColorSpace.LAB)
    for fn in (color.rgb_to_yuv, color.rgb_to_lab, color.srgb_to_linear, color.yuv_to_rgb, color.linear_to_srgb):
        with pytest.raises(ValueError):
            fn(lab)


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit)
def test_roundtrips_property(r, g, b):
    x = px(r, g, b)
    assert np.abs(yuv_to_rgb_array(rgb_to_yuv_array(x)) - x).max() < 1e-9
    assert np.abs(lab_to_srgb_array(srgb_to_lab_array(x)) - x).max() < 1e-6


@settings(max_examples=100, deadline=None)
@given(unit, unit)
def test_neutral_axis_and_monotonicity(g1, g2):
    yuv = rgb_to_yuv_array(px(g1, g1, g1)).ravel()
    lab = srgb_to_lab_array(px(g1, g1, g1)).ravel()
    assert abs(yuv[1]) < 1e-7 and abs(yuv[2]) < 1e-7
    assert abs(lab[1]) < 1e-3 and abs(lab[2]) < 1e-3
    if g1 < g2:
        assert rgb_to_yuv_array(px(g2, g2, g2))[0, 0] > yuv[0]
        assert srgb_to_lab_array(px(g2, g2, g2))[0, 0] > lab[0]


def test_describe_records_choices():
    d = color.describe()
    assert "BT.709" in d["yuv"]["standard"]
    assert d["lab"]["white"] == "D65"
