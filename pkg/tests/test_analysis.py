import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromabench import codec
from chromabench.analysis import (
    LayerSpec,
    box_lowpass,
    channel_bit_allocation,
    complexity,
    impulse_mosaic,
    impulse_response,
    mosaic_channels,
    pearson,
    single_channel_reconstruction,
)
from chromabench.codec import CodecConfig, EncodeTrace, ChannelBits, analysis, encode_image, to_branches
from chromabench.color import rgb_to_yuv_array, yuv_to_rgb_array
from chromabench.imageio import PlanarImage


def fake_trace(bits):
    chans = [ChannelBits(b, ch, ch // 64, ch % 64, v, 10) for (b, ch), v in bits.items()]
    return EncodeTrace(8, 8, {}, chans, CodecConfig())


# --- ranking -----------------------------------------------------------------


def test_ranking_tie_break_and_total():
    rep = channel_bit_allocation(fake_trace({
        ("chroma", 3): 5.0, ("luma", 7): 5.0, ("luma", 2): 5.0, ("luma", 0): 9.0, ("chroma", 0): 1.0,
    }))
    assert [(e.branch, e.channel) for e in rep.entries] == [
        ("luma", 0), ("luma", 2), ("luma", 7), ("chroma", 3), ("chroma", 0)]
    assert [e.rank for e in rep.entries] == [1, 2, 3, 4, 5]
    assert rep.total_bits == 25.0
    assert rep.to_csv().splitlines()[0] == "branch,channel,bits,rank"
    assert rep.to_csv().splitlines()[1] == "luma,0,9.000000,1"


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        channel_bit_allocation(fake_trace({}))


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.tuples(st.sampled_from(["luma", "chroma"]), st.integers(0, 127)),
                       st.sampled_from([0.0, 1.0, 2.5, 7.0]), min_size=1, max_size=40))
def test_ranking_is_sorted_permutation(bits):
    rep = channel_bit_allocation(fake_trace(bits))
    assert sorted((e.branch, e.channel) for e in rep.entries) == sorted(bits)
    values = [e.bits for e in rep.entries]
    assert all(a >= b for a, b in zip(values, values[1:]))
    # stable under input order
    rev = channel_bit_allocation(fake_trace(dict(reversed(list(bits.items())))))
    assert rev.entries == rep.entries


def test_total_matches_independent_bit_count(small_natural):
    x = small_natural[0]
    cfg = CodecConfig("lab", 3, 16)
    rep = channel_bit_allocation(encode_image(x, cfg).trace)
    # oracle: recompute -log2 p over the quantized symbols with freshly fitted channel models
    total = 0.0
    for branch, q in codec.quantized_latents(x, cfg).items():
        for p in range(q.symbols.shape[0]):
            for c in codec.kept_channels(cfg, branch):
                syms = q.symbols[p, c].ravel()
                t = codec.fit_channel(syms, dc=(c == 0)).table()
                assert syms.min() >= t.lo and syms.max() <= t.hi  # no escapes at this op point
                total += -np.log2(t.counts[syms - t.lo] / 65536.0).sum()
    assert rep.total_bits == pytest.approx(total, rel=1e-6)


def test_constant_image_dc_first():
    rep = channel_bit_allocation(encode_image(PlanarImage(np.full((3, 32, 32), 0.3)), CodecConfig()).trace)
    assert (rep.entries[0].branch, rep.entries[0].channel) == ("luma", 0)
    # the block mean travels as side info, so every channel is at the same floor cost
    assert max(e.bits for e in rep.entries) - min(e.bits for e in rep.entries) < 1e-9


def test_horizontal_ramp_ranks_horizontal_frequency_first():
    ramp = PlanarImage(np.tile(np.linspace(0, 1, 64), (3, 64, 1)))
    rep = channel_bit_allocation(encode_image(ramp, CodecConfig("yuv", 4)).trace)
    rank = {(e.branch, e.channel): e.rank for e in rep.entries}
    assert rank[("luma", 1)] < rank[("luma", 8)]
    # closed form: a ramp along columns has no energy in pure vertical frequencies
    lat = analysis(ramp.as_float64()[:1], 8)
    assert np.abs(lat.coeffs[0, 8]).max() < 1e-12
    assert np.abs(lat.coeffs[0, 1]).min() > 0.1


# --- impulses ----------------------------------------------------------------


def test_dc_impulse_is_flat():
    p = impulse_response(CodecConfig(), "luma", 0)
    np.testing.assert_allclose(p.response, 1 / 8, atol=1e-12)
    assert np.ptp(p.rgb) < 1e-9


def test_basis_impulse_matches_closed_form():
    p = impulse_response(CodecConfig(), "luma", 1, amplitude=2.0)
    j = np.arange(8)
    cols = 2.0 * math.sqrt(2 / 8) * np.cos(np.pi * (2 * j + 1) / 16) / math.sqrt(8)
    np.testing.assert_allclose(p.response[0], np.tile(cols, (8, 1)), atol=1e-6)


def test_yuv_chroma_impulse_is_colored_with_neutral_luma():
    p = impulse_response(CodecConfig("yuv"), "chroma", 0)  # DC of the U plane
    # oracle: neutral Y, display-biased U at +0.5, V zero, then the gamut clip
    expected = np.clip(yuv_to_rgb_array(np.array([0.5, 0.5, 0.0]).reshape(3, 1, 1)), 0, 1)
    np.testing.assert_allclose(p.rgb, np.broadcast_to(expected, p.rgb.shape), atol=1e-9)
    r, g, b = p.rgb[:, 0, 0]
    assert b > 0.9 and r < b and g < b  # positive U leans blue
    q = impulse_response(CodecConfig("yuv"), "chroma", 0, amplitude=-1.0)
    assert q.rgb[2, 0, 0] < q.rgb[0, 0, 0]  # negative U leans yellow


def test_impulses_are_orthogonal():
    cfg = CodecConfig("lab", 4, 16)
    chans = [c for c in codec.kept_channels(cfg, "luma")]
    resp = np.array([impulse_response(cfg, "luma", c).response.ravel() for c in chans])
    gram = resp @ resp.T
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-6
    np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-9)


def test_impulse_channel_validation():
    with pytest.raises(ValueError):
        impulse_response(CodecConfig(), "luma", 64)
    with pytest.raises(ValueError):
        impulse_response(CodecConfig(), "rgb", 0)
    with pytest.raises(ValueError):
        impulse_response(CodecConfig("yuv", 4, 8), "chroma", 63)


@pytest.mark.parametrize("space", ["rgb", "yuv", "lab"])
def test_mosaic_has_48_patches(space):
    cfg = CodecConfig(space, 4)
    mosaic, patches = impulse_mosaic(cfg)
    assert len(patches) == 48
    assert mosaic.shape == (3, 3 * 16, 16 * 16)
    assert mosaic.min() >= 0 and mosaic.max() <= 1
    if space != "rgb":
        assert [p.branch for p in patches] == ["luma"] * 32 + ["chroma"] * 16


def test_mosaic_follows_report(small_natural):
    cfg = CodecConfig("yuv", 4)
    rep = channel_bit_allocation(encode_image(small_natural[0], cfg).trace)
    picks = mosaic_channels(cfg, rep)
    assert picks[:32] == [("luma", e.channel) for e in rep.top("luma", 32)]
    assert picks[32:] == [("chroma", e.channel) for e in rep.top("chroma", 16)]


def test_patch_upscale_is_nearest_neighbour():
    p = impulse_response(CodecConfig(), "luma", 9)
    d = p.display(16)
    np.testing.assert_array_equal(d[:, ::2, ::2], p.rgb)
    np.testing.assert_array_equal(d[:, 1::2, 1::2], p.rgb)


# --- single-channel reconstruction --------------------------------------------


def _latents(x, cfg):
    planes = to_branches(x.as_float64(), cfg.space)
    return {b: analysis(planes[b], cfg.block, b) for b in codec.branch_names(cfg)}


def test_dc_reconstruction_is_block_means(small_natural):
    cfg = CodecConfig("rgb")
    x = small_natural[0]
    out = single_channel_reconstruction(_latents(x, cfg), cfg, 0)
    np.testing.assert_allclose(out.as_float64(), box_lowpass(x.as_float64(), 8), atol=1e-6)


@pytest.mark.parametrize("space", ["rgb", "yuv", "lab"])
def test_dc_reconstruction_correlates_with_lowpass(natural_corpus, space):
    cfg = CodecConfig(space)
    for x in natural_corpus[:5]:
        out = single_channel_reconstruction(_latents(x, cfg), cfg, 0)
        assert pearson(out.as_float64(), box_lowpass(x.as_float64(), 8)) > 0.9


def test_high_frequency_on_gradient_is_near_zero():
    yy, xx = np.mgrid[0:64, 0:64] / 63.0
    grad = PlanarImage(np.stack([xx, yy, 0.5 * (xx + yy)]))
    cfg = CodecConfig("rgb")
    lat = _latents(grad, cfg)
    hi = single_channel_reconstruction(lat, cfg, 63)
    dc = single_channel_reconstruction(lat, cfg, 0)
    assert np.sum(hi.as_float64() ** 2) < 1e-6 * np.sum(dc.as_float64() ** 2)


def test_branch_isolated_reconstruction_is_gray_elsewhere(small_natural):
    cfg = CodecConfig("yuv")
    out = single_channel_reconstruction(_latents(small_natural[0], cfg), cfg, 0, branch="luma")
    yuv = rgb_to_yuv_array(out.as_float64())
    assert np.abs(yuv[1:]).max() < 1e-6


def test_subband_range():
    cfg = CodecConfig()
    with pytest.raises(ValueError):
        single_channel_reconstruction({}, cfg, 64)


# --- complexity --------------------------------------------------------------


def test_conv_hand_count():
    c = complexity([LayerSpec("conv", 3, 192, 5, 5)])
    assert c.params == 3 * 192 * 25 + 192 == 14592
    assert c.kmacs_per_pixel == pytest.approx(14.4)


def test_degenerate_layer():
    c = complexity([LayerSpec("conv", 1, 1)])
    assert (c.params, c.kmacs_per_pixel * 1000) == (2, 1.0)


def test_downsampled_layer_divides_macs():
    c = complexity([LayerSpec("conv", 192, 192, 5, 5, stride=2, divisor=4)])
    assert c.kmacs_per_pixel * 1000 == pytest.approx(192 * 192 * 25 / 16)


def test_width_doubling_quadruples_macs():
    a = [LayerSpec("conv", 3, 64, 5, 5, 2, 2), LayerSpec("conv", 64, 64, 5, 5, 2, 4),
         LayerSpec("deconv", 64, 64, 5, 5, 2, 2), LayerSpec("deconv", 64, 3, 5, 5, 2, 1)]
    b = [LayerSpec(l.kind, l.cin if l.cin == 3 else 2 * l.cin, l.cout if l.cout == 3 else 2 * l.cout,
                   l.kh, l.kw, l.stride, l.divisor) for l in a]
    ratio = complexity(b).kmacs_per_pixel / complexity(a).kmacs_per_pixel
    assert 3.5 < ratio <= 4.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 64), st.integers(1, 64), st.integers(1, 5), st.integers(1, 16)),
                min_size=2, max_size=8), st.integers(1, 7))
def test_complexity_additive(specs, cut):
    layers = [LayerSpec("conv", a, b, k, k, 1, d) for a, b, k, d in specs]
    cut = min(cut, len(layers) - 1)
    whole, left, right = complexity(layers), complexity(layers[:cut]), complexity(layers[cut:])
    assert whole.params == left.params + right.params
    assert whole.kmacs_per_pixel == pytest.approx(left.kmacs_per_pixel + right.kmacs_per_pixel, rel=1e-12)


def test_layer_validation():
    with pytest.raises(ValueError):
        complexity([])
    with pytest.raises(ValueError):
        LayerSpec("conv", 3, 8, divisor=0)
    with pytest.raises(ValueError):
        LayerSpec("pool", 3, 8)
    with pytest.raises(ValueError):
        LayerSpec("conv", 0, 8)
    spec = LayerSpec.from_dict({"kind": "dense", "in": 10, "out": 4, "bias": False})
    assert spec.params == 40
