import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromabench import entropy
from chromabench.entropy import (
    CdfTable,
    GaussianParams,
    RangeDecoder,
    RangeEncoder,
    build_gaussian_cdf,
    build_static_cdf,
    estimate_bits,
    normal_cdf,
    rc_decode,
    rc_encode,
    uniform_table,
)


def test_normal_cdf_against_libm():
    x = np.linspace(-12, 12, 4801)
    ref = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in x])
    assert np.abs(normal_cdf(x) - ref).max() < 1e-10
    assert normal_cdf(0.0) == 0.5


def test_static_cdf_examples():
    assert build_static_cdf([5, 5, 5, 5]).counts.tolist() == [16384] * 4
    assert build_static_cdf([3, 1]).counts.tolist() == [49152, 16384]
    assert build_static_cdf([1, 0]).counts.tolist() == [65535, 1]
    with pytest.raises(ValueError):
        build_static_cdf([0, 0])
    with pytest.raises(ValueError):
        build_static_cdf(np.ones(65537))


def test_table_invariants_enforced():
    with pytest.raises(ValueError):
        CdfTable(np.array([0, 10, 10, 65536]))
    with pytest.raises(ValueError):
        CdfTable(np.array([0, 65535]))


def test_gaussian_unit_table():
    t = build_gaussian_cdf(GaussianParams(0.0, 1.0))
    p0 = 0.5 * (math.erf(0.5 / math.sqrt(2)) - math.erf(-0.5 / math.sqrt(2)))
    assert p0 == pytest.approx(0.382925, abs=1e-6)
    # one reserved quantum per symbol, the remaining 65536 - S shared in proportion
    expected = 1 + p0 * (65536 - t.size)
    assert abs(t.counts[0 - t.lo] - expected) < 1.0
    assert t.escape and t.lo <= -7 and t.hi >= 7


def test_gaussian_symmetry():
    t = build_gaussian_cdf(GaussianParams(0.0, 2.3))
    c = t.counts
    assert -t.lo == t.hi
    np.testing.assert_array_equal(c, c[::-1])


def test_gaussian_degenerate_sigma():
    t = build_gaussian_cdf(GaussianParams(0.0, 1e-6), support=(-3, 3))
    c = t.counts
    assert c[3] == 65536 - 6 and np.all(np.delete(c, 3) == 1)


def test_gaussian_support_validation():
    with pytest.raises(ValueError):
        build_gaussian_cdf(GaussianParams(0.0, 1.0), support=(-2, 2))
    with pytest.raises(ValueError):
        build_gaussian_cdf(GaussianParams(0.0, 1.0), support=(0, 1))
    with pytest.raises(ValueError):
        GaussianParams(0.0, 0.0)


def test_sigma_clamped():
    assert GaussianParams(0, 1e-9).clamped().sigma == entropy.SIGMA_MIN
    assert GaussianParams(0, 1e9).clamped().sigma == entropy.SIGMA_MAX


def test_empty_stream():
    data = rc_encode([], uniform_table(4))
    assert len(data) <= 8
    assert rc_decode(data, uniform_table(4), 0) == []


def test_uniform_256(rng):
    t = uniform_table(256)
    s = rng.integers(0, 256, 10_000)
    data = rc_encode(s, t)
    assert abs(len(data) - 10_000) <= 40
    assert rc_decode(data, t, len(s)) == s.tolist()


def test_skewed_zeros():
    t = CdfTable(np.array([0, 65535, 65536]))
    data = rc_encode([0] * 10_000, t)
    assert len(data) <= 10
    assert estimate_bits([0] * 10_000, t) == pytest.approx(10_000 * math.log2(65536 / 65535))


def test_estimate_bits_examples():
    t = build_static_cdf([1, 1])
    assert estimate_bits([0], t) == 1.0
    s1, s2 = [0, 1, 1], [1, 0]
    assert estimate_bits(s1 + s2, t) == estimate_bits(s1, t) + estimate_bits(s2, t)


def test_out_of_support_rejected():
    with pytest.raises(ValueError):
        rc_encode([5], uniform_table(4))


def test_escapes_roundtrip():
    t = build_gaussian_cdf(GaussianParams(0.0, 0.5))
    values = [0, 1, -1, t.lo, t.hi, t.lo - 1, t.hi + 1, 10**6, -(10**9), 0]
    assert rc_decode(rc_encode(values, t), t, len(values)) == values
    enc = RangeEncoder()
    entropy.encode_array(enc, t, np.array(values))
    dec = RangeDecoder(enc.finish())
    assert entropy.decode_array(dec, t, len(values)).tolist() == values


def test_truncation_and_trailing_bytes(rng):
    t = uniform_table(256)
    s = rng.integers(0, 256, 500).tolist()
    data = rc_encode(s, t)
    with pytest.raises(ValueError):
        rc_decode(data[:-10], t, len(s))
    with pytest.raises(ValueError):
        rc_decode(data + b"\x00", t, len(s))
    with pytest.raises(entropy.TruncatedStreamError):
        RangeDecoder(b"\x00\x00")


def test_determinism(rng):
    t = build_gaussian_cdf(GaussianParams(1.0, 3.0))
    s = rng.integers(-20, 20, 3000)
    assert rc_encode(s, t) == rc_encode(s, t)


def test_raw_fields_roundtrip():
    enc = RangeEncoder()
    enc.encode_bits(0xDEADBEEF, 32)
    for v in (0, 1, -1, 12345, -(2**40)):
        enc.encode_sint(v)
    dec = RangeDecoder(enc.finish())
    assert dec.decode_bits(32) == 0xDEADBEEF
    assert [dec.decode_sint() for _ in range(5)] == [0, 1, -1, 12345, -(2**40)]


@st.composite
def model_and_symbols(draw):
    kind = draw(st.sampled_from(["static", "gauss"]))
    n = draw(st.integers(0, 300))
    if kind == "static":
        hist = draw(st.lists(st.integers(0, 1000), min_size=1, max_size=300).filter(lambda h: sum(h) > 0))
        table = build_static_cdf(hist, offset=draw(st.integers(-50, 50)))
        syms = draw(st.lists(st.integers(table.lo, table.hi), min_size=n, max_size=n))
    else:
        p = GaussianParams(draw(st.floats(-20, 20)), draw(st.floats(0.05, 300)))
        table = build_gaussian_cdf(p)
        syms = draw(st.lists(st.integers(-(2**20), 2**20), min_size=n, max_size=n))
    return table, syms


@settings(max_examples=200, deadline=None)
@given(model_and_symbols())
def test_roundtrip_property(case):
    table, syms = case
    data = rc_encode(syms, table)
    assert rc_decode(data, table, len(syms)) == syms


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 40), st.integers(-100, 100)), min_size=1, max_size=200))
def test_roundtrip_mixed_models(items):
    tables = [build_gaussian_cdf(GaussianParams(mu, sd)) for mu, sd, _ in items]
    syms = [s for _, _, s in items]
    assert rc_decode(rc_encode(syms, tables), tables, len(syms)) == syms


@pytest.mark.parametrize("seed", range(8))
def test_overhead_bound(seed):
    r = np.random.default_rng(seed)
    if seed % 2:
        t = build_static_cdf(r.integers(0, 50, size=r.integers(2, 300)) + (r.random() < 0.5))
        s = t.lo + r.choice(t.size, size=10_000, p=t.counts / 65536)
    else:
        sd = float(r.uniform(0.2, 30))
        t = build_gaussian_cdf(GaussianParams(0.0, sd))
        s = np.rint(r.normal(0, sd * 1.3, 10_000)).astype(int)
    ideal = estimate_bits(s, t)
    actual = 8 * len(rc_encode(s, t))
    assert actual <= ideal + 32 + 0.001 * ideal
