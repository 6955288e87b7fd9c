"""Range coding with static and Gaussian-conditional probability tables.

The coder is a 32-bit range coder with byte renormalization, carry
propagation and 16-bit frequency tables. Everything on the coding path is
integer arithmetic, so streams are identical across platforms. Gaussian
tables are built from a self-contained erf routine rather than libm's, for
the same reason.

Tables may reserve their first and last symbols as tail escapes: a value at
or beyond an extreme is coded as the escape symbol followed by its distance
from that extreme as an Elias-style raw field (6-bit length, then the bits).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

PRECISION = 16
TOTAL = 1 << PRECISION

SIGMA_MIN = 0.11
SIGMA_MAX = 256.0
TAIL_SIGMAS = 6.0

_MASK = 0xFFFFFFFF
_TOP = 1 << 24
_LEN_BITS = 6  # escape magnitudes up to 2**63 - 1

# ---------------------------------------------------------------------------
# Gaussian CDF
# ---------------------------------------------------------------------------

_SQRT_PI = 1.7724538509055160273
_SQRT2 = 1.4142135623730950488
_SERIES_TERMS = 80
_CF_DEPTH = 80
_SERIES_LIMIT = 3.0


def _erf_series(z: np.ndarray) -> np.ndarray:
    # erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_n (2z^2)^n z / (2n+1)!!  -- all terms positive
    z2 = 2.0 * z * z
    term = z.copy()
    total = z.copy()
    for n in range(1, _SERIES_TERMS):
        term = term * z2 / (2 * n + 1)
        total = total + term
    return 2.0 / _SQRT_PI * np.exp(-z * z) * total


def _erfc_cf(z: np.ndarray) -> np.ndarray:
    # erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))), evaluated bottom-up
    tail = np.zeros_like(z)
    for k in range(_CF_DEPTH, 0, -1):
        tail = (k / 2.0) / (z + tail)
    return np.exp(-z * z) / _SQRT_PI / (z + tail)


def erfc_nonneg(z) -> np.ndarray:
    """erfc for z >= 0, absolute error well below 1e-10."""
    z = np.asarray(z, dtype=np.float64)
    small = z < _SERIES_LIMIT
    out = np.empty_like(z)
    if np.any(small):
        out[small] = 1.0 - _erf_series(z[small])
    if np.any(~small):
        out[~small] = _erfc_cf(z[~small])
    return out


def normal_cdf(x) -> np.ndarray:
    """Standard normal CDF Phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    half = 0.5 * erfc_nonneg(np.abs(x) / _SQRT2)
    return np.where(x < 0, half, 1.0 - half)


# ---------------------------------------------------------------------------
# Probability tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CdfTable:
    """Quantized cumulative distribution over ``len(cumulative) - 1`` symbols.

    Symbol index ``i`` stands for value ``offset + i``. With ``escape`` set,
    index 0 means "value <= offset" and the last index means
    "value >= offset + size - 1"; the overshoot is coded as a raw field.
    """

    cumulative: np.ndarray
    offset: int = 0
    escape: bool = False
    precision: int = PRECISION
    _cum: list = field(init=False, repr=False)

    def __post_init__(self):
        cum = np.asarray(self.cumulative, dtype=np.int64)
        if cum.ndim != 1 or len(cum) < 2:
            raise ValueError("a CDF table needs at least one symbol")
        if cum[0] != 0 or cum[-1] != (1 << self.precision):
            raise ValueError(f"cumulative must run from 0 to {1 << self.precision}")
        if np.any(np.diff(cum) < 1):
            raise ValueError("every symbol needs a probability of at least one quantum")
        cum.setflags(write=False)
        object.__setattr__(self, "cumulative", cum)
        object.__setattr__(self, "_cum", cum.tolist())

    @property
    def size(self) -> int:
        return len(self._cum) - 1

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.cumulative)

    @property
    def lo(self) -> int:
        return self.offset

    @property
    def hi(self) -> int:
        return self.offset + self.size - 1

    def contains(self, value: int) -> bool:
        return self.escape or self.lo <= value <= self.hi

    def split(self, value: int) -> tuple[int, int | None]:
        """Map a value to (symbol index, escape magnitude or None)."""
        if self.escape:
            if value <= self.lo:
                return 0, self.lo - value
            if value >= self.hi:
                return self.size - 1, value - self.hi
        elif not self.lo <= value <= self.hi:
            raise ValueError(f"symbol {value} outside table support [{self.lo}, {self.hi}]")
        return value - self.lo, None

    def probability(self, value: int) -> float:
        idx, _ = self.split(value)
        return (self._cum[idx + 1] - self._cum[idx]) / (1 << self.precision)


def quantize_pmf(pmf, precision: int = PRECISION) -> np.ndarray:
    """Integer counts summing to 2**precision, each >= 1.

    Every symbol gets one reserved quantum; the rest is shared in proportion
    to ``pmf`` with largest-remainder rounding (ties go to the lower index).
    """
    p = np.asarray(pmf, dtype=np.float64)
    total = 1 << precision
    n = len(p)
    if n == 0:
        raise ValueError("empty distribution")
    if n > total:
        raise ValueError(f"{n} symbols do not fit a {precision}-bit table")
    if np.any(p < 0) or not np.isfinite(p).all() or p.sum() <= 0:
        raise ValueError("distribution must be finite, non-negative and non-zero")
    p = p / p.sum()
    free = total - n
    scaled = p * free
    base = np.floor(scaled).astype(np.int64)
    rest = free - int(base.sum())
    if rest:
        order = np.argsort(-(scaled - base), kind="stable")
        base[order[:rest]] += 1
    return base + 1


def _table_from_counts(counts: np.ndarray, offset: int, escape: bool) -> CdfTable:
    cum = np.concatenate([[0], np.cumsum(counts)])
    return CdfTable(cum, offset=offset, escape=escape)


def build_static_cdf(histogram, offset: int = 0) -> CdfTable:
    """Fixed table proportional to a symbol histogram (no escapes)."""
    h = np.asarray(histogram, dtype=np.float64)
    if h.sum() <= 0:
        raise ValueError("histogram total must be positive")
    return _table_from_counts(quantize_pmf(h), offset, escape=False)


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def clamped(self) -> "GaussianParams":
        return GaussianParams(self.mu, min(max(self.sigma, SIGMA_MIN), SIGMA_MAX))


def gaussian_support(p: GaussianParams, t: float = TAIL_SIGMAS) -> tuple[int, int]:
    """Escape values bracketing [mu - t*sigma, mu + t*sigma]."""
    return math.floor(p.mu - t * p.sigma) - 1, math.ceil(p.mu + t * p.sigma) + 1


def gaussian_pmf(p: GaussianParams, lo: int, hi: int) -> np.ndarray:
    """Discretized normal mass on lo..hi with the tails folded into lo and hi."""
    edges = np.arange(lo, hi, dtype=np.float64) + 0.5  # boundaries between neighbours
    cdf = normal_cdf((edges - p.mu) / p.sigma)
    cdf = np.concatenate([[0.0], cdf, [1.0]])
    return np.maximum(np.diff(cdf), 0.0)


def build_gaussian_cdf(p: GaussianParams, support: tuple[int, int] | None = None,
                       t: float = TAIL_SIGMAS) -> CdfTable:
    """Escape-capable table for a discretized Gaussian; sigma is clamped first."""
    p = p.clamped()
    lo, hi = gaussian_support(p, t) if support is None else (int(support[0]), int(support[1]))
    if hi - lo < 2:
        raise ValueError(f"empty support [{lo}, {hi}]: need two escapes and one regular symbol")
    if lo + 1 > p.mu - t * p.sigma or hi - 1 < p.mu + t * p.sigma:
        raise ValueError(f"support [{lo}, {hi}] does not cover mu +/- {t} sigma")
    return _gaussian_table(float(p.mu), float(p.sigma), lo, hi)


@lru_cache(maxsize=4096)
def _gaussian_table(mu: float, sigma: float, lo: int, hi: int) -> CdfTable:
    pmf = gaussian_pmf(GaussianParams(mu, sigma), lo, hi)
    return _table_from_counts(quantize_pmf(pmf), lo, escape=True)


def uniform_table(size: int, offset: int = 0) -> CdfTable:
    return build_static_cdf(np.ones(size), offset)


# ---------------------------------------------------------------------------
# Range coder
# ---------------------------------------------------------------------------


class RangeEncoder:
    """32-bit range encoder with byte renormalization and carry propagation.

    An interval [cum, cum + freq) out of 2**shift is mapped to
    [range*cum >> shift, range*(cum+freq) >> shift), so the only rounding
    loss is one unit per boundary. ``finish`` flushes 4 bytes of ``low``.
    """

    def __init__(self):
        self.low = 0
        self.range = _MASK
        self.out = bytearray()
        self._cache = 0
        self._pending = 0  # 0xFF bytes waiting on a possible carry
        self._started = False
        self._done = False

    def _shift_low(self) -> None:
        low = self.low
        if low < 0xFF000000 or low > _MASK:
            carry = low >> 32
            if self._started:
                self.out.append((self._cache + carry) & 0xFF)
            self._started = True
            if self._pending:
                self.out += bytes([(0xFF + carry) & 0xFF]) * self._pending
                self._pending = 0
            self._cache = (low >> 24) & 0xFF
        else:
            self._pending += 1
        self.low = (low << 8) & _MASK

    def encode(self, cum: int, freq: int, shift: int = PRECISION) -> None:
        rng = self.range
        lo = (rng * cum) >> shift
        self.low += lo
        rng = ((rng * (cum + freq)) >> shift) - lo
        while rng < _TOP:
            rng <<= 8
            self._shift_low()
        self.range = rng

    def encode_many(self, cums: Sequence[int], freqs: Sequence[int], shift: int = PRECISION) -> None:
        """Same as repeated ``encode`` with the hot state kept in locals."""
        rng = self.range
        shift_low = self._shift_low
        for cum, freq in zip(cums, freqs):
            lo = (rng * cum) >> shift
            rng = ((rng * (cum + freq)) >> shift) - lo
            self.low += lo
            while rng < _TOP:
                rng <<= 8
                shift_low()
        self.range = rng

    def encode_bits(self, value: int, nbits: int) -> None:
        """Raw field of ``nbits`` (any width), sent in chunks of at most 16 bits."""
        if value < 0 or value >> nbits:
            raise ValueError(f"{value} does not fit in {nbits} bits")
        while nbits > 0:
            take = min(nbits, PRECISION)
            nbits -= take
            self.encode((value >> nbits) & ((1 << take) - 1), 1, take)

    def encode_uint(self, value: int) -> None:
        """Elias-style unsigned integer: 6-bit length then the value bits."""
        n = value.bit_length()
        if n >= 1 << _LEN_BITS:
            raise ValueError(f"{value} too large for the escape code")
        self.encode_bits(n, _LEN_BITS)
        self.encode_bits(value, n)

    def encode_sint(self, value: int) -> None:
        self.encode_uint(2 * value if value >= 0 else -2 * value - 1)

    def finish(self) -> bytes:
        if not self._done:
            for _ in range(5):
                self._shift_low()
            self._done = True
        return bytes(self.out)


class TruncatedStreamError(ValueError):
    pass


class CorruptStreamError(ValueError):
    pass


class RangeDecoder:
    """Decoder for ``RangeEncoder`` output; tracks ``code - low`` directly."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        if len(self.data) < 4:
            raise TruncatedStreamError("range-coded stream shorter than its 4-byte flush")
        self.pos = 4
        self.code = int.from_bytes(self.data[:4], "big")
        self.range = _MASK

    @property
    def consumed(self) -> int:
        return self.pos

    def _refill(self, rng: int, code: int) -> tuple[int, int]:
        data, pos = self.data, self.pos
        while rng < _TOP:
            if pos >= len(data):
                raise TruncatedStreamError("range-coded stream ended early")
            rng <<= 8
            code = (code << 8) | data[pos]
            pos += 1
        self.pos = pos
        return rng, code

    def decode_cum(self, cum: list, shift: int = PRECISION) -> int:
        """Decode one index from a cumulative list summing to 2**shift."""
        rng, code = self.range, self.code
        if code >= rng:
            raise CorruptStreamError("range-coded stream is corrupt")
        idx = bisect_right(cum, (((code + 1) << shift) - 1) // rng) - 1
        lo = (rng * cum[idx]) >> shift
        hi = (rng * cum[idx + 1]) >> shift
        self.range, self.code = self._refill(hi - lo, code - lo)
        return idx

    def decode_index(self, table: CdfTable) -> int:
        return self.decode_cum(table._cum, table.precision)

    def decode_indices(self, table: CdfTable, count: int, stop_on_escape: bool = False) -> list[int]:
        """Decode up to ``count`` indices; optionally stop right after an escape index."""
        cum = table._cum
        shift = table.precision
        last = table.size - 1 if stop_on_escape else -1
        first = 0 if stop_on_escape else -1
        data, ndata = self.data, len(self.data)
        rng, code, pos = self.range, self.code, self.pos
        out = []
        append = out.append
        for _ in range(count):
            if code >= rng:
                raise CorruptStreamError("range-coded stream is corrupt")
            idx = bisect_right(cum, (((code + 1) << shift) - 1) // rng) - 1
            lo = (rng * cum[idx]) >> shift
            rng = ((rng * cum[idx + 1]) >> shift) - lo
            code -= lo
            while rng < _TOP:
                if pos >= ndata:
                    raise TruncatedStreamError("range-coded stream ended early")
                rng <<= 8
                code = (code << 8) | data[pos]
                pos += 1
            append(idx)
            if idx == first or idx == last:
                break
        self.range, self.code, self.pos = rng, code, pos
        return out

    def decode_bits(self, nbits: int) -> int:
        value = 0
        while nbits > 0:
            take = min(nbits, PRECISION)
            nbits -= take
            rng, code = self.range, self.code
            if code >= rng:
                raise CorruptStreamError("range-coded stream is corrupt")
            chunk = (((code + 1) << take) - 1) // rng
            lo = (rng * chunk) >> take
            hi = (rng * (chunk + 1)) >> take
            self.range, self.code = self._refill(hi - lo, code - lo)
            value = (value << take) | chunk
        return value

    def decode_uint(self) -> int:
        return self.decode_bits(self.decode_bits(_LEN_BITS))

    def decode_sint(self) -> int:
        u = self.decode_uint()
        return u >> 1 if u % 2 == 0 else -((u + 1) >> 1)


def encode_symbol(enc: RangeEncoder, table: CdfTable, value: int) -> None:
    idx, extra = table.split(int(value))
    cum = table._cum
    enc.encode(cum[idx], cum[idx + 1] - cum[idx], table.precision)
    if extra is not None:
        enc.encode_uint(extra)


def decode_symbol(dec: RangeDecoder, table: CdfTable) -> int:
    idx = dec.decode_index(table)
    if table.escape:
        if idx == 0:
            return table.lo - dec.decode_uint()
        if idx == table.size - 1:
            return table.hi + dec.decode_uint()
    return table.lo + idx


def encode_array(enc: RangeEncoder, table: CdfTable, values: np.ndarray) -> None:
    """Code a run of values that share one table."""
    values = np.asarray(values, dtype=np.int64).ravel()
    if values.size == 0:
        return
    cum = table.cumulative
    idx = values - table.lo
    if table.escape:
        low_esc = idx <= 0
        high_esc = idx >= table.size - 1
        idx = np.clip(idx, 0, table.size - 1)
    elif idx.min() < 0 or idx.max() >= table.size:
        raise ValueError(f"symbol outside table support [{table.lo}, {table.hi}]")
    else:
        low_esc = high_esc = None
    cums = cum[idx].tolist()
    freqs = (cum[idx + 1] - cum[idx]).tolist()
    if low_esc is None or not (low_esc.any() or high_esc.any()):
        enc.encode_many(cums, freqs, table.precision)
        return
    escapes = np.flatnonzero(low_esc | high_esc).tolist()
    start = 0
    vals = values.tolist()
    for i in escapes:
        enc.encode_many(cums[start:i + 1], freqs[start:i + 1], table.precision)
        v = vals[i]
        enc.encode_uint(table.lo - v if v <= table.lo else v - table.hi)
        start = i + 1
    enc.encode_many(cums[start:], freqs[start:], table.precision)


def decode_array(dec: RangeDecoder, table: CdfTable, count: int) -> np.ndarray:
    if not table.escape:
        return np.asarray(dec.decode_indices(table, count), dtype=np.int64) + table.lo
    out = np.empty(count, dtype=np.int64)
    last = table.size - 1
    i = 0
    while i < count:
        chunk = dec.decode_indices(table, count - i, stop_on_escape=True)
        n = len(chunk)
        out[i:i + n] = np.asarray(chunk, dtype=np.int64) + table.lo
        tail = chunk[-1]
        if tail == 0:
            out[i + n - 1] = table.lo - dec.decode_uint()
        elif tail == last:
            out[i + n - 1] = table.hi + dec.decode_uint()
        i += n
    return out


def _as_models(models, n: int) -> list[CdfTable]:
    if isinstance(models, CdfTable):
        return [models] * n
    models = list(models)
    if len(models) != n:
        raise ValueError(f"{len(models)} models for {n} symbols")
    return models


def rc_encode(symbols, models) -> bytes:
    """Encode integer symbols, one table per symbol (or one shared table)."""
    symbols = [int(s) for s in symbols]
    tables = _as_models(models, len(symbols))
    enc = RangeEncoder()
    for s, t in zip(symbols, tables):
        encode_symbol(enc, t, s)
    return enc.finish()


def rc_decode(data: bytes, models, count: int) -> list[int]:
    """Inverse of ``rc_encode``; raises on truncated or over-long streams."""
    tables = _as_models(models, count)
    dec = RangeDecoder(data)
    out = [decode_symbol(dec, t) for t in tables]
    if dec.consumed != len(dec.data):
        raise ValueError(f"stream has {len(dec.data) - dec.consumed} trailing bytes")
    return out


def symbol_bits(values: np.ndarray, table: CdfTable) -> np.ndarray:
    """Ideal code length of each value under ``table``, escape fields included."""
    values = np.asarray(values, dtype=np.int64)
    idx = values - table.lo
    extra = np.zeros(values.shape, dtype=np.float64)
    if table.escape:
        mag = np.where(idx <= 0, -idx, np.where(idx >= table.size - 1, idx - (table.size - 1), -1))
        esc = mag >= 0
        if esc.any():
            nbits = np.zeros(values.shape, dtype=np.float64)
            nbits[esc] = [int(m).bit_length() for m in mag[esc]]
            extra = np.where(esc, _LEN_BITS + nbits, 0.0)
        idx = np.clip(idx, 0, table.size - 1)
    elif values.size and (idx.min() < 0 or idx.max() >= table.size):
        raise ValueError(f"symbol outside table support [{table.lo}, {table.hi}]")
    counts = table.counts[idx]
    return table.precision - np.log2(counts) + extra


def estimate_bits(symbols, models) -> float:
    """Ideal code length in bits: -sum log2 P_quantized(s)."""
    symbols = np.asarray(list(symbols), dtype=np.int64)
    if isinstance(models, CdfTable):
        return float(symbol_bits(symbols, models).sum())
    tables = _as_models(models, len(symbols))
    return float(sum(symbol_bits(np.array([s]), t)[0] for s, t in zip(symbols, tables)))
