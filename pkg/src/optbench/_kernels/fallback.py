"""Pure-Python (numpy) implementations of the hot kernels.

This module mirrors the API of the compiled extension ``_core`` and is the
import-time fallback when the extension is unavailable.  Whole-array numpy
operations stand in for the lane-blocked loops of the compiled core; the
``lane`` arguments are accepted for API parity but do not change results
(the per-element math is identical at every lane width by construction).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "fallback"

# exp() saturation bounds: outside these the result is +inf / 0.0.
EXP_HI32 = 88.72283905206835
EXP_LO32 = -103.27892990343185
EXP_HI64 = 709.782712893384
EXP_LO64 = -745.1332191019411

STATUS_OK = 0
STATUS_OVERFLOW = 1
STATUS_UNDERFLOW = 2

EXP_MODE_LIBM = 0
EXP_MODE_POLY = 1

_MT_N = 624
_MT_M = 397
_UPPER = np.uint32(0x80000000)
_LOWER = np.uint32(0x7FFFFFFF)
_MATRIX_A = np.uint32(0x9908B0DF)

_INV32 = 2.0 ** -32
_TWO_PI = 6.283185307179586476925287


def _mt_twist(mt: np.ndarray) -> None:
    """One full state regeneration, vectorized in dependency-safe segments.

    The recurrence writes mt[k] from mt[(k+397) % 624], which for k >= 227
    refers to entries already rewritten in this pass, so the array is
    processed in segments whose inputs are complete before they run.
    """
    def mix(cur, nxt, src):
        y = (cur & _UPPER) | (nxt & _LOWER)
        mag = np.where((y & np.uint32(1)).astype(bool), _MATRIX_A, np.uint32(0))
        return src ^ (y >> np.uint32(1)) ^ mag

    mt[0:227] = mix(mt[0:227], mt[1:228], mt[397:624])
    mt[227:454] = mix(mt[227:454], mt[228:455], mt[0:227])
    mt[454:623] = mix(mt[454:623], mt[455:624], mt[227:396])
    mt[623:624] = mix(mt[623:624], mt[0:1], mt[396:397])


def _mt_temper(y: np.ndarray) -> np.ndarray:
    y = y ^ (y >> np.uint32(11))
    y = y ^ ((y << np.uint32(7)) & np.uint32(0x9D2C5680))
    y = y ^ ((y << np.uint32(15)) & np.uint32(0xEFC60000))
    return y ^ (y >> np.uint32(18))


def mt_next_block(words: np.ndarray, index: int, n: int):
    """Draw ``n`` tempered 32-bit outputs, advancing the generator state."""
    out = np.empty(n, dtype=np.uint32)
    filled = 0
    while filled < n:
        if index >= _MT_N:
            _mt_twist(words)
            index = 0
        take = min(_MT_N - index, n - filled)
        out[filled:filled + take] = _mt_temper(words[index:index + take])
        index += take
        filled += take
    return out, index


def box_muller_block(draws: np.ndarray) -> np.ndarray:
    """Transform 2m uint32 draws into 2m standard normals.

    Pair (2i, 2i+1) maps to u1 = (d+1)/2^32 in (0,1] and u2 = d/2^32 in
    [0,1); outputs are interleaved (r*cos, r*sin) per pair.
    """
    d = np.asarray(draws, dtype=np.uint32)
    u1 = (d[0::2].astype(np.float64) + 1.0) * _INV32
    u2 = d[1::2].astype(np.float64) * _INV32
    r = np.sqrt(-2.0 * np.log(u1))
    ang = _TWO_PI * u2
    out = np.empty(d.shape[0], dtype=np.float64)
    out[0::2] = r * np.cos(ang)
    out[1::2] = r * np.sin(ang)
    return out


def _poly_exp32(x: np.ndarray) -> np.ndarray:
    """Degree-6 minimax exp on float32, Cephes single-precision constants."""
    x = np.asarray(x, dtype=np.float32)
    z = np.floor(np.float32(1.44269504088896341) * x + np.float32(0.5))
    n = z.astype(np.int32)
    x = x - z * np.float32(0.693359375)
    x = x - z * np.float32(-2.12194440e-4)
    p = np.float32(1.9875691500e-4)
    for c in (1.3981999507e-3, 8.3334519073e-3, 4.1665795894e-2,
              1.6666665459e-1, 5.0000001201e-1):
        p = p * x + np.float32(c)
    p = p * (x * x) + x + np.float32(1.0)
    with np.errstate(over="ignore", under="ignore"):
        return np.ldexp(p, n)


def _poly_exp64(x: np.ndarray) -> np.ndarray:
    """Cephes double-precision exp: Pade form after Cody-Waite reduction."""
    x = np.asarray(x, dtype=np.float64)
    px = np.floor(1.4426950408889634073599 * x + 0.5)
    n = px.astype(np.int64)
    x = x - px * 6.93145751953125e-1
    x = x - px * 1.42860682030941723212e-6
    xx = x * x
    p = ((1.26177193074810590878e-4 * xx + 3.02994407707441961300e-2) * xx
         + 9.99999999999999999910e-1) * x
    q = (((3.00198505138664455042e-6 * xx + 2.52448340349684104192e-3) * xx
          + 2.27265548208155028766e-1) * xx + 2.00000000000000000005e0)
    r = p / (q - p)
    r = 1.0 + 2.0 * r
    with np.errstate(over="ignore", under="ignore"):
        return np.ldexp(r, n)


def vexp(x: np.ndarray, lane: int):
    """Elementwise exponential with saturation; returns (values, status)."""
    x = np.asarray(x)
    if x.dtype == np.float32:
        hi, lo = EXP_HI32, EXP_LO32
        y = _poly_exp32(x)
        inf = np.float32(np.inf)
        zero = np.float32(0.0)
    else:
        hi, lo = EXP_HI64, EXP_LO64
        y = _poly_exp64(x)
        inf = np.inf
        zero = 0.0
    status = STATUS_OK
    over = x > hi
    under = x < lo
    if over.any():
        y = np.where(over, inf, y)
        status |= STATUS_OVERFLOW
    if under.any():
        y = np.where(under, zero, y)
        status |= STATUS_UNDERFLOW
    return y.astype(x.dtype, copy=False), status


def mc_payoff_sum(z, f_factor, vol_sqrt_t, strike, is_call, screening,
                  threshold, exp_mode, precision, lane):
    """Accumulate one chunk of the Monte Carlo sum.

    Unscreened mode returns (sum of max(0, payoff_i), positive-term count).
    Screened mode returns (sum of exp(vol_sqrt_t * z_j) over draws passing
    the threshold test, pass count); the strike/forward factoring then
    happens once, outside the sum.
    """
    z = np.asarray(z, dtype=np.float64)
    if screening:
        mask = (z > threshold) if is_call else (z < threshold)
        zs = z[mask]
        m = int(zs.shape[0])
        if m == 0:
            return 0.0, 0
        e = _chunk_exp(vol_sqrt_t * zs, exp_mode, precision)
        return float(np.sum(e)), m
    e = _chunk_exp(vol_sqrt_t * z, exp_mode, precision)
    if precision == 32:
        f = np.float32(f_factor)
        k = np.float32(strike)
    else:
        f, k = f_factor, strike
    pay = f * e - k if is_call else k - f * e
    np.maximum(pay, pay.dtype.type(0.0), out=pay)
    return float(np.sum(pay)), int(np.count_nonzero(pay))


def _chunk_exp(x64: np.ndarray, exp_mode: int, precision: int) -> np.ndarray:
    if precision == 32:
        x = x64.astype(np.float32)
        if exp_mode == EXP_MODE_POLY:
            return _poly_exp32(x)
        return np.exp(x)
    if exp_mode == EXP_MODE_POLY:
        return _poly_exp64(x64)
    return np.exp(x64)


def _fma_combine(a, x, by):
    # Emulate fused multiply-add via a wider intermediate.
    if x.dtype == np.float32:
        wide = np.float64(a) * x.astype(np.float64) + by.astype(np.float64)
        return wide.astype(np.float32)
    wide = np.longdouble(a) * x.astype(np.longdouble) + by.astype(np.longdouble)
    return wide.astype(np.float64)


def bt_step(src: np.ndarray, a: float, b: float, lane: int, fused: bool) -> np.ndarray:
    """out[i] = a*src[i] + b*src[i+1]; the shifted operand is read first."""
    src = np.asarray(src)
    t = src.dtype.type
    by = t(b) * src[1:]
    if fused:
        return _fma_combine(a, src[:-1], by)
    return t(a) * src[:-1] + by


def bt_induct(values: np.ndarray, cur_len: int, steps: int, a: float, b: float,
              lane: int, fused: bool) -> int:
    """Run ``steps`` backward-induction levels in place; returns new length."""
    t = values.dtype.type
    ta, tb = t(a), t(b)
    for _ in range(steps):
        m = cur_len - 1
        if fused:
            values[:m] = _fma_combine(a, values[:m], tb * values[1:cur_len])
        else:
            values[:m] = ta * values[:m] + tb * values[1:cur_len]
        cur_len -= 1
    return cur_len


def kahan_sum(values) -> float:
    # math.fsum is exactly rounded, which subsumes the compensated-sum
    # guarantee of the compiled core's Kahan loop.
    return math.fsum(np.asarray(values, dtype=np.float64).tolist())
