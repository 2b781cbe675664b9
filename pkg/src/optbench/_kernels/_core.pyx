# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: MT19937 stream, Box-Muller, MC sum loops, lattice
backward induction, polynomial exponentials and compensated summation.

The per-element arithmetic matches optbench._kernels.fallback exactly; lane
arguments control loop blocking only, so results are independent of width.
"""

import numpy as np

from libc.math cimport cos, exp, expf, floor, floorf, fma, fmaf, ldexp, ldexpf, log, sin, sqrt
from libc.stdint cimport int64_t, uint32_t

BACKEND = "compiled"

EXP_HI32 = 88.72283905206835
EXP_LO32 = -103.27892990343185
EXP_HI64 = 709.782712893384
EXP_LO64 = -745.1332191019411

STATUS_OK = 0
STATUS_OVERFLOW = 1
STATUS_UNDERFLOW = 2

EXP_MODE_LIBM = 0
EXP_MODE_POLY = 1

cdef double _EXP_HI32 = 88.72283905206835
cdef double _EXP_LO32 = -103.27892990343185
cdef double _EXP_HI64 = 709.782712893384
cdef double _EXP_LO64 = -745.1332191019411

cdef double _INV32 = 2.0 ** -32
cdef double _TWO_PI = 6.283185307179586476925287

DEF MT_N = 624
DEF MT_M = 397


cdef void _mt_twist(uint32_t* mt) noexcept nogil:
    cdef Py_ssize_t k
    cdef uint32_t y
    for k in range(MT_N):
        y = (mt[k] & 0x80000000u) | (mt[(k + 1) % MT_N] & 0x7FFFFFFFu)
        mt[k] = mt[(k + MT_M) % MT_N] ^ (y >> 1) ^ ((y & 1u) * 0x9908B0DFu)


cdef Py_ssize_t _mt_fill(uint32_t* mt, Py_ssize_t index, uint32_t* out,
                         Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef uint32_t y
    for i in range(n):
        if index >= MT_N:
            _mt_twist(mt)
            index = 0
        y = mt[index]
        index += 1
        y ^= y >> 11
        y ^= (y << 7) & 0x9D2C5680u
        y ^= (y << 15) & 0xEFC60000u
        y ^= y >> 18
        out[i] = y
    return index


def mt_next_block(uint32_t[::1] words, Py_ssize_t index, Py_ssize_t n):
    """Draw ``n`` tempered 32-bit outputs, advancing the generator state."""
    out = np.empty(n, dtype=np.uint32)
    cdef uint32_t[::1] ov = out
    cdef Py_ssize_t new_index
    with nogil:
        new_index = _mt_fill(&words[0], index, &ov[0] if n > 0 else NULL, n)
    return out, new_index


def box_muller_block(uint32_t[::1] draws):
    """Transform 2m uint32 draws into 2m standard normals (r*cos, r*sin)."""
    cdef Py_ssize_t m = draws.shape[0] // 2
    out = np.empty(2 * m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double u1, u2, r, ang
    with nogil:
        for i in range(m):
            u1 = (<double> draws[2 * i] + 1.0) * _INV32
            u2 = <double> draws[2 * i + 1] * _INV32
            r = sqrt(-2.0 * log(u1))
            ang = _TWO_PI * u2
            ov[2 * i] = r * cos(ang)
            ov[2 * i + 1] = r * sin(ang)
    return out


cdef inline float _pexp32(float x) noexcept nogil:
    cdef float z = floorf(<float> 1.44269504088896341 * x + <float> 0.5)
    cdef int n = <int> z
    x = x - z * <float> 0.693359375
    x = x - z * <float> -2.12194440e-4
    cdef float p = <float> 1.9875691500e-4
    p = p * x + <float> 1.3981999507e-3
    p = p * x + <float> 8.3334519073e-3
    p = p * x + <float> 4.1665795894e-2
    p = p * x + <float> 1.6666665459e-1
    p = p * x + <float> 5.0000001201e-1
    p = p * (x * x) + x + <float> 1.0
    return ldexpf(p, n)


cdef inline double _pexp64(double x) noexcept nogil:
    cdef double px = floor(1.4426950408889634073599 * x + 0.5)
    cdef int n = <int> px
    x = x - px * 6.93145751953125e-1
    x = x - px * 1.42860682030941723212e-6
    cdef double xx = x * x
    cdef double p = ((1.26177193074810590878e-4 * xx
                      + 3.02994407707441961300e-2) * xx
                     + 9.99999999999999999910e-1) * x
    cdef double q = (((3.00198505138664455042e-6 * xx
                       + 2.52448340349684104192e-3) * xx
                      + 2.27265548208155028766e-1) * xx
                     + 2.00000000000000000005)
    cdef double r = p / (q - p)
    return ldexp(1.0 + 2.0 * r, n)


def vexp(x, int lane):
    """Elementwise exponential with saturation; returns (values, status)."""
    arr = np.ascontiguousarray(x)
    if arr.dtype == np.float32:
        return _vexp_f32(arr, lane)
    return _vexp_f64(np.ascontiguousarray(arr, dtype=np.float64), lane)


cdef _vexp_f32(float[::1] xs, int lane):
    out = np.empty(xs.shape[0], dtype=np.float32)
    cdef float[::1] ov = out
    cdef Py_ssize_t i, j, base, nb
    cdef Py_ssize_t n = xs.shape[0]
    cdef int status = 0
    cdef float v
    with nogil:
        nb = (n // lane) * lane
        base = 0
        while base < nb:
            for j in range(lane):
                i = base + j
                if xs[i] > _EXP_HI32:
                    ov[i] = <float> 1e300 * <float> 1e300
                    status |= 1
                elif xs[i] < _EXP_LO32:
                    ov[i] = 0.0
                    status |= 2
                else:
                    ov[i] = _pexp32(xs[i])
            base += lane
        for i in range(nb, n):
            if xs[i] > _EXP_HI32:
                ov[i] = <float> 1e300 * <float> 1e300
                status |= 1
            elif xs[i] < _EXP_LO32:
                ov[i] = 0.0
                status |= 2
            else:
                ov[i] = _pexp32(xs[i])
    return out, status


cdef _vexp_f64(double[::1] xs, int lane):
    out = np.empty(xs.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, base, nb
    cdef Py_ssize_t n = xs.shape[0]
    cdef int status = 0
    with nogil:
        nb = (n // lane) * lane
        base = 0
        while base < nb:
            for j in range(lane):
                i = base + j
                if xs[i] > _EXP_HI64:
                    ov[i] = 1e300 * 1e300
                    status |= 1
                elif xs[i] < _EXP_LO64:
                    ov[i] = 0.0
                    status |= 2
                else:
                    ov[i] = _pexp64(xs[i])
            base += lane
        for i in range(nb, n):
            if xs[i] > _EXP_HI64:
                ov[i] = 1e300 * 1e300
                status |= 1
            elif xs[i] < _EXP_LO64:
                ov[i] = 0.0
                status |= 2
            else:
                ov[i] = _pexp64(xs[i])
    return out, status


def mc_payoff_sum(double[::1] z, double f_factor, double vol_sqrt_t,
                  double strike, bint is_call, bint screening,
                  double threshold, int exp_mode, int precision, int lane):
    """Accumulate one chunk of the Monte Carlo sum (Kahan-compensated).

    Unscreened: (sum of max(0, payoff_i), positive-term count).
    Screened: (sum of exp(vol_sqrt_t*z_j) over threshold-passing draws,
    pass count); strike/forward factors are applied outside the sum.
    """
    cdef double s
    cdef int64_t cnt = 0
    with nogil:
        if precision == 32:
            s = _mc_sum_f32(z, f_factor, vol_sqrt_t, strike, is_call,
                            screening, threshold, exp_mode, &cnt)
        else:
            s = _mc_sum_f64(z, f_factor, vol_sqrt_t, strike, is_call,
                            screening, threshold, exp_mode, &cnt)
    return s, cnt


cdef double _mc_sum_f64(double[::1] z, double f, double vst, double k,
                        bint is_call, bint screening, double thr,
                        int exp_mode, int64_t* cnt) noexcept nogil:
    cdef double s = 0.0, c = 0.0, y, t, e, pay, x
    cdef Py_ssize_t i, n = z.shape[0]
    cdef int64_t m = 0
    for i in range(n):
        if screening:
            if is_call:
                if z[i] <= thr:
                    continue
            else:
                if z[i] >= thr:
                    continue
            x = vst * z[i]
            e = exp(x) if exp_mode == 0 else _pexp64(x)
            m += 1
        else:
            x = vst * z[i]
            e = exp(x) if exp_mode == 0 else _pexp64(x)
            pay = f * e - k if is_call else k - f * e
            if pay > 0.0:
                m += 1
                e = pay
            else:
                continue
        y = e - c
        t = s + y
        c = (t - s) - y
        s = t
    cnt[0] = m
    return s


cdef double _mc_sum_f32(double[::1] z, double f, double vst, double k,
                        bint is_call, bint screening, double thr,
                        int exp_mode, int64_t* cnt) noexcept nogil:
    cdef float s = 0.0, c = 0.0, y, t, e, pay
    cdef float ff = <float> f, kf = <float> k
    cdef float x
    cdef Py_ssize_t i, n = z.shape[0]
    cdef int64_t m = 0
    for i in range(n):
        if screening:
            if is_call:
                if z[i] <= thr:
                    continue
            else:
                if z[i] >= thr:
                    continue
            x = <float> (vst * z[i])
            e = expf(x) if exp_mode == 0 else _pexp32(x)
            m += 1
        else:
            x = <float> (vst * z[i])
            e = expf(x) if exp_mode == 0 else _pexp32(x)
            pay = ff * e - kf if is_call else kf - ff * e
            if pay > 0.0:
                m += 1
                e = pay
            else:
                continue
        y = e - c
        t = s + y
        c = (t - s) - y
        s = t
    cnt[0] = m
    return <double> s


def bt_step(src, double a, double b, int lane, bint fused):
    """out[i] = a*src[i] + b*src[i+1]; shifted operand read before writes."""
    arr = np.ascontiguousarray(src)
    if arr.dtype == np.float32:
        return _bt_step_f32(arr, a, b, lane, fused)
    return _bt_step_f64(np.ascontiguousarray(arr, dtype=np.float64), a, b,
                        lane, fused)


cdef _bt_step_f64(double[::1] s, double a, double b, int lane, bint fused):
    cdef Py_ssize_t m = s.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, base, nb
    with nogil:
        nb = (m // lane) * lane
        base = 0
        while base < nb:
            for j in range(lane):
                i = base + j
                if fused:
                    ov[i] = fma(a, s[i], b * s[i + 1])
                else:
                    ov[i] = a * s[i] + b * s[i + 1]
            base += lane
        for i in range(nb, m):
            if fused:
                ov[i] = fma(a, s[i], b * s[i + 1])
            else:
                ov[i] = a * s[i] + b * s[i + 1]
    return out


cdef _bt_step_f32(float[::1] s, double a, double b, int lane, bint fused):
    cdef Py_ssize_t m = s.shape[0] - 1
    out = np.empty(m, dtype=np.float32)
    cdef float[::1] ov = out
    cdef float af = <float> a, bf = <float> b
    cdef Py_ssize_t i, j, base, nb
    with nogil:
        nb = (m // lane) * lane
        base = 0
        while base < nb:
            for j in range(lane):
                i = base + j
                if fused:
                    ov[i] = fmaf(af, s[i], bf * s[i + 1])
                else:
                    ov[i] = af * s[i] + bf * s[i + 1]
            base += lane
        for i in range(nb, m):
            if fused:
                ov[i] = fmaf(af, s[i], bf * s[i + 1])
            else:
                ov[i] = af * s[i] + bf * s[i + 1]
    return out


def bt_induct(values, Py_ssize_t cur_len, Py_ssize_t steps, double a,
              double b, int lane, bint fused):
    """Run ``steps`` backward-induction levels in place; returns new length."""
    if values.dtype == np.float32:
        return _bt_induct_f32(values, cur_len, steps, a, b, fused)
    return _bt_induct_f64(values, cur_len, steps, a, b, fused)


cdef Py_ssize_t _bt_induct_f64(double[::1] v, Py_ssize_t cur_len,
                               Py_ssize_t steps, double a, double b,
                               bint fused):
    cdef Py_ssize_t i, s
    with nogil:
        for s in range(steps):
            if fused:
                for i in range(cur_len - 1):
                    v[i] = fma(a, v[i], b * v[i + 1])
            else:
                for i in range(cur_len - 1):
                    v[i] = a * v[i] + b * v[i + 1]
            cur_len -= 1
    return cur_len


cdef Py_ssize_t _bt_induct_f32(float[::1] v, Py_ssize_t cur_len,
                               Py_ssize_t steps, double a, double b,
                               bint fused):
    cdef float af = <float> a, bf = <float> b
    cdef Py_ssize_t i, s
    with nogil:
        for s in range(steps):
            if fused:
                for i in range(cur_len - 1):
                    v[i] = fmaf(af, v[i], bf * v[i + 1])
            else:
                for i in range(cur_len - 1):
                    v[i] = af * v[i] + bf * v[i + 1]
            cur_len -= 1
    return cur_len


def kahan_sum(values) -> float:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] xs = arr
    cdef double s = 0.0, c = 0.0, y, t
    cdef Py_ssize_t i
    with nogil:
        for i in range(xs.shape[0]):
            y = xs[i] - c
            t = s + y
            c = (t - s) - y
            s = t
    return s
