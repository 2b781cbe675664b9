import math

import numpy as np
import pytest

from optbench.pricing import BtCoefficients
from optbench.vecmath import (
    EXP_HI32,
    EXP_HI64,
    EXP_LO32,
    EXP_LO64,
    STATUS_OVERFLOW,
    STATUS_UNDERFLOW,
    KernelVariant,
    LaneConfig,
    bt_inner_step,
    kahan_sum,
    vexp,
)

COEFF = BtCoefficients(up=1.1, down=1 / 1.1, disc_p_up=0.52, disc_p_down=0.47)


# --- configuration types ----------------------------------------------------

def test_lane_config_validation():
    LaneConfig(8, 32)
    with pytest.raises(ValueError):
        LaneConfig(3, 64)
    with pytest.raises(ValueError):
        LaneConfig(4, 16)


@pytest.mark.parametrize("label,width", [
    ("NOVECT", 1), ("AUTOVECT", 1), ("VEC4", 4), ("VEC8", 8), ("VEC16", 16),
    ("INTR4", 4), ("INTR8", 8), ("INTR16", 16),
])
def test_kernel_variant_lane_widths(label, width):
    v = KernelVariant.parse(label.lower())
    assert v.label == label
    assert v.lane_width == width


def test_kernel_variant_rejects_unknown():
    with pytest.raises(ValueError):
        KernelVariant("SSE128")


# --- vexp -------------------------------------------------------------------

def test_vexp_zeros_give_ones(backend):
    out = vexp(np.zeros(4), LaneConfig(4, 32))
    assert np.array_equal(out, np.ones(4, dtype=np.float32))


def test_vexp_single_value_32bit(backend):
    out = vexp(np.array([1.0]), LaneConfig(1, 32))
    assert abs(float(out[0]) - math.e) / math.e < 1e-6


def test_vexp32_oracle_sweep(backend):
    xs = np.random.default_rng(42).uniform(-80, 80, 100_000).astype(np.float32)
    got = vexp(xs, LaneConfig(8, 32)).astype(np.float64)
    oracle = np.exp(xs.astype(np.float64))
    rel = np.abs(got - oracle) / oracle
    assert float(rel.max()) <= 2e-7


def test_vexp64_oracle_sweep(backend):
    xs = np.random.default_rng(43).uniform(-600, 600, 100_000)
    got = vexp(xs, LaneConfig(4, 64))
    oracle = np.exp(xs)
    rel = np.abs(got - oracle) / oracle
    assert float(rel.max()) <= 1e-12


@pytest.mark.parametrize("precision,rtol", [(32, 1e-6), (64, 1e-12)])
def test_vexp_lane_width_invariance(backend, precision, rtol):
    xs = np.random.default_rng(44).uniform(-50, 50, 10_000)
    base = vexp(xs, LaneConfig(1, precision))
    for width in (4, 8, 16):
        out = vexp(xs, LaneConfig(width, precision))
        assert np.allclose(out, base, rtol=rtol, atol=0)


def test_vexp_non_multiple_lengths(backend):
    rng = np.random.default_rng(45)
    for n in (1, 2, 3, 5, 7, 9, 13, 17, 31, 63, 127, 1001):
        xs = rng.uniform(-20, 20, n)
        for width in (4, 8, 16):
            out = vexp(xs, LaneConfig(width, 64))
            assert np.allclose(out, np.exp(xs), rtol=1e-12, atol=0)


def test_vexp_monotone_on_grid(backend):
    for cfg in (LaneConfig(8, 32), LaneConfig(8, 64)):
        grid = np.linspace(-80, 80, 100_001)
        vals = vexp(grid, cfg).astype(np.float64)
        assert np.all(np.diff(vals) >= 0)


def test_vexp_saturation_and_status(backend):
    xs = np.array([0.0, EXP_HI32 + 1.0, EXP_LO32 - 1.0])
    out, status = vexp(xs, LaneConfig(4, 32), return_status=True)
    assert out[1] == np.inf
    assert out[2] == 0.0
    assert status & STATUS_OVERFLOW
    assert status & STATUS_UNDERFLOW

    xs64 = np.array([EXP_HI64 + 1.0, 0.5])
    out64, status64 = vexp(xs64, LaneConfig(1, 64), return_status=True)
    assert out64[0] == np.inf
    assert status64 == STATUS_OVERFLOW

    under64, status_u = vexp(np.array([EXP_LO64 - 1.0]), LaneConfig(1, 64),
                             return_status=True)
    assert under64[0] == 0.0
    assert status_u == STATUS_UNDERFLOW


def test_vexp_in_range_status_clean(backend):
    _, status = vexp(np.linspace(-80, 80, 101), LaneConfig(4, 32),
                     return_status=True)
    assert status == 0


def test_vexp_rejects_non_finite(backend):
    with pytest.raises(ValueError):
        vexp(np.array([1.0, np.nan]), LaneConfig(4, 64))


def test_vexp_backends_bitwise_identical(both_backends):
    if len(both_backends) < 2:
        pytest.skip("only one backend available")
    from optbench import _kernels
    xs32 = np.random.default_rng(46).uniform(-80, 80, 10_001).astype(np.float32)
    xs64 = np.random.default_rng(47).uniform(-600, 600, 10_001)
    outs32, outs64 = [], []
    prev = _kernels.active_name()
    for name in both_backends:
        _kernels.use(name)
        outs32.append(vexp(xs32, LaneConfig(8, 32)))
        outs64.append(vexp(xs64, LaneConfig(8, 64)))
    _kernels.use(prev)
    assert np.array_equal(outs32[0], outs32[1])
    assert np.array_equal(outs64[0], outs64[1])


# --- bt_inner_step ----------------------------------------------------------

def test_bt_inner_step_constant_input(backend):
    c = 3.7
    out = bt_inner_step(np.full(100, c), COEFF, LaneConfig(8, 64))
    expect = (COEFF.disc_p_up + COEFF.disc_p_down) * c
    assert np.allclose(out, expect, rtol=1e-15)


def test_bt_inner_step_identity_weight(backend):
    values = np.random.default_rng(48).uniform(1, 100, 57)
    ident = BtCoefficients(up=1.0, down=1.0, disc_p_up=1.0, disc_p_down=0.0)
    out = bt_inner_step(values, ident, LaneConfig(4, 64))
    assert np.array_equal(out, values[:-1])


def _scalar_step_oracle(values, a, b):
    return np.array([a * values[i] + b * values[i + 1]
                     for i in range(len(values) - 1)])


def test_bt_inner_step_matches_scalar_oracle(backend):
    values = np.random.default_rng(49).uniform(0, 200, 1000)
    oracle = _scalar_step_oracle(values, COEFF.disc_p_up, COEFF.disc_p_down)
    out = bt_inner_step(values, COEFF, LaneConfig(8, 64))
    assert np.allclose(out, oracle, rtol=1e-12, atol=0)


def test_bt_inner_step_tail_handling_property(backend):
    rng = np.random.default_rng(50)
    for n in range(2, 131):
        values = rng.uniform(0, 100, n)
        oracle = _scalar_step_oracle(values, COEFF.disc_p_up, COEFF.disc_p_down)
        for width in (4, 8, 16):
            out = bt_inner_step(values, COEFF, LaneConfig(width, 64))
            assert np.allclose(out, oracle, rtol=1e-12, atol=0), (n, width)


def test_bt_inner_step_lane_invariance_32bit(backend):
    values = np.random.default_rng(51).uniform(0, 100, 10_000)
    base = bt_inner_step(values, COEFF, LaneConfig(1, 32))
    for width in (4, 8, 16):
        out = bt_inner_step(values, COEFF, LaneConfig(width, 32))
        assert np.allclose(out, base, rtol=1e-6, atol=0)


def test_bt_inner_step_fused_within_two_ulp(backend):
    values = np.random.default_rng(52).uniform(0.1, 100, 5000)
    plain = bt_inner_step(values, COEFF, LaneConfig(8, 64))
    fused = bt_inner_step(values, COEFF, LaneConfig(8, 64), fused=True)
    ulps = np.abs(fused - plain) / np.spacing(np.abs(plain))
    assert float(ulps.max()) <= 2.0


def test_bt_inner_step_fused_32bit_within_two_ulp(backend):
    values = np.random.default_rng(53).uniform(0.1, 100, 5000)
    plain = bt_inner_step(values, COEFF, LaneConfig(4, 32))
    fused = bt_inner_step(values, COEFF, LaneConfig(4, 32), fused=True)
    ulps = np.abs(fused.astype(np.float64) - plain.astype(np.float64)) \
        / np.spacing(np.abs(plain.astype(np.float32))).astype(np.float64)
    assert float(ulps.max()) <= 2.0


def test_bt_inner_step_rejects_short_input(backend):
    with pytest.raises(ValueError):
        bt_inner_step(np.array([1.0]), COEFF, LaneConfig(1, 64))


# --- kahan_sum --------------------------------------------------------------

def test_kahan_recovers_small_term(backend):
    assert kahan_sum([1e8, 1.0, -1e8]) == 1.0


def test_kahan_empty_sum(backend):
    assert kahan_sum([]) == 0.0


def test_kahan_vs_extended_precision_oracle(backend):
    values = np.random.default_rng(54).uniform(0.0, 1.0, 1_000_000)
    oracle = float(np.sum(values.astype(np.longdouble)))
    got = kahan_sum(values)
    assert abs(got - oracle) <= np.spacing(oracle)


def test_kahan_error_independent_of_length(backend):
    rng = np.random.default_rng(55)
    for n in (10, 1000, 100_000):
        values = rng.uniform(0.0, 2.0, n)
        oracle = float(np.sum(values.astype(np.longdouble)))
        assert abs(kahan_sum(values) - oracle) <= 2 * np.spacing(oracle)


def test_kahan_rejects_non_finite(backend):
    with pytest.raises(ValueError):
        kahan_sum([1.0, float("inf")])
