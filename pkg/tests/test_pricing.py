import math

import numpy as np
import pytest
from scipy import integrate
from scipy import special

from optbench import (
    OptionContract,
    PricingParams,
    SpotPrice,
    black_scholes_price,
    bt_coefficients,
    bt_price,
    mc_price,
    mc_threshold,
    norm_cdf,
)
from optbench.pricing import bt_price_detail, mc_price_detail


def _normal_pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def quad_norm_cdf(x: float) -> float:
    """Quadrature oracle for the normal CDF."""
    val, _ = integrate.quad(_normal_pdf, -40.0, x, limit=200)
    return val


def quad_option_price(kind, spot, strike, rate, vol, expiry) -> float:
    """Lognormal-expectation oracle for the analytic price."""
    vst = vol * math.sqrt(expiry)
    drift = (rate - 0.5 * vol * vol) * expiry

    def payoff(z):
        st = spot * math.exp(drift + vst * z)
        pay = st - strike if kind == "call" else strike - st
        return max(0.0, pay) * _normal_pdf(z)

    boundary = (math.log(strike / spot) - drift) / vst
    lo, hi = (boundary, 40.0) if kind == "call" else (-40.0, boundary)
    val, _ = integrate.quad(payoff, lo, hi, limit=400)
    return math.exp(-rate * expiry) * val


# --- norm_cdf ---------------------------------------------------------------

def test_norm_cdf_at_zero_is_half():
    assert norm_cdf(0.0) == 0.5


def test_norm_cdf_against_quadrature_oracle():
    x = 1.959964
    oracle = quad_norm_cdf(x)
    assert abs(oracle - 0.975) < 1e-6
    assert abs(norm_cdf(x) - oracle) < 1e-12


def test_norm_cdf_deep_left_tail():
    # scipy's erfc is an implementation independent of libm's.
    oracle = 0.5 * special.erfc(8.0 / math.sqrt(2.0))
    assert norm_cdf(-8.0) < 1e-14
    assert abs(norm_cdf(-8.0) - oracle) < 1e-17


def test_norm_cdf_symmetry_property():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-6, 6, 500):
        assert abs(norm_cdf(x) + norm_cdf(-x) - 1.0) < 1e-15


def test_norm_cdf_monotone():
    xs = np.sort(np.random.default_rng(3).uniform(-10, 10, 1000))
    vals = [norm_cdf(float(x)) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_norm_cdf_rejects_non_finite():
    with pytest.raises(ValueError):
        norm_cdf(float("nan"))
    with pytest.raises(ValueError):
        norm_cdf(float("inf"))


# --- black_scholes_price ----------------------------------------------------

SPOT = SpotPrice(100.0)


def test_bs_atm_zero_rate_call_equals_put():
    c = OptionContract("c", "call", 100.0, 1.0)
    p = OptionContract("p", "put", 100.0, 1.0)
    params = PricingParams(rate=0.0, volatility=0.2)
    assert black_scholes_price(c, SPOT, params) == pytest.approx(
        black_scholes_price(p, SPOT, params), abs=1e-12)


def test_bs_atm_value_against_quadrature_oracle():
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(rate=0.0, volatility=0.2)
    got = black_scholes_price(c, SPOT, params)
    oracle = quad_option_price("call", 100.0, 100.0, 0.0, 0.2, 1.0)
    assert abs(got - 7.9656) < 1e-3
    assert abs(got - oracle) < 1e-9


def test_bs_vanishing_volatility_limit():
    c = OptionContract("c", "call", 50.0, 1.0)
    params = PricingParams(rate=0.05, volatility=1e-6)
    got = black_scholes_price(c, SPOT, params)
    assert abs(got - (100.0 - 50.0 * math.exp(-0.05))) < 1e-9


def test_bs_put_call_parity_property():
    rng = np.random.default_rng(7)
    for _ in range(200):
        s = float(rng.uniform(20, 500))
        k = float(rng.uniform(20, 500))
        r = float(rng.uniform(0.0, 0.1))
        sig = float(rng.uniform(0.05, 0.8))
        t = float(rng.uniform(0.05, 3.0))
        call = black_scholes_price(OptionContract("c", "call", k, t),
                                   SpotPrice(s), PricingParams(r, sig))
        put = black_scholes_price(OptionContract("p", "put", k, t),
                                  SpotPrice(s), PricingParams(r, sig))
        assert abs(call - put - (s - k * math.exp(-r * t))) < 1e-9 * s


def test_bs_prices_nonnegative():
    rng = np.random.default_rng(8)
    for _ in range(100):
        k = float(rng.uniform(20, 500))
        contract = OptionContract("x", rng.choice(["call", "put"]), k, 0.5)
        params = PricingParams(0.02, 0.3)
        assert black_scholes_price(contract, SPOT, params) >= 0.0


def test_invalid_domain_rejected_at_type_level():
    with pytest.raises(ValueError):
        PricingParams(rate=0.0, volatility=0.0)
    with pytest.raises(ValueError):
        OptionContract("x", "call", 100.0, 0.0)
    with pytest.raises(ValueError):
        OptionContract("x", "straddle", 100.0, 1.0)
    with pytest.raises(ValueError):
        SpotPrice(-1.0)


# --- mc_threshold -----------------------------------------------------------

def test_threshold_zero_when_strike_equals_forward():
    r, sig, t = 0.01, 0.2, 1.0
    strike = 100.0 * math.exp((r - 0.5 * sig * sig) * t)
    c = OptionContract("c", "call", strike, t)
    thr = mc_threshold(c, SPOT, PricingParams(r, sig))
    assert abs(thr) < 1e-12


def _payoff_sign_flip_oracle(kind, spot, strike, r, sig, t):
    """Scan draws on a fine grid and locate the payoff sign change."""
    vst = sig * math.sqrt(t)
    drift = (r - 0.5 * sig * sig) * t
    xs = np.linspace(-8, 8, 2_000_001)
    st = spot * np.exp(drift + vst * xs)
    pay = st - strike if kind == "call" else strike - st
    signs = pay > 0
    idx = np.nonzero(signs[1:] != signs[:-1])[0]
    assert len(idx) == 1
    return 0.5 * (xs[idx[0]] + xs[idx[0] + 1])


def test_threshold_matches_sign_flip_oracle_otm():
    c = OptionContract("c", "call", 110.0, 1.0)
    params = PricingParams(0.01, 0.2)
    thr = mc_threshold(c, SPOT, params)
    oracle = _payoff_sign_flip_oracle("call", 100.0, 110.0, 0.01, 0.2, 1.0)
    assert abs(thr - oracle) < 1e-5  # grid resolution
    assert thr > 0


def test_threshold_negative_when_in_the_money():
    c = OptionContract("c", "call", 90.0, 1.0)
    params = PricingParams(0.01, 0.2)
    thr = mc_threshold(c, SPOT, params)
    oracle = _payoff_sign_flip_oracle("call", 100.0, 90.0, 0.01, 0.2, 1.0)
    assert abs(thr - oracle) < 1e-5
    assert thr < 0


def test_threshold_identical_for_put_and_call():
    call = OptionContract("c", "call", 105.0, 0.5)
    put = OptionContract("p", "put", 105.0, 0.5)
    params = PricingParams(0.02, 0.3)
    assert mc_threshold(call, SPOT, params) == mc_threshold(put, SPOT, params)


# --- mc_price ---------------------------------------------------------------

def test_mc_deterministic_bitwise(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.0, 0.2)
    a = mc_price(c, SPOT, params, 50_000, 99)
    b = mc_price(c, SPOT, params, 50_000, 99)
    assert a == b


def test_mc_screening_equivalence_quick(backend):
    rng = np.random.default_rng(5)
    for _ in range(10):
        kind = rng.choice(["call", "put"])
        c = OptionContract("c", kind, float(rng.uniform(80, 120)),
                           float(rng.uniform(0.25, 1.0)))
        params = PricingParams(float(rng.uniform(0, 0.05)),
                               float(rng.uniform(0.1, 0.4)))
        seed = int(rng.integers(0, 2 ** 31))
        on = mc_price(c, SPOT, params, 100_000, seed, screening=True)
        off = mc_price(c, SPOT, params, 100_000, seed, screening=False)
        assert abs(on - off) <= 1e-6 * abs(off)


def test_mc_vanishing_volatility_limit(backend):
    c = OptionContract("c", "call", 50.0, 1.0)
    params = PricingParams(0.0, 0.01)
    spot = SpotPrice(200.0)
    got = mc_price(c, spot, params, 10_000, 4)
    assert abs(got - 150.0) < 0.5
    assert abs(got - black_scholes_price(c, spot, params)) < 0.5


def test_mc_rejects_zero_draws():
    c = OptionContract("c", "call", 100.0, 1.0)
    with pytest.raises(ValueError):
        mc_price(c, SPOT, PricingParams(0.0, 0.2), 0, 1)


def test_mc_variants_agree_loosely(backend):
    from optbench.vecmath import KernelVariant
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.05, 0.2)
    base = mc_price(c, SPOT, params, 100_000, 17)
    for label in ("AUTOVECT", "VEC4", "VEC8", "VEC16", "INTR8"):
        v = mc_price(c, SPOT, params, 100_000, 17,
                     variant=KernelVariant(label))
        assert v == pytest.approx(base, rel=1e-5)


def test_mc_float32_close_to_float64(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.05, 0.2)
    v64 = mc_price(c, SPOT, params, 100_000, 17)
    v32 = mc_price(c, SPOT, params, 100_000, 17, precision=32)
    assert v32 == pytest.approx(v64, rel=1e-4)


def test_mc_detail_phase_timings(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    out = mc_price_detail(c, SPOT, PricingParams(0.0, 0.2), 200_000, 3)
    assert out.price is not None and not out.cancelled
    assert out.prep_ns > 0 and out.loop_ns > 0


# --- binomial tree ----------------------------------------------------------

def test_bt_coefficients_single_step():
    params = PricingParams(0.0, 0.2)
    co = bt_coefficients(params, 1.0, 1)
    assert co.up == math.exp(0.2)
    assert co.down == 1.0 / math.exp(0.2)


def test_bt_coefficients_up_down_product_one():
    rng = np.random.default_rng(6)
    for _ in range(100):
        params = PricingParams(float(rng.uniform(0, 0.1)),
                               float(rng.uniform(0.05, 0.8)))
        co = bt_coefficients(params, float(rng.uniform(0.1, 3)),
                             int(rng.integers(1, 10000)))
        assert abs(co.up * co.down - 1.0) <= np.spacing(1.0)


def test_bt_coefficients_weights_sum_to_discount():
    # Extended-precision oracle for the risk-neutral weights.  The weights
    # individually carry the cancellation error of (e^{r dt} - d), but that
    # error cancels in their sum, which must hit the discount to a few ulp.
    params = PricingParams(0.05, 0.2)
    co = bt_coefficients(params, 1.0, 5000)
    dt = np.longdouble(1.0) / 5000
    u = np.exp(np.longdouble(0.2) * np.sqrt(dt))
    d = 1 / u
    growth = np.exp(np.longdouble(0.05) * dt)
    p = (growth - d) / (u - d)
    disc = np.exp(-np.longdouble(0.05) * dt)
    assert co.disc_p_up == pytest.approx(float(disc * p), rel=1e-12)
    assert co.disc_p_down == pytest.approx(float(disc * (1 - p)), rel=1e-12)
    target = math.exp(-0.05 / 5000)
    assert abs((co.disc_p_up + co.disc_p_down) - target) <= 4 * np.spacing(target)


def test_bt_coefficients_sum_to_discount_property():
    rng = np.random.default_rng(21)
    for _ in range(100):
        r = float(rng.uniform(0, 0.1))
        params = PricingParams(r, float(rng.uniform(0.05, 0.8)))
        t = float(rng.uniform(0.1, 3))
        n = int(rng.integers(1, 10000))
        co = bt_coefficients(params, t, n)
        assert co.disc_p_up > 0 and co.disc_p_down > 0
        target = math.exp(-r * t / n)
        assert abs((co.disc_p_up + co.disc_p_down) - target) <= 4 * np.spacing(target)


def test_bt_coefficients_rejects_bad_args():
    params = PricingParams(0.05, 0.2)
    with pytest.raises(ValueError):
        bt_coefficients(params, 1.0, 0)
    with pytest.raises(ValueError):
        bt_coefficients(params, 0.0, 10)
    with pytest.raises(ValueError):
        # drift dominates the lattice spread: weight falls outside (0,1)
        bt_coefficients(PricingParams(0.5, 1e-6), 1.0, 10)


def test_bt_two_leaf_tree_hand_value(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.0, 0.2)
    u = math.exp(0.2)
    d = 1.0 / u
    p = (1.0 - d) / (u - d)
    hand = p * max(u * 100.0 - 100.0, 0.0) + (1 - p) * max(d * 100.0 - 100.0, 0.0)
    assert bt_price(c, SPOT, params, 1) == pytest.approx(hand, rel=1e-15)


def test_bt_converges_to_analytic(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.0, 0.2)
    bs = black_scholes_price(c, SPOT, params)
    bt = bt_price(c, SPOT, params, 5000)
    assert abs(bt - bs) / bs < 1e-3


def test_bt_impossible_put_payoff_is_zero(backend):
    params = PricingParams(0.0, 1e-6)
    n = 100
    d_n = math.exp(-1e-6 * math.sqrt(1.0 / n) * n)
    strike = 100.0 * d_n * 0.999  # below the lowest reachable node
    c = OptionContract("p", "put", strike, 1.0)
    assert bt_price(c, SPOT, params, n) == 0.0


def _full_matrix_bt_oracle(contract, spot, params, n):
    """Whole-lattice storage oracle: every level kept, same arithmetic."""
    co = bt_coefficients(params, contract.time_to_expiry, n)
    dt = contract.time_to_expiry / n
    sqdt = params.volatility * math.sqrt(dt)
    exponents = (n - 2.0 * np.arange(n + 1, dtype=np.float64)) * sqdt
    leaves = spot.value * np.exp(exponents)
    if contract.is_call:
        level = [max(s - contract.strike, 0.0) for s in leaves.tolist()]
    else:
        level = [max(contract.strike - s, 0.0) for s in leaves.tolist()]
    levels = [level]
    for m in range(n, 0, -1):
        prev = levels[-1]
        levels.append([co.disc_p_up * prev[i] + co.disc_p_down * prev[i + 1]
                       for i in range(m)])
    return levels[-1][0]


def test_bt_storage_strategy_invariance(backend):
    rng = np.random.default_rng(12)
    for _ in range(20):
        kind = rng.choice(["call", "put"])
        c = OptionContract("c", kind, float(rng.uniform(80, 120)),
                           float(rng.uniform(0.25, 2.0)))
        params = PricingParams(float(rng.uniform(0, 0.05)),
                               float(rng.uniform(0.1, 0.4)))
        n = int(rng.integers(1, 101))
        got = bt_price(c, SPOT, params, n)
        oracle = _full_matrix_bt_oracle(c, SPOT, params, n)
        assert got == oracle


def test_bt_convergence_improves_with_steps(backend):
    rng = np.random.default_rng(13)
    params = PricingParams(0.02, 0.25)
    for _ in range(10):
        kind = rng.choice(["call", "put"])
        c = OptionContract("c", kind, float(rng.uniform(85, 115)), 1.0)
        bs = black_scholes_price(c, SPOT, params)
        err_coarse = abs(bt_price(c, SPOT, params, 400) - bs) / bs
        err_fine = abs(bt_price(c, SPOT, params, 4000) - bs) / bs
        assert err_fine < err_coarse


def test_bt_rejects_zero_steps():
    c = OptionContract("c", "call", 100.0, 1.0)
    with pytest.raises(ValueError):
        bt_price(c, SPOT, PricingParams(0.0, 0.2), 0)


def test_bt_lattice_overflow_raises(backend):
    c = OptionContract("c", "call", 100.0, 100.0)
    with pytest.raises(OverflowError):
        bt_price(c, SPOT, PricingParams(0.0, 4.0), 10_000)


def test_bt_variants_identical(backend):
    from optbench.vecmath import KernelVariant
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.05, 0.2)
    base = bt_price(c, SPOT, params, 1000)
    for label in ("AUTOVECT", "VEC4", "VEC8", "VEC16", "INTR16"):
        assert bt_price(c, SPOT, params, 1000,
                        variant=KernelVariant(label)) == base


def test_bt_detail_phases_and_float32(backend):
    c = OptionContract("c", "call", 100.0, 1.0)
    params = PricingParams(0.05, 0.2)
    out = bt_price_detail(c, SPOT, params, 2000)
    assert out.prep_ns >= 0 and out.loop_ns > 0
    v32 = bt_price(c, SPOT, params, 2000, precision=32)
    assert v32 == pytest.approx(out.price, rel=1e-4)
