"""Analytic and numerical option pricing kernels.

Three routes to a European vanilla price: the closed-form solution, a Monte
Carlo average of discounted payoffs over MT19937/Box-Muller draws (with
optional threshold pre-screening and the factored sum it enables), and a
recombining-lattice backward induction.  The numerical kernels converge to
the closed form as their iteration counts grow, which is what the accuracy
suite enforces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .contracts import OptionContract, PricingParams, SpotPrice
from .rng import Mt19937
from .vecmath import KernelVariant

MC_CHECK_DRAWS = 65536  # cancellation checkpoint interval, MC draws
BT_CHECK_LEVELS = 64    # cancellation checkpoint interval, lattice levels

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class CancelToken:
    """Cooperative cancellation flag observed at kernel checkpoints.

    ``flag`` is a shared one-element int64 array holding the newest tick
    generation; a task created for ``generation`` is cancelled once the
    flag moves past it.  Plain loads/stores keep kernels lock-free.
    """

    __slots__ = ("flag", "generation")

    def __init__(self, flag, generation: int):
        self.flag = flag
        self.generation = generation

    def is_cancelled(self) -> bool:
        return int(self.flag[0]) != self.generation


@dataclass
class KernelOutcome:
    """Result of one kernel invocation, with phase timings.

    ``prep_ns`` covers random-number generation (MC) or leaf construction
    (BT); ``loop_ns`` covers the payoff sum or the backward induction.
    """

    price: float | None
    cancelled: bool
    prep_ns: int
    loop_ns: int


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    if not math.isfinite(x):
        raise ValueError(f"norm_cdf input must be finite, got {x}")
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def black_scholes_price(contract: OptionContract, spot: SpotPrice,
                        params: PricingParams) -> float:
    """Closed-form European vanilla price.

    d1 = (ln(S/K) + (r + sigma^2/2) T) / (sigma sqrt(T)), d2 = d1 - sigma
    sqrt(T); Call = S N(d1) - K e^{-rT} N(d2), Put by the mirrored signs.
    """
    s = spot.value
    k = contract.strike
    t = contract.time_to_expiry
    r = params.rate
    sig = params.volatility
    sq = sig * math.sqrt(t)
    d1 = (math.log(s / k) + (r + 0.5 * sig * sig) * t) / sq
    d2 = d1 - sq
    disc_k = k * math.exp(-r * t)
    if contract.is_call:
        price = s * norm_cdf(d1) - disc_k * norm_cdf(d2)
    else:
        price = disc_k * norm_cdf(-d2) - s * norm_cdf(-d1)
    return max(0.0, price)


def mc_threshold(contract: OptionContract, spot: SpotPrice,
                 params: PricingParams) -> float:
    """Normal-draw value at which the simulated payoff changes sign.

    A call pays off exactly for draws above this threshold, a put for draws
    below it, which lets the sum loop skip zero-payoff terms and factor the
    loop-invariant multiplies out of the sum.
    """
    t = contract.time_to_expiry
    sig = params.volatility
    vst = sig * math.sqrt(t)
    forward = spot.value * math.exp((params.rate - 0.5 * sig * sig) * t)
    return math.log(contract.strike / forward) / vst


def mc_price(contract: OptionContract, spot: SpotPrice, params: PricingParams,
             n: int, seed: int, screening: bool = True, *,
             variant: KernelVariant = KernelVariant("NOVECT"),
             precision: int = 64) -> float:
    """Monte Carlo price over ``n`` draws of a fixed, seed-determined stream.

    With ``screening`` the kernel sums only threshold-passing exponentials
    and applies the factored strike/forward terms once at the end; the
    screened and unscreened routes are algebraically identical and agree to
    float reassociation error.
    """
    out = mc_price_detail(contract, spot, params, n, seed, screening,
                          variant=variant, precision=precision)
    return out.price


def mc_price_detail(contract: OptionContract, spot: SpotPrice,
                    params: PricingParams, n: int, seed: int,
                    screening: bool = True, *,
                    variant: KernelVariant = KernelVariant("NOVECT"),
                    precision: int = 64,
                    cancel: CancelToken | None = None) -> KernelOutcome:
    if n < 1:
        raise ValueError(f"draw count must be >= 1, got {n}")
    kern = _kernels.active()
    t = contract.time_to_expiry
    r = params.rate
    sig = params.volatility
    vst = sig * math.sqrt(t)
    forward = spot.value * math.exp((r - 0.5 * sig * sig) * t)
    thr = math.log(contract.strike / forward) / vst
    exp_mode = kern.EXP_MODE_POLY if variant.explicit_lanes else kern.EXP_MODE_LIBM
    lane = variant.lane_width

    mt = Mt19937(seed)
    acc = 0.0
    comp = 0.0
    m_total = 0
    prep_ns = 0
    loop_ns = 0
    done = 0
    while done < n:
        if cancel is not None and cancel.is_cancelled():
            return KernelOutcome(None, True, prep_ns, loop_ns)
        take = min(MC_CHECK_DRAWS, n - done)
        t0 = time.perf_counter_ns()
        z = mt.normals(take)
        t1 = time.perf_counter_ns()
        partial, m = kern.mc_payoff_sum(
            z, forward, vst, contract.strike, contract.is_call, screening,
            thr, exp_mode, precision, lane)
        loop_ns += time.perf_counter_ns() - t1
        prep_ns += t1 - t0
        # Kahan-combine the chunk partials.
        y = partial - comp
        tt = acc + y
        comp = (tt - acc) - y
        acc = tt
        m_total += m
        done += take

    if screening:
        if contract.is_call:
            total = forward * acc - m_total * contract.strike
        else:
            total = m_total * contract.strike - forward * acc
    else:
        total = acc
    price = max(0.0, math.exp(-r * t) / n * total)
    return KernelOutcome(price, False, prep_ns, loop_ns)


@dataclass(frozen=True)
class BtCoefficients:
    """Lattice factors: up/down moves and discounted risk-neutral weights.

    up*down = 1 by construction and disc_p_up + disc_p_down equals the
    per-step discount e^{-r dt} up to a few ulp.
    """

    up: float
    down: float
    disc_p_up: float
    disc_p_down: float


def bt_coefficients(params: PricingParams, expiry: float,
                    n_steps: int) -> BtCoefficients:
    """Per-step lattice coefficients for ``expiry / n_steps`` level spacing."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if not (math.isfinite(expiry) and expiry > 0):
        raise ValueError(f"expiry must be positive, got {expiry}")
    dt = expiry / n_steps
    u = math.exp(params.volatility * math.sqrt(dt))
    d = 1.0 / u
    growth = math.exp(params.rate * dt)
    p = (growth - d) / (u - d)
    if not 0.0 < p < 1.0:
        raise ValueError(
            f"risk-neutral weight {p} outside (0,1): per-step drift exceeds "
            f"the lattice spread; increase volatility or reduce n_steps")
    disc = math.exp(-params.rate * dt)
    return BtCoefficients(up=u, down=d, disc_p_up=disc * p,
                          disc_p_down=disc * (1.0 - p))


def bt_price(contract: OptionContract, spot: SpotPrice, params: PricingParams,
             n_steps: int, *, variant: KernelVariant = KernelVariant("NOVECT"),
             precision: int = 64) -> float:
    """Lattice price by discounted backward induction over ``n_steps`` levels.

    Only one vector of node values is held; each level overwrites it in
    place (reading the shifted neighbor before writing, which resolves the
    anti-dependency of the recurrence).
    """
    out = bt_price_detail(contract, spot, params, n_steps, variant=variant,
                          precision=precision)
    return out.price


def bt_price_detail(contract: OptionContract, spot: SpotPrice,
                    params: PricingParams, n_steps: int, *,
                    variant: KernelVariant = KernelVariant("NOVECT"),
                    precision: int = 64, fused: bool = False,
                    cancel: CancelToken | None = None) -> KernelOutcome:
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    kern = _kernels.active()
    coeff = bt_coefficients(params, contract.time_to_expiry, n_steps)
    dtype = np.float32 if precision == 32 else np.float64

    t0 = time.perf_counter_ns()
    dt = contract.time_to_expiry / n_steps
    sqdt = params.volatility * math.sqrt(dt)
    # Terminal node prices S * u^(n-j) * d^j, j = 0..n, highest first: the
    # recurrence weights x_i with the up coefficient, so x_i must be the
    # up-successor of node i at the previous level.
    exponents = (n_steps - 2.0 * np.arange(n_steps + 1, dtype=np.float64)) * sqdt
    with np.errstate(over="ignore"):
        leaves = spot.value * np.exp(exponents)
    if not np.isfinite(leaves).all():
        raise OverflowError(
            f"lattice value overflow: up^{n_steps} is not finite")
    if contract.is_call:
        values = np.maximum(leaves - contract.strike, 0.0)
    else:
        values = np.maximum(contract.strike - leaves, 0.0)
    values = np.ascontiguousarray(values, dtype=dtype)
    prep_ns = time.perf_counter_ns() - t0

    t1 = time.perf_counter_ns()
    cur = n_steps + 1
    lane = variant.lane_width
    while cur > 1:
        if cancel is not None and cancel.is_cancelled():
            return KernelOutcome(None, True, prep_ns,
                                 time.perf_counter_ns() - t1)
        steps = min(BT_CHECK_LEVELS, cur - 1)
        cur = kern.bt_induct(values, cur, steps, coeff.disc_p_up,
                             coeff.disc_p_down, lane, fused)
    loop_ns = time.perf_counter_ns() - t1
    return KernelOutcome(float(values[0]), False, prep_ns, loop_ns)
