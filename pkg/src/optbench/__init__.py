"""optbench: a benchmark harness for real-time option pricing.

Pricing kernels (analytic, Monte Carlo, binomial lattice), a UDP-multicast
tick replay feed, an event-driven pricer service with abandon-on-new-tick
semantics, and platform-independent performance/energy metrics.
"""

from . import _kernels
from .contracts import CALL, PUT, OptionContract, PricingParams, SpotPrice
from .pricing import (
    BtCoefficients,
    black_scholes_price,
    bt_coefficients,
    bt_price,
    mc_price,
    mc_threshold,
    norm_cdf,
)
from .rng import Mt19937, box_muller
from .vecmath import KernelVariant, LaneConfig, bt_inner_step, kahan_sum, vexp

__version__ = "0.1.0"

kernel_backend = _kernels.active_name
