"""Domain types shared by the pricing kernels and the pricer service."""

from __future__ import annotations

import math
from dataclasses import dataclass

CALL = "call"
PUT = "put"


@dataclass(frozen=True)
class OptionContract:
    """One exchange-listed European vanilla contract on an underlying.

    Parameters
    ----------
    id : str
        Opaque identifier, unique within a book.
    kind : str
        ``"call"`` or ``"put"``.
    strike : float
        Strike price, > 0.
    time_to_expiry : float
        Time to expiry in years, > 0.
    """

    id: str
    kind: str
    strike: float
    time_to_expiry: float

    def __post_init__(self):
        if self.kind not in (CALL, PUT):
            raise ValueError(f"kind must be {CALL!r} or {PUT!r}, got {self.kind!r}")
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise ValueError(f"strike must be positive, got {self.strike}")
        if not (math.isfinite(self.time_to_expiry) and self.time_to_expiry > 0):
            raise ValueError(
                f"time_to_expiry must be positive, got {self.time_to_expiry}"
            )

    @property
    def is_call(self) -> bool:
        return self.kind == CALL


@dataclass(frozen=True)
class PricingParams:
    """Market environment: risk-free rate (per year) and volatility (per sqrt-year)."""

    rate: float
    volatility: float

    def __post_init__(self):
        if not math.isfinite(self.rate):
            raise ValueError(f"rate must be finite, got {self.rate}")
        if not (math.isfinite(self.volatility) and self.volatility > 0):
            raise ValueError(f"volatility must be positive, got {self.volatility}")


@dataclass(frozen=True)
class SpotPrice:
    """Current price of the underlying asset."""

    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValueError(f"spot price must be positive, got {self.value}")
