"""Tick traces: the on-disk CSV format, parsing, and synthetic generation.

Trace files are UTF-8 CSV with a header line

    #optbench-trace v1 <symbol-count> <wallclock-iso8601>

followed by ``timestamp_ns,symbol,price`` rows.  Timestamps are integer
nanoseconds since session start and must be nondecreasing; prices use the
shortest round-trip float representation so that read(write(trace)) is
bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = "v1"
DEFAULT_WALLCLOCK = "1970-01-01T00:00:00+00:00"

MAX_SYMBOL_LEN = 15


class TraceParseError(ValueError):
    """Malformed trace content; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class MarketTick:
    """One timestamped spot-price update; the unit of workload arrival."""

    timestamp_ns: int
    symbol: str
    price: float
    seq: int = 0

    def __post_init__(self):
        if self.timestamp_ns < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp_ns}")
        if not self.symbol or len(self.symbol) > MAX_SYMBOL_LEN:
            raise ValueError(f"symbol must be 1..{MAX_SYMBOL_LEN} chars")
        if not self.symbol.isascii() or "," in self.symbol or self.symbol != self.symbol.strip():
            raise ValueError(f"symbol must be plain ASCII without commas, got {self.symbol!r}")
        if not (math.isfinite(self.price) and self.price > 0):
            raise ValueError(f"price must be positive, got {self.price}")


def parse_tick_line(line: str, line_no: int | None = None, seq: int = 0) -> MarketTick:
    """Parse one ``timestamp_ns,symbol,price`` row."""
    parts = line.strip().split(",")
    if len(parts) != 3:
        raise TraceParseError(f"expected 3 fields, got {len(parts)}", line_no)
    ts_text, symbol, price_text = parts
    try:
        ts = int(ts_text)
    except ValueError:
        raise TraceParseError(f"bad timestamp {ts_text!r}", line_no) from None
    try:
        price = float(price_text)
    except ValueError:
        raise TraceParseError(f"bad price {price_text!r}", line_no) from None
    try:
        return MarketTick(timestamp_ns=ts, symbol=symbol, price=price, seq=seq)
    except ValueError as exc:
        raise TraceParseError(str(exc), line_no) from None


def serialize_tick(tick: MarketTick) -> str:
    """Canonical CSV form; parse(serialize(t)) == t for any valid tick."""
    return f"{tick.timestamp_ns},{tick.symbol},{tick.price!r}"


@dataclass
class TickTrace:
    """An ordered tick sequence plus file-header metadata."""

    ticks: list[MarketTick] = field(default_factory=list)
    wallclock: str = DEFAULT_WALLCLOCK
    version: str = FORMAT_VERSION

    def __post_init__(self):
        last = -1
        for i, t in enumerate(self.ticks):
            if t.timestamp_ns < last:
                raise ValueError(
                    f"timestamps must be nondecreasing (tick {i} at "
                    f"{t.timestamp_ns} after {last})")
            last = t.timestamp_ns

    def __len__(self) -> int:
        return len(self.ticks)

    def __iter__(self):
        return iter(self.ticks)

    @property
    def symbols(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.ticks:
            seen.setdefault(t.symbol, None)
        return list(seen)

    def gaps_seconds(self) -> np.ndarray:
        """Inter-arrival gaps in seconds (length len-1)."""
        ts = np.array([t.timestamp_ns for t in self.ticks], dtype=np.int64)
        return np.diff(ts) / 1e9


def write_trace(trace: TickTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#optbench-trace {trace.version} {len(trace.symbols)} "
                 f"{trace.wallclock}\n")
        for tick in trace.ticks:
            fh.write(serialize_tick(tick) + "\n")


def read_trace(path) -> TickTrace:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#optbench-trace "):
            raise TraceParseError("missing #optbench-trace header", 1)
        fields = header.strip().split(" ")
        if len(fields) != 4:
            raise TraceParseError(f"bad header {header.strip()!r}", 1)
        _, version, _count, wallclock = fields
        if version != FORMAT_VERSION:
            raise TraceParseError(f"unsupported trace version {version!r}", 1)
        ticks = []
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            ticks.append(parse_tick_line(line, line_no=line_no, seq=len(ticks)))
    return TickTrace(ticks=ticks, wallclock=wallclock, version=version)


def synthetic_trace(arrivals: str, rate_hz: float, count: int, seed: int, *,
                    symbol: str = "SYN", start_price: float = 100.0,
                    step_vol: float = 0.001,
                    wallclock: str = DEFAULT_WALLCLOCK) -> TickTrace:
    """Generate a deterministic trace with Poisson or fixed-interval arrivals.

    Prices follow a multiplicative random walk with per-tick log volatility
    ``step_vol``.  Stands in for proprietary exchange captures while keeping
    the arrival process controllable.
    """
    if arrivals not in ("poisson", "fixed"):
        raise ValueError(f"arrivals must be 'poisson' or 'fixed', got {arrivals!r}")
    if rate_hz <= 0:
        raise ValueError(f"rate must be positive, got {rate_hz}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    if arrivals == "fixed":
        ts = (np.arange(count, dtype=np.int64) * round(1e9 / rate_hz)).astype(np.int64)
    else:
        gaps = rng.exponential(1.0 / rate_hz, size=count - 1)
        ts = np.zeros(count, dtype=np.int64)
        ts[1:] = np.cumsum(np.round(gaps * 1e9).astype(np.int64))
    steps = rng.normal(0.0, step_vol, size=count)
    prices = start_price * np.exp(np.cumsum(steps))
    ticks = [
        MarketTick(timestamp_ns=int(ts[i]), symbol=symbol,
                   price=float(prices[i]), seq=i)
        for i in range(count)
    ]
    return TickTrace(ticks=ticks, wallclock=wallclock)
