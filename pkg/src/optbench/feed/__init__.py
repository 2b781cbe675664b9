from .trace import (
    MarketTick,
    TickTrace,
    TraceParseError,
    parse_tick_line,
    read_trace,
    serialize_tick,
    synthetic_trace,
    write_trace,
)
from .transport import (
    DEFAULT_GROUP,
    DEFAULT_PORT,
    ReplayStats,
    Subscription,
    decode_datagram,
    encode_datagram,
    replay,
    subscribe,
)

__all__ = [
    "MarketTick", "TickTrace", "TraceParseError", "parse_tick_line",
    "read_trace", "serialize_tick", "synthetic_trace", "write_trace",
    "DEFAULT_GROUP", "DEFAULT_PORT", "ReplayStats", "Subscription",
    "decode_datagram", "encode_datagram", "replay", "subscribe",
]
