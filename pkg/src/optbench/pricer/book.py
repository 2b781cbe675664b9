"""Contract books: the per-symbol option set priced on every tick."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..contracts import CALL, PUT, OptionContract


@dataclass
class ContractBook:
    """All listed contracts for one underlying symbol."""

    symbol: str
    contracts: list[OptionContract] = field(default_factory=list)

    def __post_init__(self):
        if not self.contracts:
            raise ValueError("a contract book cannot be empty")
        ids = [c.id for c in self.contracts]
        if len(set(ids)) != len(ids):
            raise ValueError("contract ids must be unique within a book")

    def __len__(self) -> int:
        return len(self.contracts)

    def __iter__(self):
        return iter(self.contracts)


def partition_book(book: ContractBook, workers: int) -> list[list[int]]:
    """Assign contract indices to workers in contiguous, near-equal chunks.

    Every contract lands on exactly one worker and load sizes differ by at
    most one; with fewer contracts than workers the surplus workers get
    empty assignments.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    n = len(book)
    base, rem = divmod(n, workers)
    parts: list[list[int]] = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < rem else 0)
        parts.append(list(range(start, start + size)))
        start += size
    return parts


def write_book(book: ContractBook, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,kind,strike,expiry_years\n")
        for c in book.contracts:
            fh.write(f"{c.id},{c.kind},{c.strike!r},{c.time_to_expiry!r}\n")


def read_book(path, symbol: str | None = None) -> ContractBook:
    contracts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("id,"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(
                    f"{path}: line {line_no}: expected 4 fields, got {len(parts)}")
            cid, kind, strike, expiry = parts
            try:
                contracts.append(OptionContract(cid, kind.strip().lower(),
                                                float(strike), float(expiry)))
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from None
    return ContractBook(symbol=symbol or "UNKNOWN", contracts=contracts)


def make_book(size: int, *, symbol: str = "SYN", strike_lo: float = 50.0,
              strike_hi: float = 150.0,
              expiries: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)) -> ContractBook:
    """Build a synthetic book: call/put pairs over a strike grid per expiry."""
    if size < 1:
        raise ValueError(f"book size must be >= 1, got {size}")
    if not strike_lo > 0 or strike_hi <= strike_lo:
        raise ValueError("need 0 < strike_lo < strike_hi")
    contracts = []
    n_strikes = max(1, (size + 2 * len(expiries) - 1) // (2 * len(expiries)))
    step = (strike_hi - strike_lo) / max(1, n_strikes - 1)
    i = 0
    for s in range(n_strikes):
        strike = strike_lo + s * step if n_strikes > 1 else strike_lo
        for expiry in expiries:
            for kind in (CALL, PUT):
                if i >= size:
                    break
                contracts.append(OptionContract(
                    f"{symbol}-{i:04d}", kind, round(strike, 6), expiry))
                i += 1
    return ContractBook(symbol=symbol, contracts=contracts[:size])
