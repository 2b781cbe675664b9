"""The event-driven option pricer service.

Every tick enqueues the full contract book across a statically partitioned
worker pool.  When a newer tick arrives, unstarted pricings for the older
tick are marked abandoned at the arrival instant, and in-flight kernels
notice at their next cancellation checkpoint; a kernel that reaches
completion keeps its result, which bounds the staleness of any successful
price by one checkpoint interval.

Two engines share those semantics: a threaded one driven by real arrivals
and wall-clock kernels, and a virtual-time discrete-event one with a mock
kernel of configurable cost, which makes QoS reproducible to the exact
record.
"""

from __future__ import annotations

import heapq
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..contracts import PricingParams, SpotPrice
from ..pricing import CancelToken, KernelOutcome, bt_price_detail, mc_price_detail
from ..vecmath import KernelVariant
from .book import ContractBook, partition_book

SUCCESS = "success"
ABANDONED = "abandoned"
ERRORED = "errored"

DEFAULT_CHECKPOINT_NS = 1_000_000  # virtual-mode cancellation granularity


@dataclass(frozen=True)
class PricingRecord:
    """One attempted contract pricing for one tick."""

    contract_id: str
    tick_seq: int
    worker_id: int
    slot: int  # position within the worker's partition
    status: str
    start_ns: int
    end_ns: int
    price: float | None = None
    phase_prep_ns: int | None = None
    phase_loop_ns: int | None = None


@dataclass
class SessionLog:
    """Run metadata, the ordered pricing records, and tick arrival times."""

    metadata: dict
    records: list[PricingRecord] = field(default_factory=list)
    ticks: list[dict] = field(default_factory=list)  # {seq, arrival_ns, price}
    error: str | None = None

    def counts(self) -> dict:
        out = {SUCCESS: 0, ABANDONED: 0, ERRORED: 0}
        for r in self.records:
            out[r.status] += 1
        return out


@dataclass(frozen=True)
class ModelConfig:
    """Which kernel a session runs, and how."""

    model: str  # "mc" | "bt"
    n: int
    params: PricingParams
    variant: KernelVariant = KernelVariant("NOVECT")
    precision: int = 64
    base_seed: int = 12345
    screening: bool = True

    def __post_init__(self):
        if self.model not in ("mc", "bt"):
            raise ValueError(f"model must be 'mc' or 'bt', got {self.model!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.precision not in (32, 64):
            raise ValueError(f"precision must be 32 or 64, got {self.precision}")


def _seed_for(base: int, tick_seq: int, contract_idx: int) -> int:
    # Depends only on (tick, contract): reproducible across worker counts.
    return base + tick_seq * 1_000_003 + contract_idx


def make_kernel(config: ModelConfig):
    """Bind a ModelConfig to a callable(contract, spot, seed, cancel)."""
    if config.model == "mc":
        def kernel(contract, spot, seed, cancel) -> KernelOutcome:
            return mc_price_detail(
                contract, spot, config.params, config.n, seed,
                config.screening, variant=config.variant,
                precision=config.precision, cancel=cancel)
    else:
        def kernel(contract, spot, seed, cancel) -> KernelOutcome:
            return bt_price_detail(
                contract, spot, config.params, config.n,
                variant=config.variant, precision=config.precision,
                cancel=cancel)
    return kernel


class _LiveSession:
    """Threaded engine: one intake loop, w kernel workers, per-worker logs."""

    def __init__(self, book: ContractBook, config: ModelConfig, workers: int,
                 burst: bool):
        self.book = book
        self.config = config
        self.kernel = make_kernel(config)
        self.burst = burst
        self.parts = partition_book(book, workers)
        self.cond = threading.Condition()
        self.arrivals: list[tuple[int, int, object]] = []  # (seq, ns, tick)
        self.closed = False
        self.cancel_flag = np.full(1, -1, dtype=np.int64)
        self.worker_done = [-1] * workers
        self.worker_errors: list[str] = []
        self.worker_records: list[list[PricingRecord]] = [[] for _ in range(workers)]
        self.threads = [
            threading.Thread(target=self._worker_guard, args=(w,), daemon=True)
            for w in range(workers)
        ]

    def run(self, ticks) -> SessionLog:
        for t in self.threads:
            t.start()
        error = None
        try:
            for tick in ticks:
                if self.burst and self.arrivals:
                    gen = len(self.arrivals) - 1
                    with self.cond:
                        while not all(d >= gen for d in self.worker_done):
                            self.cond.wait()
                with self.cond:
                    seq = len(self.arrivals)
                    self.arrivals.append((seq, time.monotonic_ns(), tick))
                    self.cancel_flag[0] = seq
                    self.cond.notify_all()
        except Exception as exc:
            error = f"tick stream failed: {exc}"
        with self.cond:
            self.closed = True
            self.cond.notify_all()
        for t in self.threads:
            t.join()
        if self.worker_errors and error is None:
            error = "; ".join(self.worker_errors)
        records = [r for recs in self.worker_records for r in recs]
        records.sort(key=lambda r: (r.tick_seq, r.worker_id, r.slot))
        meta = {
            "model": self.config.model,
            "n": self.config.n,
            "variant": self.config.variant.label,
            "precision": self.config.precision,
            "screening": self.config.screening,
            "workers": len(self.parts),
            "book_size": len(self.book),
            "symbol": self.book.symbol,
            "rate": self.config.params.rate,
            "volatility": self.config.params.volatility,
            "base_seed": self.config.base_seed,
            "mode": "burst" if self.burst else "live",
            "scheduler": "static-fifo",
        }
        log = SessionLog(metadata=meta, records=records, error=error)
        log.ticks = [
            {"seq": seq, "arrival_ns": ns, "price": tick.price}
            for (seq, ns, tick) in self.arrivals
        ]
        return log

    def _worker_guard(self, wid: int) -> None:
        # A worker crash outside a kernel must not wedge the intake loop.
        try:
            self._worker_loop(wid)
        except Exception as exc:
            with self.cond:
                self.worker_errors.append(f"worker {wid} crashed: {exc!r}")
                self.worker_done[wid] = 2 ** 62
                self.cond.notify_all()

    def _worker_loop(self, wid: int) -> None:
        contracts = [(slot, gidx, self.book.contracts[gidx])
                     for slot, gidx in enumerate(self.parts[wid])]
        records = self.worker_records[wid]
        gen = 0
        while True:
            with self.cond:
                while len(self.arrivals) <= gen and not self.closed:
                    self.cond.wait()
                if len(self.arrivals) <= gen:
                    return
            _, arrival_ns, tick = self.arrivals[gen]
            spot = SpotPrice(tick.price)
            for slot, gidx, contract in contracts:
                if int(self.cancel_flag[0]) > gen:
                    # Superseded: the rest of this generation never starts.
                    sup_ns = self.arrivals[gen + 1][1]
                    for slot2, gidx2, c2 in contracts[slot:]:
                        records.append(PricingRecord(
                            c2.id, gen, wid, slot2, ABANDONED, sup_ns, sup_ns))
                    break
                token = CancelToken(self.cancel_flag, gen)
                seed = _seed_for(self.config.base_seed, gen, gidx)
                t0 = time.monotonic_ns()
                try:
                    out = self.kernel(contract, spot, seed, token)
                except Exception:
                    records.append(PricingRecord(
                        contract.id, gen, wid, slot, ERRORED, t0,
                        time.monotonic_ns()))
                    continue
                t1 = time.monotonic_ns()
                if out.cancelled:
                    records.append(PricingRecord(
                        contract.id, gen, wid, slot, ABANDONED, t0, t1))
                    sup_ns = self.arrivals[gen + 1][1]
                    for slot2, gidx2, c2 in contracts[slot + 1:]:
                        records.append(PricingRecord(
                            c2.id, gen, wid, slot2, ABANDONED, sup_ns, sup_ns))
                    break
                records.append(PricingRecord(
                    contract.id, gen, wid, slot, SUCCESS, t0, t1,
                    price=out.price, phase_prep_ns=out.prep_ns,
                    phase_loop_ns=out.loop_ns))
            with self.cond:
                self.worker_done[wid] = gen
                self.cond.notify_all()
            gen += 1


def run_session(ticks, book: ContractBook, config: ModelConfig, workers: int,
                *, burst: bool = False, metadata: dict | None = None) -> SessionLog:
    """Price the book on every tick of a live stream; returns the full log.

    ``ticks`` is any iterable of MarketTick (e.g. a Subscription).  With
    ``burst`` the next tick is consumed only once the book has drained,
    modelling back-to-back pricing at the maximum feasible speed.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    session = _LiveSession(book, config, workers, burst)
    log = session.run(ticks)
    if metadata:
        log.metadata.update(metadata)
    return log


# ---------------------------------------------------------------------------
# Virtual-time engine

_PRIO_ARRIVAL = 0
_PRIO_BOUNDARY = 1
_PRIO_DISPATCH = 2


class _VWorker:
    __slots__ = ("wid", "partition", "qpos", "queue_gen", "task")

    def __init__(self, wid, partition):
        self.wid = wid
        self.partition = partition  # list of (slot, gidx, contract)
        self.qpos = len(partition)  # nothing queued until the first arrival
        self.queue_gen = -1
        self.task = None


def simulate_session(arrivals_ns, book: ContractBook, workers: int, *,
                     cost_ns, checkpoint_ns: int = DEFAULT_CHECKPOINT_NS,
                     mock_price: float = 1.0,
                     metadata: dict | None = None) -> SessionLog:
    """Deterministic discrete-event run over known arrival times.

    ``cost_ns`` is either an int or a callable(contract, tick_seq) -> int
    giving the mock kernel cost.  All timestamps are exact integers, so two
    runs with equal inputs produce identical logs record-for-record.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if checkpoint_ns < 1:
        raise ValueError(f"checkpoint_ns must be >= 1, got {checkpoint_ns}")
    arrivals = [int(t) for t in arrivals_ns]
    if any(b < a for a, b in zip(arrivals, arrivals[1:])):
        raise ValueError("arrival times must be nondecreasing")
    cost_fn = cost_ns if callable(cost_ns) else (lambda c, k: int(cost_ns))

    parts = partition_book(book, workers)
    vworkers = [
        _VWorker(w, [(slot, gidx, book.contracts[gidx])
                     for slot, gidx in enumerate(parts[w])])
        for w in range(workers)
    ]
    records: list[PricingRecord] = []
    heap: list = []
    counter = 0

    def push(t, prio, kind, data):
        nonlocal counter
        heapq.heappush(heap, (t, prio, counter, kind, data))
        counter += 1

    for k, t in enumerate(arrivals):
        push(t, _PRIO_ARRIVAL, "arrival", k)

    cur_gen = -1
    while heap:
        t, prio, _, kind, data = heapq.heappop(heap)
        if kind == "arrival":
            k = data
            cur_gen = k
            for w in vworkers:
                for slot, gidx, c in w.partition[w.qpos:]:
                    records.append(PricingRecord(
                        c.id, w.queue_gen, w.wid, slot, ABANDONED, t, t))
                w.qpos = 0
                w.queue_gen = k
                if w.task is None:
                    push(t, _PRIO_DISPATCH, "dispatch", w.wid)
        elif kind == "boundary":
            w = vworkers[data]
            task = w.task
            if task is None or t != task["boundary"]:
                continue  # superseded scheduling entry
            end_t = task["start"] + task["cost"]
            if t >= end_t:
                records.append(PricingRecord(
                    task["contract"].id, task["gen"], w.wid, task["slot"],
                    SUCCESS, task["start"], end_t, price=mock_price))
                w.task = None
                push(end_t, _PRIO_DISPATCH, "dispatch", w.wid)
            elif task["gen"] < cur_gen:
                records.append(PricingRecord(
                    task["contract"].id, task["gen"], w.wid, task["slot"],
                    ABANDONED, task["start"], t))
                w.task = None
                push(t, _PRIO_DISPATCH, "dispatch", w.wid)
            else:
                nb = min(t + checkpoint_ns, end_t)
                task["boundary"] = nb
                push(nb, _PRIO_BOUNDARY, "boundary", w.wid)
        else:  # dispatch
            w = vworkers[data]
            if w.task is not None or w.qpos >= len(w.partition):
                continue
            slot, gidx, contract = w.partition[w.qpos]
            w.qpos += 1
            cost = int(cost_fn(contract, w.queue_gen))
            nb = min(t + checkpoint_ns, t + cost)
            w.task = {"gen": w.queue_gen, "slot": slot, "contract": contract,
                      "start": t, "cost": cost, "boundary": nb}
            push(nb, _PRIO_BOUNDARY, "boundary", w.wid)

    records.sort(key=lambda r: (r.tick_seq, r.worker_id, r.slot))
    meta = {
        "mode": "virtual",
        "workers": workers,
        "book_size": len(book),
        "symbol": book.symbol,
        "checkpoint_ns": checkpoint_ns,
        "scheduler": "static-fifo",
    }
    if metadata:
        meta.update(metadata)
    log = SessionLog(metadata=meta, records=records)
    log.ticks = [{"seq": k, "arrival_ns": t, "price": None}
                 for k, t in enumerate(arrivals)]
    return log


def worst_core_elapsed(log: SessionLog, tick_seq: int) -> float:
    """Worst per-worker span (seconds) of successful pricings for one tick."""
    if not any(t["seq"] == tick_seq for t in log.ticks):
        raise ValueError(f"tick_seq {tick_seq} not present in session log")
    spans: dict[int, tuple[int, int]] = {}
    for r in log.records:
        if r.tick_seq != tick_seq or r.status != SUCCESS:
            continue
        lo, hi = spans.get(r.worker_id, (r.start_ns, r.end_ns))
        spans[r.worker_id] = (min(lo, r.start_ns), max(hi, r.end_ns))
    if not spans:
        return 0.0
    return max(hi - lo for lo, hi in spans.values()) / 1e9


def save_session_log(log: SessionLog, records_path) -> None:
    """Write records as JSON lines plus a sibling .meta.json header."""
    records_path = Path(records_path)
    with open(records_path, "w", encoding="utf-8", newline="\n") as fh:
        for r in log.records:
            fh.write(json.dumps(r.__dict__, sort_keys=True) + "\n")
    meta = {"metadata": log.metadata, "ticks": log.ticks, "error": log.error}
    meta_path = records_path.with_suffix(".meta.json")
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_session_log(records_path) -> SessionLog:
    records_path = Path(records_path)
    with open(records_path.with_suffix(".meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    records = []
    with open(records_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(PricingRecord(**json.loads(line)))
    log = SessionLog(metadata=meta["metadata"], records=records,
                     error=meta.get("error"))
    log.ticks = meta.get("ticks", [])
    return log
