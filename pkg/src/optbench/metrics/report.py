"""Session reports: S/Opt, J/Opt, QoS, the all-or-nothing profile, and
iso-QoS ranking across platforms.

S/Opt charges every tick with the worst per-worker span of its successful
pricings; J/Opt is mean power times S/Opt by definition, so the report
satisfies that identity exactly.  Energy spent on abandoned work is charged
to the session (it was consumed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from ..pricer.session import (
    ABANDONED,
    ERRORED,
    SUCCESS,
    PricingRecord,
    SessionLog,
    worst_core_elapsed,
)
from .power import mean_power

PROFILE_BIN_S = 0.25

CSV_COLUMNS = ("platform", "model", "n", "variant", "governor",
               "mean_power_w", "s_per_opt", "j_per_opt", "qos")


def time_per_option(log: SessionLog) -> float | None:
    """Total worst-core elapsed over ticks, per successfully priced option."""
    total_span = 0.0
    successes = 0
    per_tick: dict[int, int] = {}
    for r in log.records:
        if r.status == SUCCESS:
            per_tick[r.tick_seq] = per_tick.get(r.tick_seq, 0) + 1
    if not per_tick:
        return None
    for seq, count in per_tick.items():
        total_span += worst_core_elapsed(log, seq)
        successes += count
    return total_span / successes


def joules_per_option(mean_power_w: float, s_per_opt: float) -> float:
    """Energy per pricing: average power times elapsed time per option."""
    if mean_power_w < 0 or s_per_opt < 0:
        raise ValueError("inputs must be >= 0")
    return mean_power_w * s_per_opt


def qos(log: SessionLog) -> float | None:
    """Successful pricings over all requested pricings, in [0, 1]."""
    c = log.counts()
    total = c[SUCCESS] + c[ABANDONED] + c[ERRORED]
    if total == 0:
        return None
    return c[SUCCESS] / total


def profile_from_gaps(gaps_s, pricing_span_s: float,
                      bin_s: float = PROFILE_BIN_S) -> list[dict]:
    """Cumulative all-or-nothing success fractions over binned update gaps.

    A price update "succeeds" when the gap to the next update is at least
    the full-book pricing span.  Gaps are binned at ``bin_s`` resolution;
    each bin reports the success fraction among all gaps in bins up to and
    including it (None until any gap has been seen).
    """
    if pricing_span_s <= 0:
        raise ValueError(f"pricing span must be positive, got {pricing_span_s}")
    gaps = [float(g) for g in gaps_s]
    if not gaps:
        raise ValueError("need at least one inter-arrival gap")
    n_bins = int(max(gaps) / bin_s) + 1
    counts = [0] * n_bins
    wins = [0] * n_bins
    for g in gaps:
        b = min(int(g / bin_s), n_bins - 1)
        counts[b] += 1
        if g >= pricing_span_s:
            wins[b] += 1
    out = []
    cum_n = 0
    cum_w = 0
    for b in range(n_bins):
        cum_n += counts[b]
        cum_w += wins[b]
        out.append({
            "low_s": b * bin_s,
            "high_s": (b + 1) * bin_s,
            "gaps": counts[b],
            "cum_gaps": cum_n,
            "cum_success": (cum_w / cum_n) if cum_n else None,
        })
    return out


def all_or_nothing_profile(trace, pricing_span_s: float,
                           bin_s: float = PROFILE_BIN_S) -> list[dict]:
    """Profile over a tick trace's inter-arrival gaps."""
    if len(trace) < 2:
        raise ValueError("need at least 2 ticks to form gaps")
    return profile_from_gaps(trace.gaps_seconds(), pricing_span_s, bin_s)


@dataclass
class SessionReport:
    """Aggregated metrics for one run, serializable to JSON and a CSV row."""

    metadata: dict
    mean_power_w: float
    s_per_opt: float | None
    j_per_opt: float | None
    qos: float | None
    duration_s: float
    energy_j: float
    successes: int
    abandoned: int
    errored: int
    ticks: int
    profile: list[dict] = field(default_factory=list)
    accuracy: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SessionReport":
        return cls(**d)

    def csv_row(self) -> str:
        m = self.metadata

        def fmt(x):
            return "" if x is None else repr(x) if isinstance(x, float) else str(x)

        return ",".join([
            str(m.get("platform", "")), str(m.get("model", "")),
            str(m.get("n", "")), str(m.get("variant", "")),
            str(m.get("governor", "")), fmt(self.mean_power_w),
            fmt(self.s_per_opt), fmt(self.j_per_opt), fmt(self.qos),
        ])


def write_report(report: SessionReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())


def read_report(path) -> SessionReport:
    with open(path, "r", encoding="utf-8") as fh:
        return SessionReport.from_dict(json.load(fh))


def session_window_ns(log: SessionLog) -> tuple[int, int]:
    """[first arrival, last activity] bounds of a session."""
    if not log.ticks:
        raise ValueError("session log has no ticks")
    start = min(t["arrival_ns"] for t in log.ticks)
    end = max(t["arrival_ns"] for t in log.ticks)
    for r in log.records:
        end = max(end, r.end_ns)
    if end == start:
        end = start + 1
    return start, end


def build_report(log: SessionLog, power_samples, *,
                 accuracy: dict | None = None) -> SessionReport:
    """Assemble the metrics for a completed session."""
    start, end = session_window_ns(log)
    p_bar = mean_power(power_samples, start, end)
    s_opt = time_per_option(log)
    j_opt = joules_per_option(p_bar, s_opt) if s_opt is not None else None
    q = qos(log)
    duration_s = (end - start) / 1e9
    counts = log.counts()
    profile: list[dict] = []
    if s_opt is not None and len(log.ticks) >= 2:
        arrivals = sorted(t["arrival_ns"] for t in log.ticks)
        gaps = [(b - a) / 1e9 for a, b in zip(arrivals, arrivals[1:])]
        span = s_opt * log.metadata.get("book_size", 1)
        if any(g > 0 for g in gaps):
            profile = profile_from_gaps([g for g in gaps if g > 0], span)
    return SessionReport(
        metadata=dict(log.metadata),
        mean_power_w=p_bar,
        s_per_opt=s_opt,
        j_per_opt=j_opt,
        qos=q,
        duration_s=duration_s,
        energy_j=p_bar * duration_s,
        successes=counts[SUCCESS],
        abandoned=counts[ABANDONED],
        errored=counts[ERRORED],
        ticks=len(log.ticks),
        profile=profile,
        accuracy=accuracy,
    )


def iso_qos_compare(reports, qos_target: float) -> dict:
    """Rank reports meeting a QoS target by total session energy.

    Returns rows (ascending energy, ties broken by platform tag) with a
    relative-energy column normalized to the best entry, the excluded
    reports, and a best-to-worst energy ratio summary.
    """
    if len(reports) < 2:
        raise ValueError("need at least 2 reports to compare")
    if not 0.0 <= qos_target <= 1.0:
        raise ValueError(f"qos target must be in [0,1], got {qos_target}")
    qualifying = []
    excluded = []
    for r in reports:
        tag = str(r.metadata.get("platform", ""))
        if r.qos is not None and r.qos >= qos_target:
            qualifying.append((r.energy_j, tag, r))
        else:
            excluded.append({"platform": tag, "qos": r.qos,
                             "note": f"qos below target {qos_target}"})
    if not qualifying:
        return {"rows": [], "excluded": excluded,
                "summary": {"note": f"no report meets qos target {qos_target}"}}
    qualifying.sort(key=lambda t: (t[0], t[1]))
    min_e = qualifying[0][0]
    max_e = qualifying[-1][0]
    rows = []
    for energy, tag, r in qualifying:
        rows.append({
            "platform": tag,
            "model": r.metadata.get("model"),
            "n": r.metadata.get("n"),
            "variant": r.metadata.get("variant"),
            "qos": r.qos,
            "energy_j": energy,
            "rel_energy": energy / min_e if min_e > 0 else math.nan,
        })
    summary = {
        "best_platform": qualifying[0][1],
        "best_to_worst_energy_ratio": (min_e / max_e) if max_e > 0 else math.nan,
    }
    return {"rows": rows, "excluded": excluded, "summary": summary}


def merge_session_logs(logs, mode: str = "split") -> SessionLog:
    """Combine per-node logs of a scale-out run into one platform log.

    ``split`` treats each node as having priced a distinct shard of the
    book; ``replicate`` as each having priced the whole book.  Workers are
    namespaced per node, so per-tick worst-core spans take the max across
    nodes and success counts add up in either mode.
    """
    if mode not in ("split", "replicate"):
        raise ValueError(f"mode must be 'split' or 'replicate', got {mode!r}")
    logs = list(logs)
    if not logs:
        raise ValueError("need at least one log to merge")
    n_ticks = len(logs[0].ticks)
    for lg in logs[1:]:
        if len(lg.ticks) != n_ticks:
            raise ValueError("cannot merge logs with differing tick counts")
    records: list[PricingRecord] = []
    offset = 0
    book_sizes = []
    for node, lg in enumerate(logs):
        workers = lg.metadata.get("workers", 1)
        book_sizes.append(lg.metadata.get("book_size", 0))
        for r in lg.records:
            records.append(PricingRecord(
                contract_id=f"n{node}:{r.contract_id}",
                tick_seq=r.tick_seq, worker_id=r.worker_id + offset,
                slot=r.slot, status=r.status, start_ns=r.start_ns,
                end_ns=r.end_ns, price=r.price,
                phase_prep_ns=r.phase_prep_ns, phase_loop_ns=r.phase_loop_ns))
        offset += workers
    if mode == "replicate" and len(set(book_sizes)) > 1:
        raise ValueError("replicate mode expects identical per-node books")
    records.sort(key=lambda r: (r.tick_seq, r.worker_id, r.slot))
    meta = dict(logs[0].metadata)
    meta["workers"] = offset
    meta["nodes"] = len(logs)
    meta["scaleout"] = mode
    meta["book_size"] = sum(book_sizes) if mode == "split" else book_sizes[0]
    merged = SessionLog(metadata=meta, records=records)
    merged.ticks = [dict(t) for t in logs[0].ticks]
    return merged
