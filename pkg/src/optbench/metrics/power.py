"""Power sampling: RAPL counter files, recorded traces, constant models.

Sources are polled by a periodic sampler into an append-only buffer; mean
power over a window is the time-weighted trapezoidal average of the sample
series.  Instantaneous power for counter-based sources is the energy delta
between consecutive reads over their spacing, with wraparound resolved via
the advertised counter range.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path

PRE_VRM = "PRE-VRM"
PRE_PSU = "PRE-PSU"
MODEL = "MODEL"

DEFAULT_RAPL_DIR = "/sys/class/powercap/intel-rapl:0"
DEFAULT_SAMPLE_PERIOD_S = 0.1


class SourceUnavailable(RuntimeError):
    """The requested power source cannot be read on this host."""


@dataclass(frozen=True)
class PowerSample:
    timestamp_ns: int
    watts: float
    source_label: str = MODEL

    def __post_init__(self):
        if self.watts < 0:
            raise ValueError(f"watts must be >= 0, got {self.watts}")


def rapl_read(path) -> int:
    """Read a cumulative energy counter (microjoules) from a powercap file."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            return int(fh.read().strip())
    except (OSError, ValueError) as exc:
        raise SourceUnavailable(f"cannot read energy counter {path}: {exc}") from exc


def counter_delta_uj(old: int, new: int, max_range_uj: int) -> int:
    """Energy consumed between two counter reads, unwrapping at the range."""
    if max_range_uj <= 0:
        return max(0, new - old)
    return (new - old) % max_range_uj


def power_from_counter_series(readings, max_range_uj: int,
                              label: str = PRE_VRM) -> list[PowerSample]:
    """Derive a power series from (timestamp_ns, microjoules) counter reads."""
    samples = []
    for (t0, e0), (t1, e1) in zip(readings, readings[1:]):
        if t1 <= t0:
            raise ValueError("counter timestamps must be strictly increasing")
        de = counter_delta_uj(e0, e1, max_range_uj)
        watts = de / 1e6 / ((t1 - t0) / 1e9)
        samples.append(PowerSample(t1, watts, label))
    return samples


class RaplSource:
    """Linux powercap energy counter, reported as pre-VRM package power."""

    label = PRE_VRM

    def __init__(self, domain_dir: str = DEFAULT_RAPL_DIR):
        domain = Path(domain_dir)
        self.energy_path = domain / "energy_uj"
        max_path = domain / "max_energy_range_uj"
        if not self.energy_path.exists():
            raise SourceUnavailable(f"no powercap counter at {self.energy_path}")
        try:
            self.max_range_uj = rapl_read(max_path) if max_path.exists() else 0
        except SourceUnavailable:
            self.max_range_uj = 0
        self._last: tuple[int, int] | None = None
        rapl_read(self.energy_path)  # fail fast if unreadable

    def sample_now(self) -> PowerSample | None:
        t = time.monotonic_ns()
        e = rapl_read(self.energy_path)
        if self._last is None:
            self._last = (t, e)
            return None
        t0, e0 = self._last
        self._last = (t, e)
        if t <= t0:
            return None
        de = counter_delta_uj(e0, e, self.max_range_uj)
        return PowerSample(t, de / 1e6 / ((t - t0) / 1e9), self.label)


class ConstantSource:
    """Fixed-wattage model source for deterministic runs and loopback tests."""

    label = MODEL

    def __init__(self, watts: float):
        if watts < 0:
            raise ValueError(f"constant power must be >= 0, got {watts}")
        self.watts = watts

    def sample_now(self) -> PowerSample:
        return PowerSample(time.monotonic_ns(), self.watts, self.label)


class TraceSource:
    """A recorded meter log (CSV ``timestamp_ns,watts``), e.g. a wall meter."""

    label = PRE_PSU

    def __init__(self, path):
        self.samples: list[PowerSample] = []
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    parts = line.split(",")
                    if len(parts) != 2:
                        raise SourceUnavailable(
                            f"{path}: line {line_no}: expected timestamp_ns,watts")
                    self.samples.append(PowerSample(
                        int(parts[0]), float(parts[1]), self.label))
        except OSError as exc:
            raise SourceUnavailable(f"cannot read power trace {path}: {exc}") from exc
        if len(self.samples) < 2:
            raise SourceUnavailable(f"power trace {path} has fewer than 2 samples")

    def rebased(self, start_ns: int) -> list[PowerSample]:
        """The recorded series shifted so its first sample lands at start_ns."""
        t0 = self.samples[0].timestamp_ns
        return [PowerSample(s.timestamp_ns - t0 + start_ns, s.watts, s.source_label)
                for s in self.samples]


class PowerSampler:
    """Periodic polling task appending to an in-memory sample buffer."""

    def __init__(self, source, period_s: float = DEFAULT_SAMPLE_PERIOD_S):
        self.source = source
        self.period_s = period_s
        self.samples: list[PowerSample] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def _poll(self):
        s = self.source.sample_now()
        if s is not None:
            self.samples.append(s)

    def _loop(self):
        while not self._stop.wait(self.period_s):
            self._poll()

    def start(self):
        self._stop.clear()
        self._poll()
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> list[PowerSample]:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._poll()
        return self.samples

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def mean_power(samples, start_ns: int, end_ns: int) -> float:
    """Time-weighted trapezoidal average of a power series over a window.

    The series is interpolated linearly between samples and held flat
    beyond its ends; at least two samples must overlap the window.
    """
    pts = sorted(samples, key=lambda s: s.timestamp_ns)
    if len(pts) < 2:
        raise ValueError("need at least 2 power samples")
    if end_ns <= start_ns:
        raise ValueError("window must have positive width")
    if pts[-1].timestamp_ns < start_ns or pts[0].timestamp_ns > end_ns:
        raise ValueError("power samples do not overlap the window")

    ts = [p.timestamp_ns for p in pts]
    ws = [p.watts for p in pts]

    def value_at(t: int) -> float:
        if t <= ts[0]:
            return ws[0]
        if t >= ts[-1]:
            return ws[-1]
        for i in range(len(ts) - 1):
            if ts[i] <= t <= ts[i + 1]:
                frac = (t - ts[i]) / (ts[i + 1] - ts[i])
                return ws[i] + frac * (ws[i + 1] - ws[i])
        raise AssertionError("unreachable")

    nodes = [start_ns]
    nodes += [t for t in ts if start_ns < t < end_ns]
    nodes.append(end_ns)
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        total += 0.5 * (value_at(a) + value_at(b)) * (b - a)
    return total / (end_ns - start_ns)
