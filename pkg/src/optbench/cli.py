"""Command-line entry point.

Subcommands cover the full experiment workflow: synthesize or validate tick
traces, replay them over UDP multicast, run benchmark sessions against a
contract book (live, burst, or deterministic virtual-time), and compare the
resulting reports at a QoS target.

Exit codes are stable for scripting: 0 success, 2 usage error, 3 power or
environment error, 4 data error.
"""

from __future__ import annotations

import argparse
import sys
import threading
from pathlib import Path

from . import _kernels
from .contracts import PricingParams, SpotPrice
from .feed import (
    DEFAULT_GROUP,
    DEFAULT_PORT,
    TraceParseError,
    read_trace,
    replay,
    serialize_tick,
    subscribe,
    synthetic_trace,
    write_trace,
)
from .feed.trace import DEFAULT_WALLCLOCK
from .metrics import (
    ConstantSource,
    PowerSample,
    PowerSampler,
    RaplSource,
    SourceUnavailable,
    TraceSource,
    build_report,
    iso_qos_compare,
    read_report,
    write_report,
)
from .metrics.report import CSV_COLUMNS, session_window_ns
from .pricer import (
    ModelConfig,
    make_book,
    read_book,
    run_session,
    save_session_log,
    simulate_session,
    write_book,
)
from .pricer.session import SUCCESS
from .pricing import black_scholes_price
from .vecmath import KernelVariant

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_POWER = 3
EXIT_DATA = 4


def _positive(kind):
    def convert(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return convert


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optbench",
        description="Real-time option pricing benchmark harness")
    parser.add_argument("--config", metavar="FILE",
                        help="key=value defaults, overridden by flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="synthesize a tick trace file")
    p.add_argument("--arrivals", choices=("poisson", "fixed"), default="fixed")
    p.add_argument("--rate", type=_positive(float), default=1.0,
                   help="mean arrivals per second")
    p.add_argument("--count", type=_positive(int))
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--symbol", default="SYN")
    p.add_argument("--start-price", type=_positive(float), default=100.0)
    p.add_argument("--step-vol", type=float, default=0.001)
    p.add_argument("--wallclock", default=DEFAULT_WALLCLOCK)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_trace, _required=("count", "out"))

    p = sub.add_parser("replay", help="replay a trace onto UDP multicast")
    p.add_argument("--trace")
    p.add_argument("--group", default=DEFAULT_GROUP)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--speed", type=_positive(float), default=1.0)
    p.add_argument("--burst", action="store_true",
                   help="ignore timestamps and send back-to-back")
    p.add_argument("--interface", default="127.0.0.1")
    p.set_defaults(func=cmd_replay, _required=("trace",))

    p = sub.add_parser("subscribe-dump", help="print ticks from a multicast group")
    p.add_argument("--group", default=DEFAULT_GROUP)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--count", type=_positive(int), default=None,
                   help="stop after this many ticks")
    p.add_argument("--timeout", type=_positive(float), default=5.0,
                   help="stop after this many idle seconds")
    p.add_argument("--interface", default="127.0.0.1")
    p.set_defaults(func=cmd_subscribe_dump)

    p = sub.add_parser("bench", help="run a pricing session and emit a report")
    p.add_argument("--trace")
    p.add_argument("--book", help="contract book CSV (id,kind,strike,expiry_years)")
    p.add_argument("--book-size", type=_positive(int), default=617,
                   help="synthesize a book of this size when --book is absent")
    p.add_argument("--strike-grid", default="50:150",
                   help="LO:HI strike range for the synthesized book")
    p.add_argument("--model", choices=("mc", "bt"), default="mc")
    p.add_argument("--n", type=_positive(int), default=100_000,
                   help="MC draws or BT steps")
    p.add_argument("--variant", default="NOVECT",
                   help="NOVECT|AUTOVECT|VEC4|VEC8|VEC16|INTR4|INTR8|INTR16")
    p.add_argument("--precision", type=int, choices=(32, 64), default=64)
    p.add_argument("--workers", type=_positive(int), default=1)
    p.add_argument("--rate", type=float, default=0.01, help="risk-free rate")
    p.add_argument("--vol", type=_positive(float), default=0.2, help="volatility")
    p.add_argument("--seed", type=_nonneg_int, default=12345)
    p.add_argument("--no-screening", action="store_true")
    p.add_argument("--power", default="constant:10",
                   help="rapl[:DOMAIN_DIR] | trace:FILE | constant:WATTS")
    p.add_argument("--governor", default="unknown",
                   help="DVFS governor label (metadata only)")
    p.add_argument("--platform", default="local",
                   help="platform tag, e.g. local(1x8x1)")
    p.add_argument("--burst", action="store_true",
                   help="feed ticks back-to-back, gated on book completion")
    p.add_argument("--virtual", action="store_true",
                   help="deterministic virtual-time run with a mock kernel")
    p.add_argument("--mock-cost-ms", type=_positive(float), default=1.0,
                   help="mock kernel cost per contract (virtual mode)")
    p.add_argument("--mock-checkpoint-ms", type=_positive(float), default=1.0,
                   help="mock cancellation checkpoint interval (virtual mode)")
    p.add_argument("--group", default=DEFAULT_GROUP)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--speed", type=_positive(float), default=1.0)
    p.add_argument("--idle-timeout", type=_positive(float), default=2.0)
    p.add_argument("--out-dir", default="optbench-out")
    p.set_defaults(func=cmd_bench, _required=("trace",))

    p = sub.add_parser("compare", help="iso-QoS comparison of report files")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--qos-target", type=float, default=1.0)
    p.add_argument("--out-csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check trace/book files for validity")
    p.add_argument("--trace")
    p.add_argument("--book")
    p.set_defaults(func=cmd_validate)
    return parser


def cmd_gen_trace(args) -> int:
    trace = synthetic_trace(
        args.arrivals, args.rate, args.count, args.seed, symbol=args.symbol,
        start_price=args.start_price, step_vol=args.step_vol,
        wallclock=args.wallclock)
    write_trace(trace, args.out)
    dur = trace.ticks[-1].timestamp_ns / 1e9 if len(trace) > 1 else 0.0
    print(f"wrote {len(trace)} ticks ({args.arrivals}, {dur:.3f}s span) to {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    trace = read_trace(args.trace)
    stats = replay(trace, args.group, args.port, args.speed, burst=args.burst,
                   interface=args.interface)
    print(f"sent {stats.sent} ticks in {stats.duration_ns / 1e9:.3f}s "
          f"(max lateness {stats.max_lateness_ns / 1e6:.3f} ms, "
          f"{stats.late} beyond budget)")
    return EXIT_OK


def cmd_subscribe_dump(args) -> int:
    with subscribe(args.group, args.port, interface=args.interface,
                   idle_timeout=args.timeout) as sub:
        for tick in sub:
            print(serialize_tick(tick))
            if args.count is not None and sub.received >= args.count:
                break
        print(f"received {sub.received} ticks, {sub.gap_count} gaps, "
              f"{sub.malformed_count} malformed", file=sys.stderr)
    return EXIT_OK


class _NullSampler:
    """Stands in for PowerSampler when the source is a fixed series."""

    samples: list = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        pass


def _maybe_sampler(source):
    if hasattr(source, "sample_now"):
        return PowerSampler(source)
    return _NullSampler()


def _make_power_source(spec: str):
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "constant":
        return ConstantSource(float(arg or 0.0))
    if kind == "rapl":
        return RaplSource(arg) if arg else RaplSource()
    if kind == "trace":
        if not arg:
            raise SourceUnavailable("trace power source needs a file: trace:FILE")
        return TraceSource(arg)
    raise SourceUnavailable(f"unknown power source {spec!r}")


def _accuracy_vs_analytic(log, book, params) -> dict | None:
    by_id = {c.id: c for c in book}
    spot_by_seq = {t["seq"]: t["price"] for t in log.ticks}
    errs = []
    for r in log.records:
        if r.status != SUCCESS or r.price is None:
            continue
        contract = by_id.get(r.contract_id)
        spot_px = spot_by_seq.get(r.tick_seq)
        if contract is None or spot_px is None:
            continue
        bs = black_scholes_price(contract, SpotPrice(spot_px), params)
        if bs >= 1e-6 * spot_px:  # skip near-worthless contracts
            errs.append(abs(r.price - bs) / bs)
    if not errs:
        return None
    return {"samples": len(errs), "max_rel_err": max(errs),
            "mean_rel_err": sum(errs) / len(errs)}


def cmd_bench(args) -> int:
    trace = read_trace(args.trace)
    if len(trace) == 0:
        raise ValueError(f"trace {args.trace} is empty")
    if args.book:
        book = read_book(args.book, symbol=trace.symbols[0] if trace.symbols else None)
    else:
        lo, _, hi = args.strike_grid.partition(":")
        book = make_book(args.book_size, symbol=trace.symbols[0],
                         strike_lo=float(lo), strike_hi=float(hi))
    params = PricingParams(rate=args.rate, volatility=args.vol)
    config = ModelConfig(
        model=args.model, n=args.n, params=params,
        variant=KernelVariant.parse(args.variant), precision=args.precision,
        base_seed=args.seed, screening=not args.no_screening)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not args.book:
        # keep the synthesized book alongside the results
        write_book(book, out_dir / "book.csv")
    source = _make_power_source(args.power)

    accuracy = None
    if args.virtual:
        if not isinstance(source, ConstantSource):
            raise SourceUnavailable(
                "virtual-time runs need --power constant:<watts> for "
                "deterministic energy accounting")
        arrivals = [t.timestamp_ns for t in trace]
        log = simulate_session(
            arrivals, book, args.workers,
            cost_ns=int(args.mock_cost_ms * 1e6),
            checkpoint_ns=int(args.mock_checkpoint_ms * 1e6),
            metadata={"model": args.model, "n": args.n,
                      "variant": config.variant.label,
                      "precision": args.precision})
        start, end = session_window_ns(log)
        samples = [PowerSample(start, source.watts, source.label),
                   PowerSample(end, source.watts, source.label)]
    elif args.burst:
        with _maybe_sampler(source) as sampler:
            log = run_session(iter(trace.ticks), book, config, args.workers,
                              burst=True)
        samples = sampler.samples
        accuracy = _accuracy_vs_analytic(log, book, params)
    else:
        sub = subscribe(args.group, args.port)
        replayer = threading.Thread(
            target=replay,
            kwargs=dict(trace=trace, group=args.group, port=args.port,
                        speed=args.speed),
            daemon=True)
        with _maybe_sampler(source) as sampler:
            replayer.start()

            def intake():
                expected = len(trace)
                while sub.received < expected:
                    tick = sub.recv(args.idle_timeout)
                    if tick is None:
                        return
                    yield tick

            log = run_session(intake(), book, config, args.workers)
            replayer.join()
        sub.close()
        samples = sampler.samples
        log.metadata["gap_count"] = sub.gap_count
        log.metadata["malformed_count"] = sub.malformed_count
        accuracy = _accuracy_vs_analytic(log, book, params)

    if isinstance(source, TraceSource):
        # a recorded meter log is the series itself, aligned to the session
        start, _ = session_window_ns(log)
        samples = source.rebased(start)

    log.metadata.update({
        "platform": args.platform,
        "governor": args.governor,
        "power_source": args.power,
        "backend": _kernels.active_name(),
        "trace": Path(args.trace).name,
    })
    report = build_report(log, samples, accuracy=accuracy)
    write_report(report, out_dir / "report.json")
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        fh.write(report.csv_row() + "\n")
    save_session_log(log, out_dir / "session.jsonl")
    qos_text = "n/a" if report.qos is None else f"{report.qos:.4f}"
    sopt_text = "n/a" if report.s_per_opt is None else f"{report.s_per_opt:.6g}"
    jopt_text = "n/a" if report.j_per_opt is None else f"{report.j_per_opt:.6g}"
    print(f"{args.model} n={args.n} {config.variant.label} "
          f"workers={args.workers}: P={report.mean_power_w:.3f}W "
          f"S/Opt={sopt_text} J/Opt={jopt_text} QoS={qos_text} "
          f"-> {out_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        print("compare needs at least 2 report files", file=sys.stderr)
        return EXIT_USAGE
    reports = [read_report(p) for p in args.reports]
    result = iso_qos_compare(reports, args.qos_target)
    header = ("platform", "model", "n", "variant", "qos", "energy_j", "rel_energy")
    lines = ["  ".join(f"{h:>12}" for h in header)]
    for row in result["rows"]:
        lines.append("  ".join(
            f"{row[h]:>12.6g}" if isinstance(row[h], float) else f"{str(row[h]):>12}"
            for h in header))
    print("\n".join(lines))
    for ex in result["excluded"]:
        print(f"excluded: {ex['platform']} (qos={ex['qos']}) - {ex['note']}")
    summary = result["summary"]
    if "best_to_worst_energy_ratio" in summary:
        ratio = summary["best_to_worst_energy_ratio"]
        print(f"best-to-worst energy ratio: {ratio:.4f} "
              f"({summary['best_platform']} uses {100 * ratio:.1f}% of the "
              f"worst qualifying platform's energy)")
    else:
        print(summary["note"])
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in result["rows"]:
                fh.write(",".join(
                    repr(row[h]) if isinstance(row[h], float) else str(row[h])
                    for h in header) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.trace and not args.book:
        print("validate needs --trace and/or --book", file=sys.stderr)
        return EXIT_USAGE
    if args.trace:
        trace = read_trace(args.trace)
        dur = (trace.ticks[-1].timestamp_ns - trace.ticks[0].timestamp_ns) / 1e9 \
            if len(trace) > 1 else 0.0
        print(f"trace ok: {len(trace)} ticks, symbols={trace.symbols}, "
              f"span={dur:.3f}s")
    if args.book:
        book = read_book(args.book)
        calls = sum(1 for c in book if c.is_call)
        print(f"book ok: {len(book)} contracts ({calls} calls, "
              f"{len(book) - calls} puts)")
    return EXIT_OK


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> None:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    ns, _ = probe.parse_known_args(argv)
    if not ns.config:
        return
    defaults = {}
    try:
        with open(ns.config, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{ns.config}: line {line_no}: expected key=value")
                key, _, value = line.partition("=")
                defaults[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    # push the defaults into every subparser: subcommand parsing would
    # otherwise overwrite top-level defaults with its own
    subparsers = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            subparsers.extend(action.choices.values())
    known = set()
    for p in subparsers:
        known.update(a.dest for a in p._actions)
    unknown = set(defaults) - known
    if unknown:
        parser.error(f"{ns.config}: unknown config keys: {sorted(unknown)}")
    for p in subparsers:
        p.set_defaults(**{k: v for k, v in defaults.items()
                          if any(a.dest == k for a in p._actions)})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    for name in getattr(args, "_required", ()):
        # required-unless-configured flags (a config file may supply them)
        if getattr(args, name, None) is None:
            parser.error(f"{args.command}: --{name.replace('_', '-')} is required")
    try:
        return args.func(args)
    except SourceUnavailable as exc:
        print(f"power source error: {exc}", file=sys.stderr)
        return EXIT_POWER
    except (TraceParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
