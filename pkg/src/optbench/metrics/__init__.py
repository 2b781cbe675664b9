from .power import (
    ConstantSource,
    PowerSample,
    PowerSampler,
    RaplSource,
    SourceUnavailable,
    TraceSource,
    mean_power,
    power_from_counter_series,
    rapl_read,
)
from .report import (
    SessionReport,
    all_or_nothing_profile,
    build_report,
    iso_qos_compare,
    joules_per_option,
    merge_session_logs,
    profile_from_gaps,
    qos,
    read_report,
    time_per_option,
    write_report,
)

__all__ = [
    "ConstantSource", "PowerSample", "PowerSampler", "RaplSource",
    "SourceUnavailable", "TraceSource", "mean_power",
    "power_from_counter_series", "rapl_read",
    "SessionReport", "all_or_nothing_profile", "build_report",
    "iso_qos_compare", "joules_per_option", "merge_session_logs",
    "profile_from_gaps", "qos", "read_report", "time_per_option",
    "write_report",
]
