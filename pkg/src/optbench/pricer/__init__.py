from .book import ContractBook, make_book, partition_book, read_book, write_book
from .session import (
    ABANDONED,
    ERRORED,
    SUCCESS,
    ModelConfig,
    PricingRecord,
    SessionLog,
    load_session_log,
    run_session,
    save_session_log,
    simulate_session,
    worst_core_elapsed,
)

__all__ = [
    "ContractBook", "make_book", "partition_book", "read_book", "write_book",
    "ABANDONED", "ERRORED", "SUCCESS", "ModelConfig", "PricingRecord",
    "SessionLog", "load_session_log", "run_session", "save_session_log",
    "simulate_session", "worst_core_elapsed",
]
