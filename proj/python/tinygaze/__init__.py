from ._tinygaze import (
    accuracy,
    count_params,
    generate_session,
    macro_f1,
    measure_latency_us,
    segment_log,
    weighted_f1,
    window_starts,
)

__all__ = [
    "accuracy",
    "count_params",
    "generate_session",
    "macro_f1",
    "measure_latency_us",
    "segment_log",
    "weighted_f1",
    "window_starts",
]
