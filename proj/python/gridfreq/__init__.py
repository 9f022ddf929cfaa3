from ._core import (
    GridfreqError,
    bundled_cases,
    compare,
    run,
    simulate,
    soft_threshold,
    two_bus_optimum,
    verify,
)

__all__ = [
    "GridfreqError",
    "bundled_cases",
    "compare",
    "run",
    "simulate",
    "soft_threshold",
    "two_bus_optimum",
    "verify",
]
