"""Critical-orbit statistics and parameter-exclusion runs for z^d + c.

Thin wrappers over the C++ core: orbit/exponent profiles, the derivative
chain identity, CE windows, transversality limits, free-return timelines,
scenario-driven exclusion runs, and escape-density estimation.
"""

from ._core import (
    ce_window,
    chain_residual,
    constants,
    density,
    membership,
    orbit,
    run_scenario,
    timeline_csv,
    transversality,
)

__all__ = [
    "ce_window",
    "chain_residual",
    "constants",
    "density",
    "membership",
    "orbit",
    "run_scenario",
    "timeline_csv",
    "transversality",
]
