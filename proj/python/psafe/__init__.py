"""Grid-free boundary tracing of p-safe regions of an SDE."""

from ._core import (
    BoxRegion,
    EstimateConfig,
    Region,
    SdeModel,
    SimConfig,
    SphereRegion,
    bm,
    bm1d_root,
    bm1d_survival,
    bm1d_survival_dx,
    check_inside,
    estimate,
    find_boundary,
    probe_start,
    run_walk,
    toy3d,
)

__all__ = [
    "BoxRegion",
    "EstimateConfig",
    "Region",
    "SdeModel",
    "SimConfig",
    "SphereRegion",
    "bm",
    "bm1d_root",
    "bm1d_survival",
    "bm1d_survival_dx",
    "check_inside",
    "estimate",
    "find_boundary",
    "probe_start",
    "run_walk",
    "toy3d",
]

__version__ = "0.1.0"
