from tankloc.localizer.region_map import Region, RegionMap, load_region_map, save_region_map
from tankloc.localizer.decision import (
    DecisionPolicy,
    LocalizationDecision,
    apply_adjacency_prior,
    calibrate_thresholds,
    load_policy,
    localize,
    save_policy,
)

__all__ = [
    "DecisionPolicy",
    "LocalizationDecision",
    "Region",
    "RegionMap",
    "apply_adjacency_prior",
    "calibrate_thresholds",
    "load_policy",
    "load_region_map",
    "localize",
    "save_policy",
    "save_region_map",
]
