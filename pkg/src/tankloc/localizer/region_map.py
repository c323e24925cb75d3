"""The park map: one region per classifier class, with adjacency.

The map file is versioned JSON; loading validates every structural
invariant (unique ids, class bijection, symmetric irreflexive adjacency,
real polygons) and reports all violations at once, by region id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

from tankloc.errors import RegionMapError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Region:
    region_id: str
    class_label: str
    display_name: str
    polygon: tuple[tuple[float, float], ...]
    adjacent: tuple[str, ...] = ()
    trivia: str = ""


@dataclass(frozen=True)
class RegionMap:
    regions: tuple[Region, ...]
    bounds: tuple[float, float, float, float]  # min x, min y, max x, max y
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        problems = validate_regions(self.regions)
        if problems:
            raise RegionMapError("invalid region map", detail=problems)

    @cached_property
    def by_id(self) -> dict[str, Region]:
        return {r.region_id: r for r in self.regions}

    @cached_property
    def by_class(self) -> dict[str, Region]:
        return {r.class_label: r for r in self.regions}

    @property
    def class_labels(self) -> tuple[str, ...]:
        return tuple(r.class_label for r in self.regions)

    def check_classes(self, classes: Sequence[str]) -> None:
        """Enforce the class_label <-> region bijection for a classifier."""
        missing = sorted(set(classes) - set(self.by_class))
        extra = sorted(set(self.by_class) - set(classes))
        problems = []
        if missing:
            problems.append(f"classifier classes with no region: {missing}")
        if extra:
            problems.append(f"regions with no classifier class: {extra}")
        if problems:
            raise RegionMapError("region map does not match the classifier", detail=problems)


def validate_regions(regions: Sequence[Region]) -> list[str]:
    problems: list[str] = []
    ids = [r.region_id for r in regions]
    dup_ids = sorted({i for i in ids if ids.count(i) > 1})
    if dup_ids:
        problems.append(f"duplicate region_ids: {dup_ids}")
    labels = [r.class_label for r in regions]
    dup_labels = sorted({c for c in labels if labels.count(c) > 1})
    if dup_labels:
        problems.append(f"duplicate class_labels: {dup_labels}")
    id_set = set(ids)
    for r in regions:
        if len(r.polygon) < 3:
            problems.append(f"region {r.region_id}: polygon has {len(r.polygon)} vertices (< 3)")
        if r.region_id in r.adjacent:
            problems.append(f"region {r.region_id}: adjacency is reflexive")
        for other in r.adjacent:
            if other not in id_set:
                problems.append(f"region {r.region_id}: adjacent to unknown region {other!r}")
    by_id = {r.region_id: r for r in regions}
    for r in regions:
        for other in r.adjacent:
            if other in by_id and r.region_id not in by_id[other].adjacent:
                problems.append(
                    f"asymmetric adjacency: {r.region_id} -> {other} without {other} -> {r.region_id}"
                )
    return problems


def load_region_map(path: str | Path) -> RegionMap:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise RegionMapError(f"region map file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise RegionMapError(f"region map is not valid JSON: {path}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise RegionMapError(f"unsupported region map schema_version: {data.get('schema_version')}")
    try:
        regions = tuple(
            Region(
                region_id=r["region_id"],
                class_label=r["class_label"],
                display_name=r["display_name"],
                polygon=tuple((float(x), float(y)) for x, y in r["polygon"]),
                adjacent=tuple(r.get("adjacent", ())),
                trivia=r.get("trivia", ""),
            )
            for r in data["regions"]
        )
        bounds = tuple(float(v) for v in data["bounds"])
    except (KeyError, TypeError, ValueError) as exc:
        raise RegionMapError(f"malformed region map entry: {exc}") from exc
    if len(bounds) != 4:
        raise RegionMapError(f"bounds must have 4 values, got {len(bounds)}")
    return RegionMap(regions=regions, bounds=bounds)


def region_map_dict(region_map: RegionMap) -> dict:
    return {
        "schema_version": region_map.schema_version,
        "bounds": list(region_map.bounds),
        "regions": [
            {
                "region_id": r.region_id,
                "class_label": r.class_label,
                "display_name": r.display_name,
                "polygon": [list(p) for p in r.polygon],
                "adjacent": list(r.adjacent),
                "trivia": r.trivia,
            }
            for r in region_map.regions
        ],
    }


def save_region_map(region_map: RegionMap, path: str | Path) -> None:
    Path(path).write_text(json.dumps(region_map_dict(region_map), indent=2, sort_keys=True))
