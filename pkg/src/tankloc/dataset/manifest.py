"""Corpus manifest: one record per image, one class per directory.

The ingest step scans a class-per-directory tree, drops files that do not
decode, and optionally joins smartphone metadata from a sidecar CSV keyed
by filename prefix. Manifests are immutable and persist as versioned JSON.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from tankloc.errors import ConfigError, IngestError, ManifestError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".tif", ".tiff", ".webp"}

UNKNOWN_DEVICE = "unknown"


@dataclass(frozen=True)
class ImageRecord:
    record_id: str
    path: str
    class_label: str
    device_model: str | None = None
    width: int | None = None
    height: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...]
    classes: tuple[str, ...]
    device_summary: dict[str, int] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise ManifestError("class list has duplicates")
        class_set = set(self.classes)
        paths = set()
        for r in self.records:
            if r.class_label not in class_set:
                raise ManifestError(f"record {r.record_id!r} has unknown class {r.class_label!r}")
            if r.path in paths:
                raise ManifestError(f"duplicate path in manifest: {r.path!r}")
            paths.add(r.path)
        if all(r.device_model is not None for r in self.records) and self.device_summary:
            total = sum(self.device_summary.values())
            if total != len(self.records):
                raise ManifestError(
                    f"device_summary total {total} != record count {len(self.records)}"
                )

    def class_counts(self) -> dict[str, int]:
        counts = Counter(r.class_label for r in self.records)
        return {c: counts.get(c, 0) for c in self.classes}

    def records_by_class(self) -> dict[str, list[ImageRecord]]:
        out: dict[str, list[ImageRecord]] = {c: [] for c in self.classes}
        for r in self.records:
            out[r.class_label].append(r)
        return out

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class IngestReport:
    """What ingest skipped or could not match; empty lists mean a clean run."""

    n_scanned: int = 0
    n_ingested: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)
    unmatched_device_prefixes: list[str] = field(default_factory=list)


def _load_device_table(path: Path) -> list[tuple[str, str]]:
    """Rows of (filename_prefix, device_model), longest prefix first."""
    rows: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "filename_prefix" not in reader.fieldnames:
            raise IngestError(f"device table {path} lacks a filename_prefix column")
        for row in reader:
            rows.append((row["filename_prefix"], row.get("device_model") or UNKNOWN_DEVICE))
    rows.sort(key=lambda r: len(r[0]), reverse=True)
    return rows


def ingest(
    root: str | Path,
    device_table: str | Path | None = None,
) -> tuple[DatasetManifest, IngestReport]:
    """Scan a class-per-directory tree into a manifest.

    Immediate subdirectories of ``root`` are the classes (sorted
    lexicographically). Files that do not decode are skipped with a warning
    and counted in the report. When ``device_table`` is given, each record
    gets a device_model by longest filename-prefix match (``"unknown"``
    when nothing matches) and device-table rows that match no file are
    reported.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"corpus root does not exist: {root}")

    prefixes = _load_device_table(Path(device_table)) if device_table else None
    matched_prefixes: set[str] = set()

    classes = tuple(sorted(d.name for d in root.iterdir() if d.is_dir()))
    report = IngestReport()
    records: list[ImageRecord] = []
    for label in classes:
        for f in sorted((root / label).iterdir()):
            if not f.is_file() or f.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            report.n_scanned += 1
            try:
                with Image.open(f) as im:
                    width, height = im.size
                    im.verify()
            except Exception as exc:
                log.warning("skipping undecodable image %s: %s", f, exc)
                report.skipped.append((str(f), str(exc)))
                continue
            device = None
            if prefixes is not None:
                device = UNKNOWN_DEVICE
                for prefix, model in prefixes:
                    if f.name.startswith(prefix):
                        device = model
                        matched_prefixes.add(prefix)
                        break
            records.append(
                ImageRecord(
                    record_id=f.relative_to(root).as_posix(),
                    path=str(f),
                    class_label=label,
                    device_model=device,
                    width=width,
                    height=height,
                )
            )
            report.n_ingested += 1

    device_summary: dict[str, int] = {}
    if prefixes is not None:
        device_summary = dict(Counter(r.device_model for r in records))
        for prefix, _ in prefixes:
            if prefix not in matched_prefixes:
                log.warning("device table prefix %r matches no ingested file", prefix)
                report.unmatched_device_prefixes.append(prefix)

    manifest = DatasetManifest(records=tuple(records), classes=classes, device_summary=device_summary)
    return manifest, report


def filter_min_count(m: DatasetManifest, min_images: int = 50) -> DatasetManifest:
    """Drop classes with fewer than ``min_images`` records.

    Survivor ordering is preserved. Removing every class is an error.
    """
    if min_images < 1:
        raise ConfigError(f"min_images must be >= 1, got {min_images}")
    counts = m.class_counts()
    keep = tuple(c for c in m.classes if counts[c] >= min_images)
    if not keep:
        raise ManifestError(f"no class has at least {min_images} images")
    if keep == m.classes:
        return m
    keep_set = set(keep)
    records = tuple(r for r in m.records if r.class_label in keep_set)
    device_summary = (
        dict(Counter(r.device_model for r in records)) if m.device_summary else {}
    )
    return DatasetManifest(records=records, classes=keep, device_summary=device_summary)


def _manifest_dict(m: DatasetManifest) -> dict:
    return {
        "schema_version": m.schema_version,
        "classes": list(m.classes),
        "device_summary": dict(sorted(m.device_summary.items())),
        "records": [
            {
                "record_id": r.record_id,
                "path": r.path,
                "class_label": r.class_label,
                "device_model": r.device_model,
                "width": r.width,
                "height": r.height,
            }
            for r in m.records
        ],
    }


def save_manifest(m: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_manifest_dict(m), indent=2, sort_keys=True))


def load_manifest(path: str | Path) -> DatasetManifest:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest file is not valid JSON: {path}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ManifestError(f"unsupported manifest schema_version: {data.get('schema_version')}")
    records = tuple(
        ImageRecord(
            record_id=r["record_id"],
            path=r["path"],
            class_label=r["class_label"],
            device_model=r.get("device_model"),
            width=r.get("width"),
            height=r.get("height"),
        )
        for r in data["records"]
    )
    return DatasetManifest(
        records=records,
        classes=tuple(data["classes"]),
        device_summary={k: int(v) for k, v in data.get("device_summary", {}).items()},
    )


def manifest_hash(m: DatasetManifest) -> str:
    """Stable content hash, independent of record ordering."""
    payload = _manifest_dict(m)
    payload["records"] = sorted(payload["records"], key=lambda r: r["record_id"])
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
