"""Sighting data model and input parsing.

An :class:`ImageRecord` is one photograph with its upstream annotations:
which collection it belongs to, which individual animals appear in it, any
precomputed per-image attributes, and (when known) whether it was shared.
Records are grouped into :class:`Collection` objects, one per album / SD-card
set, which downstream modules featurize and count.

Two input formats are supported: JSONL (one record object per line) and a
flat CSV where ``individual_ids`` is semicolon-separated and every column
outside the fixed schema is treated as a named raw feature.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import BinaryIO, Iterable, Mapping, Sequence

from .errors import DataError, ParseError

_CSV_FIXED_COLUMNS = (
    "image_id",
    "collection_id",
    "photographer_id",
    "occasion",
    "timestamp",
    "individual_ids",
    "shared",
)

_JSONL_KEYS = {
    "image_id",
    "collection_id",
    "photographer_id",
    "occasion",
    "timestamp",
    "individual_ids",
    "raw_features",
    "shared",
}


@dataclass(frozen=True)
class ImageRecord:
    """One photograph with its annotations. Immutable after construction."""

    image_id: str
    collection_id: str
    photographer_id: str
    occasion: int
    timestamp: int | None = None
    individual_ids: frozenset[str] = frozenset()
    raw_features: Mapping[str, float] = None  # type: ignore[assignment]
    shared: bool | None = None

    def __post_init__(self):
        if self.raw_features is None:
            object.__setattr__(self, "raw_features", {})


@dataclass(frozen=True, eq=False)
class Collection:
    """All images of one collection, ordered, with derived individual sets.

    ``n_shared_individuals`` counts distinct individuals over images with
    ``shared == True``; when no image in the collection carries a shared
    flag the collection is taken to be a shared album itself and the count
    runs over all images.
    """

    collection_id: str
    photographer_id: str
    occasion: int
    images: tuple[ImageRecord, ...]
    distinct_individuals: frozenset[str]
    n_shared_individuals: int

    @property
    def n_images(self) -> int:
        return len(self.images)


@dataclass(frozen=True)
class SurveyLabel:
    """A shared / not-shared survey answer for one image."""

    image_id: str
    shared: bool


def _require(condition: bool, line_number: int, reason: str) -> None:
    if not condition:
        raise ParseError(line_number, reason)


def _as_occasion(value: object, line_number: int) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), line_number, "occasion must be an integer year")
    return value  # type: ignore[return-value]


def _record_from_json(obj: dict, line_number: int) -> ImageRecord:
    for field in ("image_id", "collection_id", "photographer_id", "occasion"):
        _require(field in obj, line_number, f"missing required field {field!r}")
    unknown = set(obj) - _JSONL_KEYS
    _require(not unknown, line_number, f"unknown fields: {sorted(unknown)}")
    for field in ("image_id", "collection_id", "photographer_id"):
        _require(isinstance(obj[field], str) and obj[field] != "", line_number, f"{field} must be a non-empty string")
    occasion = _as_occasion(obj["occasion"], line_number)
    timestamp = obj.get("timestamp")
    if timestamp is not None:
        _require(isinstance(timestamp, int) and not isinstance(timestamp, bool), line_number, "timestamp must be an integer")
    ids = obj.get("individual_ids", [])
    _require(isinstance(ids, list) and all(isinstance(i, str) for i in ids), line_number, "individual_ids must be a list of strings")
    raw = obj.get("raw_features", {})
    _require(isinstance(raw, dict), line_number, "raw_features must be an object")
    features: dict[str, float] = {}
    for name, value in raw.items():
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), line_number, f"raw feature {name!r} must be numeric")
        features[name] = float(value)
    shared = obj.get("shared")
    if shared is not None:
        _require(isinstance(shared, bool), line_number, "shared must be a boolean")
    return ImageRecord(
        image_id=obj["image_id"],
        collection_id=obj["collection_id"],
        photographer_id=obj["photographer_id"],
        occasion=occasion,
        timestamp=timestamp,
        individual_ids=frozenset(ids),
        raw_features=features,
        shared=shared,
    )


def _record_from_csv_row(row: dict[str, str], feature_names: Sequence[str], line_number: int) -> ImageRecord:
    for field in ("image_id", "collection_id", "photographer_id", "occasion"):
        _require(bool(row.get(field)), line_number, f"missing required field {field!r}")
    try:
        occasion = int(row["occasion"])
    except ValueError:
        raise ParseError(line_number, "occasion must be an integer year") from None
    timestamp: int | None = None
    if row.get("timestamp"):
        try:
            timestamp = int(row["timestamp"])
        except ValueError:
            raise ParseError(line_number, "timestamp must be an integer") from None
    ids = frozenset(part for part in (row.get("individual_ids") or "").split(";") if part)
    shared: bool | None = None
    if row.get("shared"):
        _require(row["shared"] in ("0", "1"), line_number, "shared must be 0 or 1")
        shared = row["shared"] == "1"
    features: dict[str, float] = {}
    for name in feature_names:
        cell = row.get(name)
        if cell:
            try:
                features[name] = float(cell)
            except ValueError:
                raise ParseError(line_number, f"raw feature {name!r} must be numeric") from None
    return ImageRecord(
        image_id=row["image_id"],
        collection_id=row["collection_id"],
        photographer_id=row["photographer_id"],
        occasion=occasion,
        timestamp=timestamp,
        individual_ids=ids,
        raw_features=features,
        shared=shared,
    )


def parse_image_records(stream: BinaryIO | bytes, format_tag: str) -> list[ImageRecord]:
    """Parse a UTF-8 byte stream of image records.

    ``format_tag`` must be ``"jsonl"`` or ``"csv"``. Records are returned in
    file order; a duplicate ``image_id`` or a malformed line raises
    :class:`DataError` pointing at the offender.
    """
    if format_tag not in ("jsonl", "csv"):
        raise ValueError(f"unknown format tag {format_tag!r}")
    data = stream if isinstance(stream, bytes) else stream.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"stream is not valid UTF-8: {exc}") from exc

    records: list[ImageRecord] = []
    if format_tag == "jsonl":
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_number, f"invalid JSON ({exc.msg})") from exc
            _require(isinstance(obj, dict), line_number, "record must be a JSON object")
            records.append(_record_from_json(obj, line_number))
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            return []
        missing = [c for c in ("image_id", "collection_id", "photographer_id", "occasion") if c not in reader.fieldnames]
        if missing:
            raise DataError(f"CSV header missing required columns: {missing}")
        feature_names = [c for c in reader.fieldnames if c not in _CSV_FIXED_COLUMNS]
        for line_number, row in enumerate(reader, start=2):
            records.append(_record_from_csv_row(row, feature_names, line_number))

    seen: set[str] = set()
    for record in records:
        if record.image_id in seen:
            raise DataError(f"duplicate image_id {record.image_id!r}")
        seen.add(record.image_id)
    return records


def read_records(path: str) -> list[ImageRecord]:
    """Read records from a file, inferring the format from the extension."""
    tag = "csv" if path.endswith(".csv") else "jsonl"
    with open(path, "rb") as handle:
        return parse_image_records(handle, tag)


def _sorted_images(images: list[ImageRecord]) -> tuple[ImageRecord, ...]:
    # Records missing timestamps sort by image_id only; a collection with any
    # missing timestamp falls back to pure image_id order to avoid fabricating
    # a time for some images but not others.
    if all(img.timestamp is not None for img in images):
        return tuple(sorted(images, key=lambda img: (img.timestamp, img.image_id)))
    return tuple(sorted(images, key=lambda img: img.image_id))


def build_collection(images: list[ImageRecord]) -> Collection:
    """Assemble one Collection from the records of a single collection_id."""
    if not images:
        raise DataError("cannot build a collection from zero images")
    collection_id = images[0].collection_id
    photographers = {img.photographer_id for img in images}
    if len(photographers) > 1:
        raise DataError(
            f"collection {collection_id!r} has inconsistent photographers: {sorted(photographers)}"
        )
    occasions = {img.occasion for img in images}
    if len(occasions) > 1:
        raise DataError(f"collection {collection_id!r} spans multiple occasions: {sorted(occasions)}")
    ordered = _sorted_images(images)
    distinct = frozenset().union(*(img.individual_ids for img in ordered))
    if any(img.shared is not None for img in ordered):
        shared_individuals = frozenset().union(
            *(img.individual_ids for img in ordered if img.shared), frozenset()
        )
    else:
        shared_individuals = distinct
    return Collection(
        collection_id=collection_id,
        photographer_id=images[0].photographer_id,
        occasion=images[0].occasion,
        images=ordered,
        distinct_individuals=distinct,
        n_shared_individuals=len(shared_individuals),
    )


def group_collections(records: Iterable[ImageRecord]) -> list[Collection]:
    """Partition records into Collections, one per collection_id.

    Output is sorted by collection_id; every record lands in exactly one
    collection.
    """
    by_id: dict[str, list[ImageRecord]] = {}
    for record in records:
        by_id.setdefault(record.collection_id, []).append(record)
    return [build_collection(by_id[cid]) for cid in sorted(by_id)]


def join_survey_labels(
    records: Sequence[ImageRecord], labels: Iterable[SurveyLabel]
) -> list[ImageRecord]:
    """Attach shared/not-shared survey answers to records by image_id.

    Records without a label keep their existing ``shared`` value. Labels that
    do not resolve to a known record raise :class:`DataError` listing every
    missing id.
    """
    by_image: dict[str, bool] = {}
    for label in labels:
        by_image[label.image_id] = label.shared
    known = {record.image_id for record in records}
    missing = sorted(set(by_image) - known)
    if missing:
        raise DataError(f"survey labels reference unknown image ids: {missing}")
    return [
        replace(record, shared=by_image[record.image_id]) if record.image_id in by_image else record
        for record in records
    ]


def parse_survey_labels(stream: BinaryIO | bytes) -> list[SurveyLabel]:
    """Parse the survey CSV: header ``image_id,shared`` with shared in {0,1}."""
    data = stream if isinstance(stream, bytes) else stream.read()
    text = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    if "image_id" not in reader.fieldnames or "shared" not in reader.fieldnames:
        raise DataError("survey CSV must have header image_id,shared")
    labels: list[SurveyLabel] = []
    for line_number, row in enumerate(reader, start=2):
        if row["shared"] not in ("0", "1"):
            raise ParseError(line_number, "shared must be 0 or 1")
        labels.append(SurveyLabel(image_id=row["image_id"], shared=row["shared"] == "1"))
    return labels


def album_view(collection: Collection) -> Collection | None:
    """The observable side of a collection: its shared images only.

    Collections whose images carry no shared flags are taken to be shared
    albums already and are returned unchanged. Returns None when nothing was
    shared (the collection is invisible downstream).
    """
    if all(img.shared is None for img in collection.images):
        return collection
    shared_images = [img for img in collection.images if img.shared]
    if not shared_images:
        return None
    return build_collection(shared_images)


def record_to_json_dict(record: ImageRecord) -> dict:
    """Canonical JSONL object for one record (stable key and id order)."""
    obj: dict = {
        "image_id": record.image_id,
        "collection_id": record.collection_id,
        "photographer_id": record.photographer_id,
        "occasion": record.occasion,
    }
    if record.timestamp is not None:
        obj["timestamp"] = record.timestamp
    obj["individual_ids"] = sorted(record.individual_ids)
    obj["raw_features"] = {name: record.raw_features[name] for name in sorted(record.raw_features)}
    if record.shared is not None:
        obj["shared"] = record.shared
    return obj


def write_records_jsonl(records: Iterable[ImageRecord], path: str) -> None:
    """Write records to a canonical JSONL file (deterministic bytes)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record_to_json_dict(record), sort_keys=False))
            handle.write("\n")
