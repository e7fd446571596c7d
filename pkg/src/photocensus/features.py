"""Feature extraction: images and collections to numeric vectors.

Two kinds of feature schemas exist. The image-level schema combines raw
per-image attributes supplied upstream (aesthetic or biological scores,
passed through by name) with six structural features computed from the
image's own collection. The collection-level schema summarizes a whole
collection: individual count, image count, animal fraction, and mean/max
aggregates of each raw attribute.

Missing values are marked NaN and imputed with column means when vectors are
assembled into a dataset; the imputation values are kept on the dataset so
models can replay them on unseen rows at predict time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .records import Collection, ImageRecord

STRUCTURAL_IMAGE_FEATURES = (
    "collection_size",
    "image_rank",
    "animals_in_image",
    "animal_duplication",
    "distinct_individuals_in_collection",
    "time_gap_prev",
)

SOURCE_RAW = "raw"
SOURCE_STRUCTURAL = "structural"

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names with their provenance tags.

    The order is the column identity of every matrix built under the schema,
    so it must be identical between training and prediction runs.
    """

    names: tuple[str, ...]
    sources: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) != len(self.sources):
            raise ValueError("names and sources must align")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        for source in self.sources:
            if source not in (SOURCE_RAW, SOURCE_STRUCTURAL):
                raise ValueError(f"unknown feature source {source!r}")

    def __len__(self) -> int:
        return len(self.names)

    def column(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """One row of features under a schema; NaN entries mean missing."""

    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.schema),):
            raise ValueError(
                f"vector length {self.values.shape} does not match schema of {len(self.schema)}"
            )


def image_schema(raw_names: Sequence[str]) -> FeatureSchema:
    """The per-image schema: six structural columns, then raw passthroughs."""
    if len(set(raw_names)) != len(raw_names):
        raise ValueError("raw feature names must be unique")
    names = STRUCTURAL_IMAGE_FEATURES + tuple(raw_names)
    sources = (SOURCE_STRUCTURAL,) * len(STRUCTURAL_IMAGE_FEATURES) + (SOURCE_RAW,) * len(raw_names)
    return FeatureSchema(names=names, sources=sources)


def collection_schema(raw_names: Sequence[str]) -> FeatureSchema:
    """The per-collection schema: counts plus mean/max of each raw attribute."""
    if len(set(raw_names)) != len(raw_names):
        raise ValueError("raw feature names must be unique")
    names: list[str] = ["n_individuals", "n_images", "animal_fraction"]
    for raw in raw_names:
        names.append(f"{raw}_mean")
        names.append(f"{raw}_max")
    return FeatureSchema(names=tuple(names), sources=(SOURCE_STRUCTURAL,) * len(names))


def infer_raw_names(records: Iterable[ImageRecord]) -> tuple[str, ...]:
    """All raw feature names present anywhere in the records, sorted."""
    names: set[str] = set()
    for record in records:
        names.update(record.raw_features)
    return tuple(sorted(names))


def featurize_image(
    image: ImageRecord, collection: Collection, schema: FeatureSchema
) -> FeatureVector:
    """Feature row for one image in the context of its own collection.

    Raw columns copy the record's attribute of the same name (NaN when the
    record lacks it). Structural columns describe the image's place in the
    collection; they depend on nothing outside it.
    """
    try:
        rank = next(i for i, img in enumerate(collection.images) if img.image_id == image.image_id)
    except StopIteration:
        raise DataError(
            f"image {image.image_id!r} is not part of collection {collection.collection_id!r}"
        ) from None

    duplication = sum(
        1
        for other in collection.images
        if other.image_id != image.image_id and other.individual_ids & image.individual_ids
    )
    previous = collection.images[rank - 1] if rank > 0 else None
    if previous is None or image.timestamp is None or previous.timestamp is None:
        time_gap = 0.0
    else:
        time_gap = float(image.timestamp - previous.timestamp)

    structural = {
        "collection_size": float(collection.n_images),
        "image_rank": float(rank),
        "animals_in_image": float(len(image.individual_ids)),
        "animal_duplication": float(duplication),
        "distinct_individuals_in_collection": float(len(collection.distinct_individuals)),
        "time_gap_prev": time_gap,
    }

    values = np.empty(len(schema), dtype=np.float64)
    for j, (name, source) in enumerate(zip(schema.names, schema.sources)):
        if source == SOURCE_STRUCTURAL:
            if name not in structural:
                raise DataError(f"unknown structural image feature {name!r}")
            values[j] = structural[name]
        else:
            values[j] = image.raw_features.get(name, np.nan)
    return FeatureVector(schema=schema, values=values)


def featurize_collection(collection: Collection, schema: FeatureSchema) -> FeatureVector:
    """Summary feature row for a whole collection."""
    if collection.n_images == 0:
        raise DataError(f"collection {collection.collection_id!r} has no images")

    with_animals = sum(1 for img in collection.images if img.individual_ids)
    computed: dict[str, float] = {
        "n_individuals": float(len(collection.distinct_individuals)),
        "n_images": float(collection.n_images),
        "animal_fraction": with_animals / collection.n_images,
    }

    values = np.empty(len(schema), dtype=np.float64)
    for j, name in enumerate(schema.names):
        if name in computed:
            values[j] = computed[name]
            continue
        if name.endswith("_mean") or name.endswith("_max"):
            raw, _, stat = name.rpartition("_")
            observed = [
                img.raw_features[raw] for img in collection.images if raw in img.raw_features
            ]
            if not observed:
                values[j] = np.nan
            elif stat == "mean":
                values[j] = float(np.mean(observed))
            else:
                values[j] = float(np.max(observed))
            continue
        raise DataError(f"unknown collection feature {name!r}")
    return FeatureVector(schema=schema, values=values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Learnable matrix plus labels, with the imputation stats that built it."""

    matrix: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    column_means: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Row subset sharing schema and imputation stats (for CV folds)."""
        return Dataset(
            matrix=self.matrix[indices],
            labels=self.labels[indices],
            schema=self.schema,
            column_means=self.column_means,
        )


def assemble_dataset(vectors: Sequence[FeatureVector], labels: Sequence[float]) -> Dataset:
    """Stack vectors into a row-major matrix and impute missing entries.

    Every NaN is replaced by the mean of its column's observed entries; a
    column with no observed entry at all is an error naming the feature.
    """
    if len(vectors) != len(labels):
        raise DataError(f"{len(vectors)} vectors but {len(labels)} labels")
    if not vectors:
        raise DataError("cannot assemble an empty dataset")
    schema = vectors[0].schema
    for vector in vectors[1:]:
        if vector.schema != schema:
            raise DataError("all vectors must share one schema")

    matrix = np.vstack([vector.values for vector in vectors]).astype(np.float64)
    label_array = np.asarray(labels, dtype=np.float64)

    observed = ~np.isnan(matrix)
    fully_missing = np.nonzero(~observed.any(axis=0))[0]
    if fully_missing.size:
        names = [schema.names[j] for j in fully_missing]
        raise DataError(f"columns entirely missing: {names}")

    column_means = np.empty(matrix.shape[1], dtype=np.float64)
    for j in range(matrix.shape[1]):
        column_means[j] = matrix[observed[:, j], j].mean()
    rows, cols = np.nonzero(~observed)
    matrix[rows, cols] = column_means[cols]

    return Dataset(matrix=matrix, labels=label_array, schema=schema, column_means=column_means)


def schema_to_json(schema: FeatureSchema) -> str:
    obj = {
        "version": SCHEMA_VERSION,
        "features": [
            {"name": name, "source": source}
            for name, source in zip(schema.names, schema.sources)
        ],
    }
    return json.dumps(obj, indent=2)


def schema_from_json(text: str) -> FeatureSchema:
    obj = json.loads(text)
    if obj.get("version") != SCHEMA_VERSION:
        raise DataError(f"unsupported schema version {obj.get('version')!r}")
    features = obj.get("features")
    if not isinstance(features, list):
        raise DataError("schema JSON must carry a feature list")
    names = tuple(entry["name"] for entry in features)
    sources = tuple(entry["source"] for entry in features)
    try:
        return FeatureSchema(names=names, sources=sources)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def write_schema(schema: FeatureSchema, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(schema_to_json(schema))
        handle.write("\n")


def read_schema(path: str) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as handle:
        return schema_from_json(handle.read())


def write_dataset(dataset: Dataset, path: str) -> None:
    """JSON export of an assembled dataset, byte-stable for equal inputs."""
    obj = {
        "version": SCHEMA_VERSION,
        "schema": [
            {"name": name, "source": source}
            for name, source in zip(dataset.schema.names, dataset.schema.sources)
        ],
        "matrix": [[float(v) for v in row] for row in dataset.matrix],
        "labels": [float(v) for v in dataset.labels],
        "column_means": [float(v) for v in dataset.column_means],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(obj, handle, indent=2)
        handle.write("\n")


def read_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as handle:
        obj = json.load(handle)
    if obj.get("version") != SCHEMA_VERSION:
        raise DataError(f"unsupported dataset version {obj.get('version')!r}")
    try:
        schema = FeatureSchema(
            names=tuple(entry["name"] for entry in obj["schema"]),
            sources=tuple(entry["source"] for entry in obj["schema"]),
        )
        matrix = np.asarray(obj["matrix"], dtype=np.float64)
        labels = np.asarray(obj["labels"], dtype=np.float64)
        column_means = np.asarray(obj["column_means"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed dataset file: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] != labels.shape[0]:
        raise DataError("dataset matrix and labels disagree on row count")
    if matrix.shape[1] != len(schema.names) or column_means.shape[0] != len(schema.names):
        raise DataError("dataset columns do not match the schema")
    return Dataset(matrix=matrix, labels=labels, schema=schema, column_means=column_means)
