"""Tests for featurization and dataset assembly."""

from __future__ import annotations

import numpy as np
import pytest

from photocensus.errors import DataError
from photocensus.features import (
    Dataset,
    FeatureSchema,
    FeatureVector,
    assemble_dataset,
    collection_schema,
    featurize_collection,
    featurize_image,
    image_schema,
    infer_raw_names,
    read_dataset,
    read_schema,
    schema_from_json,
    schema_to_json,
    write_dataset,
    write_schema,
)
from photocensus.records import ImageRecord, build_collection


def record(image_id, *, individuals=(), timestamp=None, raw=None, collection_id="c1"):
    return ImageRecord(
        image_id=image_id,
        collection_id=collection_id,
        photographer_id="p1",
        occasion=2011,
        timestamp=timestamp,
        individual_ids=frozenset(individuals),
        raw_features=dict(raw or {}),
    )


@pytest.fixture
def three_image_collection():
    return build_collection(
        [
            record("i1", individuals={"A"}, timestamp=100, raw={"beauty": 0.2}),
            record("i2", individuals={"A", "B"}, timestamp=160, raw={"beauty": 0.4}),
            record("i3", individuals={"C"}, timestamp=400, raw={"beauty": 0.6}),
        ]
    )


class TestImageFeatures:
    def test_structural_values(self, three_image_collection):
        schema = image_schema(["beauty"])
        image = three_image_collection.images[1]
        vector = featurize_image(image, three_image_collection, schema)
        by_name = dict(zip(schema.names, vector.values))
        assert by_name["collection_size"] == 3.0
        assert by_name["image_rank"] == 1.0
        assert by_name["animals_in_image"] == 2.0
        assert by_name["animal_duplication"] == 1.0
        assert by_name["distinct_individuals_in_collection"] == 3.0
        assert by_name["time_gap_prev"] == 60.0
        assert by_name["beauty"] == 0.4

    def test_first_image_gap_zero(self, three_image_collection):
        schema = image_schema([])
        vector = featurize_image(three_image_collection.images[0], three_image_collection, schema)
        assert vector.values[schema.column("time_gap_prev")] == 0.0
        assert vector.values[schema.column("image_rank")] == 0.0

    def test_no_timestamps_gap_zero(self):
        collection = build_collection([record("i1"), record("i2")])
        schema = image_schema([])
        vector = featurize_image(collection.images[1], collection, schema)
        assert vector.values[schema.column("time_gap_prev")] == 0.0

    def test_empty_individuals(self):
        collection = build_collection([record("i1")])
        schema = image_schema([])
        vector = featurize_image(collection.images[0], collection, schema)
        assert vector.values[schema.column("animals_in_image")] == 0.0

    def test_missing_raw_feature_is_nan(self, three_image_collection):
        schema = image_schema(["beauty", "sharpness"])
        vector = featurize_image(three_image_collection.images[0], three_image_collection, schema)
        assert np.isnan(vector.values[schema.column("sharpness")])
        assert vector.values[schema.column("beauty")] == 0.2

    def test_image_not_in_collection(self, three_image_collection):
        stranger = record("iX")
        with pytest.raises(DataError, match="iX"):
            featurize_image(stranger, three_image_collection, image_schema([]))

    def test_independent_of_other_collections(self, three_image_collection):
        schema = image_schema(["beauty"])
        image = three_image_collection.images[2]
        before = featurize_image(image, three_image_collection, schema).values.copy()
        build_collection([record("z1", collection_id="c9", individuals={"Q"})])
        after = featurize_image(image, three_image_collection, schema).values
        assert np.array_equal(before, after)

    def test_distinct_count_dominates_per_image_count(self):
        rng = np.random.default_rng(3)
        images = [
            record(f"i{k}", individuals={f"z{int(i)}" for i in rng.integers(0, 6, size=3)})
            for k in range(8)
        ]
        collection = build_collection(images)
        schema = image_schema([])
        col_n = schema.column("distinct_individuals_in_collection")
        col_a = schema.column("animals_in_image")
        for image in collection.images:
            vector = featurize_image(image, collection, schema)
            assert vector.values[col_n] >= vector.values[col_a]


class TestCollectionFeatures:
    def test_counts(self, three_image_collection):
        schema = collection_schema(["beauty"])
        vector = featurize_collection(three_image_collection, schema)
        by_name = dict(zip(schema.names, vector.values))
        assert by_name["n_individuals"] == 3.0
        assert by_name["n_images"] == 3.0
        assert by_name["animal_fraction"] == 1.0
        assert by_name["beauty_mean"] == pytest.approx(0.4)
        assert by_name["beauty_max"] == 0.6

    def test_animal_fraction_partial(self):
        collection = build_collection([record("i1", individuals={"A"}), record("i2")])
        schema = collection_schema([])
        vector = featurize_collection(collection, schema)
        assert vector.values[schema.column("animal_fraction")] == 0.5

    def test_absent_raw_aggregates_are_nan(self):
        collection = build_collection([record("i1")])
        schema = collection_schema(["beauty"])
        vector = featurize_collection(collection, schema)
        assert np.isnan(vector.values[schema.column("beauty_mean")])
        assert np.isnan(vector.values[schema.column("beauty_max")])


class TestSchema:
    def test_unique_names_enforced(self):
        with pytest.raises(ValueError):
            FeatureSchema(names=("a", "a"), sources=("raw", "raw"))

    def test_bad_source(self):
        with pytest.raises(ValueError):
            FeatureSchema(names=("a",), sources=("derived",))

    def test_infer_raw_names_sorted_union(self):
        records = [record("i1", raw={"b": 1.0}), record("i2", raw={"a": 2.0, "b": 3.0})]
        assert infer_raw_names(records) == ("a", "b")

    def test_json_round_trip(self, tmp_path):
        schema = image_schema(["beauty", "sharpness"])
        assert schema_from_json(schema_to_json(schema)) == schema
        path = tmp_path / "schema.json"
        write_schema(schema, str(path))
        assert read_schema(str(path)) == schema

    def test_unsupported_version(self):
        with pytest.raises(DataError):
            schema_from_json('{"version": "99", "features": []}')


class TestAssembleDataset:
    def test_two_rows(self):
        schema = FeatureSchema(names=("x",), sources=("raw",))
        vectors = [
            FeatureVector(schema, np.array([1.0])),
            FeatureVector(schema, np.array([3.0])),
        ]
        dataset = assemble_dataset(vectors, [0.0, 1.0])
        assert dataset.n_rows == 2
        assert dataset.matrix.tolist() == [[1.0], [3.0]]
        assert dataset.labels.tolist() == [0.0, 1.0]

    def test_imputes_column_mean(self):
        schema = FeatureSchema(names=("x",), sources=("raw",))
        vectors = [
            FeatureVector(schema, np.array([1.0])),
            FeatureVector(schema, np.array([np.nan])),
            FeatureVector(schema, np.array([3.0])),
        ]
        dataset = assemble_dataset(vectors, [0.0, 0.0, 0.0])
        assert dataset.matrix[1, 0] == 2.0
        assert dataset.column_means.tolist() == [2.0]

    def test_imputation_preserves_observed_mean(self):
        rng = np.random.default_rng(5)
        schema = FeatureSchema(names=("x", "y"), sources=("raw", "raw"))
        vectors = []
        for _ in range(40):
            values = rng.normal(size=2)
            if rng.random() < 0.3:
                values[rng.integers(0, 2)] = np.nan
            vectors.append(FeatureVector(schema, values))
        stacked = np.vstack([v.values for v in vectors])
        dataset = assemble_dataset(vectors, [0.0] * 40)
        for j in range(2):
            observed = stacked[~np.isnan(stacked[:, j]), j]
            assert dataset.matrix[:, j].mean() == pytest.approx(observed.mean())

    def test_fully_missing_column_named(self):
        schema = FeatureSchema(names=("x", "ghost"), sources=("raw", "raw"))
        vectors = [FeatureVector(schema, np.array([1.0, np.nan]))]
        with pytest.raises(DataError, match="ghost"):
            assemble_dataset(vectors, [0.0])

    def test_schema_mismatch(self):
        a = FeatureSchema(names=("x",), sources=("raw",))
        b = FeatureSchema(names=("y",), sources=("raw",))
        with pytest.raises(DataError, match="schema"):
            assemble_dataset(
                [FeatureVector(a, np.array([1.0])), FeatureVector(b, np.array([2.0]))],
                [0.0, 1.0],
            )

    def test_length_mismatch(self):
        schema = FeatureSchema(names=("x",), sources=("raw",))
        with pytest.raises(DataError):
            assemble_dataset([FeatureVector(schema, np.array([1.0]))], [0.0, 1.0])

    def test_empty(self):
        with pytest.raises(DataError):
            assemble_dataset([], [])

    def test_subset_shares_stats(self):
        schema = FeatureSchema(names=("x",), sources=("raw",))
        vectors = [FeatureVector(schema, np.array([float(k)])) for k in range(6)]
        dataset = assemble_dataset(vectors, list(range(6)))
        sub = dataset.subset(np.array([1, 3]))
        assert sub.n_rows == 2
        assert sub.matrix.tolist() == [[1.0], [3.0]]
        assert sub.column_means is dataset.column_means
        assert isinstance(sub, Dataset)


class TestDatasetIO:
    def build(self):
        schema = FeatureSchema(names=("x", "y"), sources=("raw", "raw"))
        vectors = [
            FeatureVector(schema, np.array([1.0, np.nan])),
            FeatureVector(schema, np.array([3.0, 4.0])),
            FeatureVector(schema, np.array([5.0, 8.0])),
        ]
        return assemble_dataset(vectors, [0.25, 0.5, 0.75])

    def test_round_trip(self, tmp_path):
        dataset = self.build()
        path = str(tmp_path / "dataset.json")
        write_dataset(dataset, path)
        loaded = read_dataset(path)
        assert loaded.schema == dataset.schema
        np.testing.assert_array_equal(loaded.matrix, dataset.matrix)
        np.testing.assert_array_equal(loaded.labels, dataset.labels)
        np.testing.assert_array_equal(loaded.column_means, dataset.column_means)

    def test_byte_stable(self, tmp_path):
        paths = [str(tmp_path / name) for name in ("a.json", "b.json")]
        for path in paths:
            write_dataset(self.build(), path)
        blobs = [open(path, "rb").read() for path in paths]
        assert blobs[0] == blobs[1]

    def test_rejects_row_count_mismatch(self, tmp_path):
        import json as json_lib

        dataset = self.build()
        path = str(tmp_path / "dataset.json")
        write_dataset(dataset, path)
        obj = json_lib.load(open(path))
        obj["labels"] = obj["labels"][:-1]
        open(path, "w").write(json_lib.dumps(obj))
        with pytest.raises(DataError, match="row count"):
            read_dataset(path)

    def test_rejects_wrong_version(self, tmp_path):
        import json as json_lib

        dataset = self.build()
        path = str(tmp_path / "dataset.json")
        write_dataset(dataset, path)
        obj = json_lib.load(open(path))
        obj["version"] = "99"
        open(path, "w").write(json_lib.dumps(obj))
        with pytest.raises(DataError, match="version"):
            read_dataset(path)
