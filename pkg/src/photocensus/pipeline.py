"""End-to-end orchestration: image records in, population table out.

Stages run in a fixed order: ingest, featurize, train, evaluate,
bias_correct, estimate, report.  A failure in any stage removes the
files written so far and surfaces as a StageError tagged with the
stage name.  The final report is a per-year summary table comparing
the corrected estimate against a plain Jolly-Seber run and, when a
reference census is supplied, an RMSE footer for both.

The corrected estimate chain: a regression model predicts each
album's shared fraction, giving per-collection coefficients k_i;
occasion capture totals are inflated by the occasion's mean k before
the Jolly-Seber run; the resulting abundance is multiplied by a
post coefficient (the year-pair pooled k_rec, or a constant, e.g. a
two-sided-visibility factor).
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Mapping, Sequence

import numpy as np

from .bias import (
    ShareEstimate,
    make_share_estimate,
    pool_coefficient,
    predict_share_fractions,
    share_label_from_flags,
    write_share_estimates,
)
from .encounter import EncounterMatrix, build_encounter_matrix
from .errors import DataError, NoIndividualsError, ParseError, StageError, UsageError
from .evaluation import CvPlan, cross_validate, report_to_json
from .features import (
    Dataset,
    FeatureSchema,
    assemble_dataset,
    collection_schema,
    featurize_collection,
    featurize_image,
    image_schema,
    infer_raw_names,
    read_schema,
    write_schema,
)
from .jolly_seber import (
    VARIANT_CLASSIC,
    VARIANTS,
    PopulationEstimate,
    apply_bias_to_counts,
    jolly_seber_estimate,
    occasion_statistics,
    write_population_estimates,
)
from .models import (
    CLASSIFICATION_KINDS,
    REGRESSION_KINDS,
    LearnerSpec,
    Model,
    fit,
    save_model,
)
from .records import (
    Collection,
    ImageRecord,
    album_view,
    group_collections,
    join_survey_labels,
    parse_survey_labels,
    read_records,
)

POST_MODE_K_REC = "k_rec"
POST_MODE_CONSTANT = "constant"
POST_MODES = (POST_MODE_K_REC, POST_MODE_CONSTANT)

SUMMARY_CSV_HEADER = ("year", "official", "our_approach", "jolly_seber", "images")
CENSUS_CSV_HEADER = ("year", "official", "lower_bound")

LOCK_FILENAME = ".photocensus.lock"


@dataclass(frozen=True)
class CensusRow:
    """One year of the reference census; lower_bound marks counts
    reported as "at least this many"."""

    year: int
    official: int | None
    lower_bound: bool = False

    def __post_init__(self) -> None:
        if self.official is not None and self.official <= 0:
            raise ValueError(f"census count for {self.year} must be positive")
        if self.lower_bound and self.official is None:
            raise ValueError(f"census year {self.year} flags a bound without a count")


@dataclass(frozen=True)
class ReferenceCensus:
    rows: tuple[CensusRow, ...]

    def __post_init__(self) -> None:
        years = [row.year for row in self.rows]
        if len(set(years)) != len(years):
            raise ValueError("census lists a year twice")

    def lookup(self, year: int) -> CensusRow | None:
        for row in self.rows:
            if row.year == year:
                return row
        return None


def parse_reference_census(stream: BinaryIO | bytes) -> ReferenceCensus:
    """Parse the census CSV: header ``year,official,lower_bound``,
    empty official cell for years without a count, lower_bound 0/1."""
    data = stream if isinstance(stream, bytes) else stream.read()
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "census file is empty") from None
    if tuple(header) != CENSUS_CSV_HEADER:
        raise ParseError(1, f"census header must be {','.join(CENSUS_CSV_HEADER)}")
    rows = []
    for line_number, cells in enumerate(reader, start=2):
        if len(cells) != 3:
            raise ParseError(line_number, "census rows need exactly 3 cells")
        year_text, official_text, bound_text = cells
        try:
            year = int(year_text)
        except ValueError:
            raise ParseError(line_number, f"bad year {year_text!r}") from None
        official: int | None
        if official_text == "":
            official = None
        else:
            try:
                official = int(official_text)
            except ValueError:
                raise ParseError(line_number, f"bad count {official_text!r}") from None
        if bound_text not in ("0", "1"):
            raise ParseError(line_number, "lower_bound must be 0 or 1")
        try:
            rows.append(CensusRow(year, official, bound_text == "1"))
        except ValueError as exc:
            raise ParseError(line_number, str(exc)) from None
    try:
        return ReferenceCensus(tuple(rows))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def read_reference_census(path: str) -> ReferenceCensus:
    if not os.path.exists(path):
        raise DataError(f"census file not found: {path}")
    with open(path, "rb") as handle:
        return parse_reference_census(handle)


def write_reference_census(census: ReferenceCensus, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CENSUS_CSV_HEADER)
        for row in census.rows:
            writer.writerow(
                [row.year, "" if row.official is None else row.official, int(row.lower_bound)]
            )


@dataclass(frozen=True)
class RunConfig:
    """Everything one estimation run needs.

    The post coefficient multiplies the corrected-input Jolly-Seber
    abundance: mode "k_rec" uses the year-pair pooled coefficient of
    each occasion, mode "constant" uses post_constant everywhere
    (1.0 turns the final multiplication off).
    """

    records_path: str
    output_dir: str
    seed: int = 0
    labels_path: str | None = None
    census_path: str | None = None
    schema_path: str | None = None
    model_dir: str | None = None
    estimate_learner: LearnerSpec = LearnerSpec("elastic_net")
    shareability_learner: LearnerSpec = LearnerSpec("logistic_regression")
    cv: CvPlan = CvPlan()
    year_pairs: tuple[tuple[int, int], ...] | None = None
    js_variant: str = VARIANT_CLASSIC
    post_mode: str = POST_MODE_K_REC
    post_constant: float | None = None

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.js_variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.js_variant!r}")
        if self.post_mode not in POST_MODES:
            raise ValueError(f"unknown post_coefficient mode {self.post_mode!r}")
        if self.post_mode == POST_MODE_CONSTANT:
            if self.post_constant is None or self.post_constant <= 0:
                raise ValueError("constant mode needs a positive post_constant")
        elif self.post_constant is not None:
            raise ValueError("post_constant only applies to constant mode")
        if self.estimate_learner.kind not in REGRESSION_KINDS:
            raise ValueError("estimate_learner must be a regression kind")
        if self.shareability_learner.kind not in CLASSIFICATION_KINDS:
            raise ValueError("shareability_learner must be a classification kind")
        if self.year_pairs is not None:
            for pair in self.year_pairs:
                if len(pair) != 2:
                    raise ValueError("year_pairs must contain [year_m, year_n] pairs")

    @property
    def resolved_model_dir(self) -> str:
        return self.model_dir if self.model_dir is not None else self.output_dir


def _learner_from_dict(obj: Mapping, default_kind: str, default_seed: int) -> LearnerSpec:
    unknown = set(obj) - {"kind", "hyperparameters", "seed"}
    if unknown:
        raise ValueError(f"unknown learner fields: {sorted(unknown)}")
    return LearnerSpec(
        kind=obj.get("kind", default_kind),
        hyperparameters=obj.get("hyperparameters", {}),
        seed=obj.get("seed", default_seed),
    )


def _cv_from_dict(obj: Mapping) -> CvPlan:
    unknown = set(obj) - {"n_folds", "n_repeats", "stratified", "seed"}
    if unknown:
        raise ValueError(f"unknown cv fields: {sorted(unknown)}")
    return CvPlan(
        n_folds=obj.get("n_folds", 10),
        n_repeats=obj.get("n_repeats", 10),
        stratified=obj.get("stratified", False),
        seed=obj.get("seed", 0),
    )


RUN_CONFIG_FIELDS = frozenset(
    {
        "records_path",
        "output_dir",
        "seed",
        "labels_path",
        "census_path",
        "schema_path",
        "model_dir",
        "estimate_learner",
        "shareability_learner",
        "cv",
        "year_pairs",
        "js_variant",
        "post_coefficient",
    }
)


def run_config_from_dict(obj: Mapping) -> RunConfig:
    """Build a RunConfig from parsed JSON; unknown keys are rejected."""
    unknown = set(obj) - RUN_CONFIG_FIELDS
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    for required in ("records_path", "output_dir"):
        if required not in obj:
            raise ValueError(f"config is missing {required!r}")
    seed = obj.get("seed", 0)
    post = obj.get("post_coefficient", {"mode": POST_MODE_K_REC})
    post_unknown = set(post) - {"mode", "value"}
    if post_unknown:
        raise ValueError(f"unknown post_coefficient fields: {sorted(post_unknown)}")
    year_pairs = obj.get("year_pairs")
    if year_pairs is not None:
        year_pairs = tuple(tuple(int(y) for y in pair) for pair in year_pairs)
    return RunConfig(
        records_path=obj["records_path"],
        output_dir=obj["output_dir"],
        seed=seed,
        labels_path=obj.get("labels_path"),
        census_path=obj.get("census_path"),
        schema_path=obj.get("schema_path"),
        model_dir=obj.get("model_dir"),
        estimate_learner=_learner_from_dict(obj.get("estimate_learner", {}), "elastic_net", seed),
        shareability_learner=_learner_from_dict(
            obj.get("shareability_learner", {}), "logistic_regression", seed
        ),
        cv=_cv_from_dict(obj.get("cv", {})),
        year_pairs=year_pairs,
        js_variant=obj.get("js_variant", VARIANT_CLASSIC),
        post_mode=post.get("mode", POST_MODE_K_REC),
        post_constant=post.get("value"),
    )


def run_config_to_dict(config: RunConfig) -> dict:
    post: dict = {"mode": config.post_mode}
    if config.post_constant is not None:
        post["value"] = config.post_constant
    return {
        "records_path": config.records_path,
        "output_dir": config.output_dir,
        "seed": config.seed,
        "labels_path": config.labels_path,
        "census_path": config.census_path,
        "schema_path": config.schema_path,
        "model_dir": config.model_dir,
        "estimate_learner": {
            "kind": config.estimate_learner.kind,
            "hyperparameters": dict(config.estimate_learner.hyperparameters),
            "seed": config.estimate_learner.seed,
        },
        "shareability_learner": {
            "kind": config.shareability_learner.kind,
            "hyperparameters": dict(config.shareability_learner.hyperparameters),
            "seed": config.shareability_learner.seed,
        },
        "cv": {
            "n_folds": config.cv.n_folds,
            "n_repeats": config.cv.n_repeats,
            "stratified": config.cv.stratified,
            "seed": config.cv.seed,
        },
        "year_pairs": None
        if config.year_pairs is None
        else [list(pair) for pair in config.year_pairs],
        "js_variant": config.js_variant,
        "post_coefficient": post,
    }


def load_run_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"config is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise DataError("config must be a JSON object")
    try:
        return run_config_from_dict(obj)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def rmse(estimates: Sequence[float], references: Sequence[float]) -> float:
    """Root-mean-square difference between two equal-length vectors."""
    a = np.asarray(estimates, dtype=np.float64)
    b = np.asarray(references, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError("rmse needs two equal-length vectors")
    if a.size == 0:
        raise ValueError("rmse needs at least one pair")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class RunData:
    """Validated input state shared by every stage after ingest."""

    records: tuple[ImageRecord, ...]
    collections: tuple[Collection, ...]
    albums: tuple[Collection, ...]
    occasions: tuple[int, ...]
    census: ReferenceCensus | None


@dataclass(frozen=True)
class FeatureBundle:
    """Featurize-stage output: training sets plus the album prediction rows."""

    image_schema: FeatureSchema
    collection_schema: FeatureSchema
    estimate_dataset: Dataset
    shareability_dataset: Dataset
    album_matrix_rows: np.ndarray
    album_ids: tuple[str, ...]
    album_occasions: tuple[int, ...]
    album_counts: tuple[int, ...]


@dataclass(frozen=True)
class PipelineResult:
    config_path: str
    summary_path: str
    share_estimates_path: str
    population_paths: Mapping[str, str]
    evaluation_paths: Mapping[str, str]
    model_paths: Mapping[str, str]
    summary_rows: tuple[tuple[str, str, str, str, str], ...]
    rmse_ours: float | None
    rmse_js: float | None
    our_approach: Mapping[int, float]
    jolly_seber: Mapping[int, float]


def load_labeled_records(
    records_path: str, labels_path: str | None = None
) -> tuple[ImageRecord, ...]:
    """Read records and, when given, join survey share flags onto them."""
    if not os.path.exists(records_path):
        raise DataError(f"records file not found: {records_path}")
    records = read_records(records_path)
    if labels_path is not None:
        if not os.path.exists(labels_path):
            raise DataError(f"survey labels file not found: {labels_path}")
        with open(labels_path, "rb") as handle:
            labels = parse_survey_labels(handle)
        records = join_survey_labels(records, labels)
    return tuple(records)


def assemble_run_data(
    records: Sequence[ImageRecord], census: ReferenceCensus | None = None
) -> RunData:
    collections = tuple(group_collections(records))
    albums = tuple(a for a in (album_view(c) for c in collections) if a is not None)
    occasions = tuple(sorted({record.occasion for record in records}))
    if not albums:
        raise DataError("no collection has any shared images")
    return RunData(tuple(records), collections, albums, occasions, census)


def _ingest(config: RunConfig) -> RunData:
    records = load_labeled_records(config.records_path, config.labels_path)
    census = None
    if config.census_path is not None:
        census = read_reference_census(config.census_path)
    return assemble_run_data(records, census)


def featurize_run_data(data: RunData, schema_path: str | None = None) -> FeatureBundle:
    """Build both training sets and the album feature rows.

    The estimate set has one row per fully flag-covered collection with at
    least one sighted individual; the shareability set has one row per
    flagged image. When ``schema_path`` is given, the inferred collection
    schema must match the pinned one.
    """
    raw_names = infer_raw_names(data.records)
    img_schema = image_schema(raw_names)
    col_schema = collection_schema(raw_names)
    if schema_path is not None:
        if not os.path.exists(schema_path):
            raise DataError(f"schema file not found: {schema_path}")
        expected = read_schema(schema_path)
        if expected != col_schema:
            raise DataError("records do not match the schema file")

    estimate_vectors = []
    estimate_labels = []
    shareability_vectors = []
    shareability_labels = []
    for collection in data.collections:
        flagged = [img for img in collection.images if img.shared is not None]
        for image in flagged:
            shareability_vectors.append(featurize_image(image, collection, img_schema))
            shareability_labels.append(1.0 if image.shared else 0.0)
        if len(flagged) != collection.n_images:
            continue  # share fraction needs the whole collection labeled
        album = album_view(collection)
        if album is None:
            continue
        try:
            label = share_label_from_flags(collection)
        except NoIndividualsError:
            continue
        estimate_vectors.append(featurize_collection(album, col_schema))
        estimate_labels.append(label)

    if not estimate_vectors:
        raise DataError("no fully labeled collections to train the share model on")
    if not shareability_vectors:
        raise DataError("no labeled images to train the shareability model on")

    album_rows = np.vstack(
        [featurize_collection(album, col_schema).values for album in data.albums]
    )
    return FeatureBundle(
        image_schema=img_schema,
        collection_schema=col_schema,
        estimate_dataset=assemble_dataset(estimate_vectors, estimate_labels),
        shareability_dataset=assemble_dataset(shareability_vectors, shareability_labels),
        album_matrix_rows=album_rows,
        album_ids=tuple(album.collection_id for album in data.albums),
        album_occasions=tuple(album.occasion for album in data.albums),
        album_counts=tuple(len(album.distinct_individuals) for album in data.albums),
    )


def _post_coefficients(
    config: RunConfig, estimates: Sequence[ShareEstimate], occasions: tuple[int, ...]
) -> dict[int, float]:
    if config.post_mode == POST_MODE_CONSTANT:
        return {occ: float(config.post_constant) for occ in occasions}
    pairs = config.year_pairs if config.year_pairs is not None else tuple(zip(occasions, occasions[1:]))
    out = {}
    for occ in occasions:
        pooled = []
        for year_m, year_n in pairs:
            if occ not in (year_m, year_n):
                continue
            try:
                pooled.append(pool_coefficient(estimates, year_m, year_n).k_rec)
            except DataError:
                continue
        if not pooled:
            # occasion in no covered pair: pool over the single year,
            # or leave the abundance unscaled when it has no estimates
            try:
                pooled = [pool_coefficient(estimates, occ, occ).k_rec]
            except DataError:
                pooled = [1.0]
        out[occ] = sum(sorted(pooled)) / len(pooled)
    return out


def _render_number(value: float) -> str:
    return repr(float(value))


def _summary_rows(
    data: RunData,
    our_approach: Mapping[int, float],
    raw_js: PopulationEstimate,
) -> tuple[list[tuple[str, str, str, str, str]], float | None, float | None]:
    images_per_occasion = {occ: 0 for occ in data.occasions}
    for album in data.albums:
        images_per_occasion[album.occasion] += album.n_images

    raw_abundance = {}
    for row in raw_js.estimates:
        raw_abundance[row.occasion] = row.abundance if row.abundance is not None else 0.0

    rows = []
    ours_vs_official: list[tuple[float, float]] = []
    js_vs_official: list[tuple[float, float]] = []
    for occ in data.occasions:
        census_row = data.census.lookup(occ) if data.census is not None else None
        if census_row is None or census_row.official is None:
            official_cell = ""
        else:
            official_cell = str(census_row.official) + ("+" if census_row.lower_bound else "")
            ours_vs_official.append((our_approach[occ], float(census_row.official)))
            js_vs_official.append((raw_abundance[occ], float(census_row.official)))
        rows.append(
            (
                str(occ),
                official_cell,
                _render_number(our_approach[occ]),
                _render_number(raw_abundance[occ]),
                str(images_per_occasion[occ]),
            )
        )
    rmse_ours = rmse(*zip(*ours_vs_official)) if ours_vs_official else None
    rmse_js = rmse(*zip(*js_vs_official)) if js_vs_official else None
    return rows, rmse_ours, rmse_js


def run_estimate_pipeline(config: RunConfig) -> PipelineResult:
    """Run every stage and write the report files into the output dir."""
    os.makedirs(config.output_dir, exist_ok=True)
    os.makedirs(config.resolved_model_dir, exist_ok=True)
    lock_path = os.path.join(config.output_dir, LOCK_FILENAME)
    try:
        lock_fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UsageError(f"output directory is locked by another run: {lock_path}") from None
    os.close(lock_fd)

    created: list[str] = []

    def _output(name: str, directory: str | None = None) -> str:
        path = os.path.join(directory or config.output_dir, name)
        created.append(path)
        return path

    def _run(stage: str, fn, *args):
        try:
            return fn(*args)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, str(exc)) from exc

    try:
        config_path = _output("resolved_config.json")
        with open(config_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(run_config_to_dict(config), handle, indent=2, sort_keys=True)
            handle.write("\n")

        data = _run("ingest", _ingest, config)
        feats = _run("featurize", featurize_run_data, data, config.schema_path)

        def _train():
            est_model = fit(config.estimate_learner, feats.estimate_dataset)
            share_model = fit(config.shareability_learner, feats.shareability_dataset)
            paths = {
                "estimate": _output("estimate_model.json", config.resolved_model_dir),
                "shareability": _output("shareability_model.json", config.resolved_model_dir),
            }
            save_model(est_model, paths["estimate"])
            save_model(share_model, paths["shareability"])
            schema_out = _output("collection_schema.json", config.resolved_model_dir)
            write_schema(feats.collection_schema, schema_out)
            return est_model, share_model, paths

        est_model, share_model, model_paths = _run("train", _train)

        def _evaluate():
            estimate_labels = feats.estimate_dataset.labels
            estimate_metrics = ("mse", "r2")
            if np.all(estimate_labels == estimate_labels[0]):
                estimate_metrics = ("mse",)  # r2 is undefined without variance
            paths = {}
            for problem, spec, dataset, metrics in (
                ("estimate", config.estimate_learner, feats.estimate_dataset, estimate_metrics),
                (
                    "shareability",
                    config.shareability_learner,
                    feats.shareability_dataset,
                    ("accuracy", "f1"),
                ),
            ):
                report = cross_validate(spec, dataset, config.cv, metrics)
                path = _output(f"evaluation_{problem}.json")
                with open(path, "w", encoding="utf-8", newline="\n") as handle:
                    handle.write(report_to_json(report))
                paths[problem] = path
            return paths

        evaluation_paths = _run("evaluate", _evaluate)

        def _bias_correct():
            fractions = predict_share_fractions(est_model, feats.album_matrix_rows)
            estimates = [
                make_share_estimate(cid, occ, count, float(s))
                for cid, occ, count, s in zip(
                    feats.album_ids, feats.album_occasions, feats.album_counts, fractions
                )
            ]
            share_path = _output("share_estimates.csv")
            write_share_estimates(estimates, share_path)
            matrix = build_encounter_matrix(list(data.albums), data.occasions)
            corrected = apply_bias_to_counts(estimates, matrix)
            return estimates, matrix, corrected, share_path

        share_estimates, album_matrix, corrected_stats, share_path = _run(
            "bias_correct", _bias_correct
        )

        def _estimate():
            raw = jolly_seber_estimate(occasion_statistics(album_matrix), config.js_variant)
            population_paths = {}
            by_variant = {}
            for variant in VARIANTS:
                estimate = jolly_seber_estimate(corrected_stats, variant)
                by_variant[variant] = estimate
                path = _output(f"population_estimate_{variant}.csv")
                write_population_estimates(estimate, path)
                population_paths[variant] = path
            coefficients = _post_coefficients(config, share_estimates, data.occasions)
            ours = {}
            for row in by_variant[config.js_variant].estimates:
                abundance = row.abundance if row.abundance is not None else 0.0
                ours[row.occasion] = coefficients[row.occasion] * abundance
            return raw, ours, population_paths

        raw_js, our_approach, population_paths = _run("estimate", _estimate)

        def _report():
            rows, rmse_ours, rmse_js = _summary_rows(data, our_approach, raw_js)
            path = _output("summary.csv")
            with open(path, "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(SUMMARY_CSV_HEADER)
                for row in rows:
                    writer.writerow(row)
                writer.writerow(
                    [
                        "RMSE",
                        "",
                        "" if rmse_ours is None else _render_number(rmse_ours),
                        "" if rmse_js is None else _render_number(rmse_js),
                        "",
                    ]
                )
            return rows, rmse_ours, rmse_js, path

        rows, rmse_ours, rmse_js, summary_path = _run("report", _report)

        raw_abundance = {
            row.occasion: row.abundance if row.abundance is not None else 0.0
            for row in raw_js.estimates
        }
        return PipelineResult(
            config_path=config_path,
            summary_path=summary_path,
            share_estimates_path=share_path,
            population_paths=population_paths,
            evaluation_paths=evaluation_paths,
            model_paths=model_paths,
            summary_rows=tuple(rows),
            rmse_ours=rmse_ours,
            rmse_js=rmse_js,
            our_approach=our_approach,
            jolly_seber=raw_abundance,
        )
    except StageError:
        for path in created:
            if os.path.exists(path):
                os.remove(path)
        raise
    finally:
        if os.path.exists(lock_path):
            os.remove(lock_path)
