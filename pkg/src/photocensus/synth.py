"""Synthetic photographic surveys with known ground truth.

A simulated world has a true animal population per occasion, a set of
photographers who each encounter a random subset of it, one or more
images per encountered animal, and a per-image sharing decision drawn
from a logistic model over the image's feature row.  Because the true
population and every sharing decision are known, worlds double as
oracles for the bias-correction and abundance estimators.

All randomness flows from the master seed through four labeled
sub-streams (population, encounters, features, sharing), each a PCG64
generator (128-bit state, 128-bit increment) seeded via SeedSequence.
Adding draws to one stream never perturbs the others, and generation
order is fixed, so worlds are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .bias import share_label_from_flags
from .features import STRUCTURAL_IMAGE_FEATURES, featurize_image, image_schema
from .models.linear import sigmoid
from .records import ImageRecord, group_collections, write_records_jsonl

STREAM_POPULATION = 0
STREAM_ENCOUNTERS = 1
STREAM_FEATURES = 2
STREAM_SHARING = 3


@dataclass(frozen=True)
class SimConfig:
    """Generator settings.

    Population sizes come either from ``true_population`` (one size per
    occasion, realized as nested prefixes of a fixed roster) or from a
    demographic process (``initial_population`` + per-animal Bernoulli
    ``survival`` + Poisson ``recruitment`` per occasion).

    ``feature_noise`` keys name the raw features every image carries;
    each value is the Gaussian noise std around the image's animal
    trait.  ``trait_std`` > 0 gives each animal a persistent latent
    trait that all raw features of its images share, which makes
    sharing behavior animal-dependent when the share model weights a
    raw feature.
    """

    seed: int
    occasions: tuple[int, ...]
    true_population: tuple[int, ...] | None = None
    initial_population: int | None = None
    survival: float | None = None
    recruitment: float | None = None
    n_photographers: int = 10
    encounter_rate: float = 20.0
    images_per_animal: float = 1.5
    share_intercept: float = 0.0
    share_coefficients: Mapping[str, float] = field(default_factory=dict)
    feature_noise: Mapping[str, float] = field(default_factory=dict)
    trait_std: float = 0.0

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not self.occasions:
            raise ValueError("need at least one occasion")
        if any(b <= a for a, b in zip(self.occasions, self.occasions[1:])):
            raise ValueError("occasions must be strictly increasing")
        explicit = self.true_population is not None
        process = (
            self.initial_population is not None
            and self.survival is not None
            and self.recruitment is not None
        )
        if explicit == process:
            raise ValueError("give either true_population or the survival-process fields")
        if explicit:
            if len(self.true_population) != len(self.occasions):
                raise ValueError("true_population must have one size per occasion")
            if any(n < 0 for n in self.true_population):
                raise ValueError("population sizes must be non-negative")
        else:
            if self.initial_population < 0:
                raise ValueError("initial_population must be non-negative")
            if not 0.0 <= self.survival <= 1.0:
                raise ValueError("survival must be a probability")
            if self.recruitment < 0:
                raise ValueError("recruitment must be non-negative")
        if self.n_photographers < 1:
            raise ValueError("need at least one photographer")
        if self.encounter_rate < 0:
            raise ValueError("encounter_rate must be non-negative")
        if self.images_per_animal < 1:
            raise ValueError("images_per_animal must be at least 1")
        if self.trait_std < 0:
            raise ValueError("trait_std must be non-negative")
        for name, std in self.feature_noise.items():
            if std < 0:
                raise ValueError(f"noise std for {name!r} must be non-negative")
        known = set(STRUCTURAL_IMAGE_FEATURES) | set(self.feature_noise)
        unknown = sorted(set(self.share_coefficients) - known)
        if unknown:
            raise ValueError(f"share coefficients reference unknown features: {unknown}")

    @property
    def raw_feature_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.feature_noise))


@dataclass(frozen=True)
class SimWorld:
    """A generated world: observable records plus the hidden truth."""

    config: SimConfig
    occasions: tuple[int, ...]
    true_population: tuple[int, ...]
    records: tuple[ImageRecord, ...]
    true_share_fraction: Mapping[str, float]
    true_distinct_counts: Mapping[str, int]
    capped_occasions: tuple[int, ...]


def _stream(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, label]))


def _animal_id(index: int) -> str:
    return f"a{index:06d}"


def _population_trajectory(config: SimConfig, rng: np.random.Generator) -> list[list[str]]:
    if config.true_population is not None:
        roster = [_animal_id(i) for i in range(max(config.true_population, default=0))]
        return [roster[:n] for n in config.true_population]
    alive = [_animal_id(i) for i in range(config.initial_population)]
    next_index = config.initial_population
    trajectory = [list(alive)]
    for _ in config.occasions[1:]:
        keep = rng.random(len(alive)) < config.survival
        survivors = [aid for aid, kept in zip(alive, keep) if kept]
        recruits = int(rng.poisson(config.recruitment))
        newborn = [_animal_id(i) for i in range(next_index, next_index + recruits)]
        next_index += recruits
        alive = survivors + newborn
        trajectory.append(list(alive))
    return trajectory


def _sample_encounters(
    config: SimConfig, trajectory: list[list[str]], rng: np.random.Generator
) -> tuple[list[ImageRecord], list[int]]:
    """Flagless, featureless image records plus occasions where the
    encounter draw hit the population cap."""
    records: list[ImageRecord] = []
    capped: list[int] = []
    for occ_index, occasion in enumerate(config.occasions):
        alive = trajectory[occ_index]
        occasion_capped = False
        for p in range(config.n_photographers):
            want = int(rng.poisson(config.encounter_rate))
            if want > len(alive):
                occasion_capped = True
            count = min(want, len(alive))
            if count == 0:
                continue
            chosen = rng.choice(len(alive), size=count, replace=False)
            collection_id = f"c{occasion}-p{p:03d}"
            sequence = 0
            for animal_index in chosen:
                animal = alive[int(animal_index)]
                n_images = 1 + int(rng.poisson(config.images_per_animal - 1.0))
                for _ in range(n_images):
                    records.append(
                        ImageRecord(
                            image_id=f"{collection_id}-i{sequence:04d}",
                            collection_id=collection_id,
                            photographer_id=f"p{p:03d}",
                            occasion=occasion,
                            timestamp=int(rng.integers(0, 36_000)),
                            individual_ids=frozenset({animal}),
                        )
                    )
                    sequence += 1
        if occasion_capped:
            capped.append(occasion)
    return records, capped


def _attach_raw_features(
    config: SimConfig,
    records: list[ImageRecord],
    trajectory: list[list[str]],
    rng: np.random.Generator,
) -> list[ImageRecord]:
    # traits cover every animal that ever lived, photographed or not,
    # so encounter outcomes cannot shift trait assignment
    all_animals = sorted({aid for roster in trajectory for aid in roster})
    traits = {aid: float(rng.normal(0.0, config.trait_std)) for aid in all_animals}
    names = config.raw_feature_names
    out = []
    for record in records:
        base = float(np.mean([traits[aid] for aid in sorted(record.individual_ids)]))
        raw = {name: base + float(rng.normal(0.0, config.feature_noise[name])) for name in names}
        out.append(replace(record, raw_features=raw))
    return out


def _draw_sharing(
    config: SimConfig, records: list[ImageRecord], rng: np.random.Generator
) -> list[ImageRecord]:
    schema = image_schema(config.raw_feature_names)
    weights = np.zeros(len(schema.names))
    for name, value in config.share_coefficients.items():
        weights[schema.names.index(name)] = value

    flags: dict[str, bool] = {}
    for collection in group_collections(records):
        scores = np.array(
            [
                config.share_intercept + float(weights @ featurize_image(img, collection, schema).values)
                for img in collection.images
            ]
        )
        probabilities = sigmoid(scores)
        for image, p in zip(collection.images, probabilities):
            flags[image.image_id] = bool(rng.random() < p)
    return [replace(record, shared=flags[record.image_id]) for record in records]


def generate(config: SimConfig) -> SimWorld:
    """Generate a world; bit-reproducible for a given config."""
    rng_population = _stream(config.seed, STREAM_POPULATION)
    rng_encounters = _stream(config.seed, STREAM_ENCOUNTERS)
    rng_features = _stream(config.seed, STREAM_FEATURES)
    rng_sharing = _stream(config.seed, STREAM_SHARING)

    trajectory = _population_trajectory(config, rng_population)
    bare, capped = _sample_encounters(config, trajectory, rng_encounters)
    featured = _attach_raw_features(config, bare, trajectory, rng_features)
    records = _draw_sharing(config, featured, rng_sharing)
    records.sort(key=lambda r: r.image_id)

    share_fraction: dict[str, float] = {}
    distinct_counts: dict[str, int] = {}
    for collection in group_collections(records):
        share_fraction[collection.collection_id] = share_label_from_flags(collection)
        distinct_counts[collection.collection_id] = len(collection.distinct_individuals)

    return SimWorld(
        config=config,
        occasions=config.occasions,
        true_population=tuple(len(roster) for roster in trajectory),
        records=tuple(records),
        true_share_fraction=share_fraction,
        true_distinct_counts=distinct_counts,
        capped_occasions=tuple(capped),
    )


SIM_CONFIG_FIELDS = frozenset(
    {
        "seed",
        "occasions",
        "true_population",
        "initial_population",
        "survival",
        "recruitment",
        "n_photographers",
        "encounter_rate",
        "images_per_animal",
        "share_intercept",
        "share_coefficients",
        "feature_noise",
        "trait_std",
    }
)


def sim_config_from_dict(obj: Mapping) -> SimConfig:
    """Build a SimConfig from parsed JSON; unknown keys are rejected."""
    unknown = sorted(set(obj) - SIM_CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"unknown simulation fields: {unknown}")
    for required in ("seed", "occasions"):
        if required not in obj:
            raise ValueError(f"simulation config is missing {required!r}")
    kwargs = dict(obj)
    kwargs["occasions"] = tuple(kwargs["occasions"])
    if kwargs.get("true_population") is not None:
        kwargs["true_population"] = tuple(kwargs["true_population"])
    return SimConfig(**kwargs)


def true_share_fractions(world: SimWorld) -> dict[str, float]:
    """Recompute per-collection shared-individual fractions from the records."""
    return {
        collection.collection_id: share_label_from_flags(collection)
        for collection in group_collections(world.records)
    }


def export_world(world: SimWorld, records_path: str, truth_path: str) -> None:
    """Write observable records as JSONL and the hidden truth as JSON."""
    write_records_jsonl(world.records, records_path)
    payload = {
        "seed": world.config.seed,
        "occasions": list(world.occasions),
        "true_population": {
            str(occ): n for occ, n in zip(world.occasions, world.true_population)
        },
        "capped_occasions": list(world.capped_occasions),
        "collections": {
            cid: {
                "share_fraction": world.true_share_fraction[cid],
                "distinct_individuals": world.true_distinct_counts[cid],
            }
            for cid in sorted(world.true_share_fraction)
        },
    }
    with open(truth_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
