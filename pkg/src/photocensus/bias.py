"""Share-bias correction: from predicted share fractions to coefficients.

A photographer who shares only part of their material hides animals. The
regression model predicts the share fraction s of each observed collection;
its inverse k = 1/s scales the observed distinct-individual count n_i up to
an estimate of what the full SD set held. Per-collection coefficients pool
into k_rec over a year pair, the single multiplier applied to the final
abundance estimate.

Predictions are clamped into [CLAMP_FLOOR, 1.0] before inversion so a
near-zero prediction cannot inject an unbounded population contribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, NoIndividualsError
from .features import FeatureVector
from .models import Model, predict
from .records import Collection

CLAMP_FLOOR = 0.05


@dataclass(frozen=True)
class ShareEstimate:
    """One collection's share prediction and its derived correction."""

    collection_id: str
    occasion: int
    n_observed: int
    share_fraction: float
    coefficient: float
    corrected_count: float

    def __post_init__(self):
        if not CLAMP_FLOOR <= self.share_fraction <= 1.0:
            raise ValueError(f"share fraction {self.share_fraction} outside [{CLAMP_FLOOR}, 1]")
        if self.coefficient < 1.0:
            raise ValueError(f"coefficient {self.coefficient} below 1")
        if self.n_observed < 0:
            raise ValueError("observed count must be non-negative")


@dataclass(frozen=True)
class PooledCoefficient:
    """k_rec: the mean coefficient over a pair of occasions."""

    year_pair: tuple[int, int]
    k_rec: float
    contributing: int

    def __post_init__(self):
        if self.contributing < 1:
            raise ValueError("a pooled coefficient needs at least one contributor")
        if self.k_rec < 1.0:
            raise ValueError(f"k_rec {self.k_rec} below 1")


def clamp_share_fraction(raw: float) -> float:
    """Clamp a raw regression output into [CLAMP_FLOOR, 1.0]."""
    return float(min(1.0, max(CLAMP_FLOOR, raw)))


def predict_share_fraction(model: Model, vector: FeatureVector) -> float:
    """Model prediction for one collection, clamped to a usable fraction."""
    raw = predict(model, vector.values.reshape(1, -1))[0]
    return clamp_share_fraction(float(raw))


def predict_share_fractions(model: Model, matrix: np.ndarray) -> np.ndarray:
    """Batch variant over a stacked collection-feature matrix."""
    raw = predict(model, matrix)
    return np.clip(raw, CLAMP_FLOOR, 1.0)


def coefficient(share_fraction: float) -> float:
    """k = 1 / s for a clamped share fraction."""
    if not CLAMP_FLOOR <= share_fraction <= 1.0:
        raise ValueError(
            f"share fraction {share_fraction} outside [{CLAMP_FLOOR}, 1]; clamp first"
        )
    return 1.0 / share_fraction


def corrected_count(k: float, n_observed: int) -> float:
    """The corrected count k * n_i, kept real; rounding happens at the
    estimator boundary."""
    if n_observed < 0:
        raise ValueError("observed count must be non-negative")
    if k < 1.0:
        raise ValueError(f"coefficient {k} below 1")
    return k * n_observed


def make_share_estimate(
    collection_id: str, occasion: int, n_observed: int, raw_prediction: float
) -> ShareEstimate:
    s = clamp_share_fraction(raw_prediction)
    k = coefficient(s)
    return ShareEstimate(
        collection_id=collection_id,
        occasion=occasion,
        n_observed=n_observed,
        share_fraction=s,
        coefficient=k,
        corrected_count=corrected_count(k, n_observed),
    )


def pool_coefficient(
    estimates: Iterable[ShareEstimate], year_m: int, year_n: int
) -> PooledCoefficient:
    """Mean k over estimates whose occasion is year_m or year_n.

    Contributions are summed in sorted order, so the result does not depend
    on the order estimates arrive in.
    """
    ks = sorted(
        est.coefficient for est in estimates if est.occasion in (year_m, year_n)
    )
    if not ks:
        raise DataError(f"no share estimates fall in occasions ({year_m}, {year_n})")
    return PooledCoefficient(
        year_pair=(year_m, year_n),
        k_rec=float(sum(ks) / len(ks)),
        contributing=len(ks),
    )


def compute_share_label(source: Collection, shared: Collection | None) -> float:
    """Training label: the fraction of the source set's individuals that
    appear in the shared subset.

    ``shared`` is None when nothing was shared (label 0). A source set that
    sighted no individuals cannot be labeled and raises
    :class:`NoIndividualsError` so dataset builders can exclude it.
    """
    if not source.distinct_individuals:
        raise NoIndividualsError(
            f"collection {source.collection_id!r} sighted no individuals"
        )
    if shared is None:
        return 0.0
    source_ids = {img.image_id for img in source.images}
    foreign = [img.image_id for img in shared.images if img.image_id not in source_ids]
    if foreign:
        raise DataError(
            f"shared subset of {source.collection_id!r} contains images outside "
            f"the source set: {sorted(foreign)}"
        )
    return len(shared.distinct_individuals) / len(source.distinct_individuals)


def share_label_from_flags(collection: Collection) -> float:
    """Label directly from a collection whose images carry shared flags."""
    if not collection.distinct_individuals:
        raise NoIndividualsError(
            f"collection {collection.collection_id!r} sighted no individuals"
        )
    return collection.n_shared_individuals / len(collection.distinct_individuals)


SHARE_CSV_HEADER = ["collection_id", "occasion", "n_i", "s_hat", "k_i", "n_hat"]


def write_share_estimates(estimates: Sequence[ShareEstimate], path: str) -> None:
    """CSV export, one row per collection."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SHARE_CSV_HEADER)
        for est in estimates:
            writer.writerow(
                [
                    est.collection_id,
                    est.occasion,
                    est.n_observed,
                    repr(est.share_fraction),
                    repr(est.coefficient),
                    repr(est.corrected_count),
                ]
            )
