"""Open-population abundance estimation from encounter matrices.

The Jolly-Seber method reconstructs, per capture occasion, the marked
population size M_hat, the total abundance N_hat, survival phi_hat, and
recruitment B_hat from four observable counts: animals captured, marked
recaptures, animals released that were caught again later, and animals
skipped (seen before and after an occasion but not at it).

First and last occasions never yield an abundance; the skipped and
later-recaught counts that drive M_hat are structurally incomplete
there.  Occasions whose denominators vanish are flagged inestimable
with a machine-readable reason rather than raising.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bias import ShareEstimate
from .encounter import EncounterMatrix
from .errors import DataError

VARIANT_CLASSIC = "classic"
VARIANT_BIAS_CORRECTED = "bias_corrected"
VARIANTS = (VARIANT_CLASSIC, VARIANT_BIAS_CORRECTED)

REASON_FIRST = "first_occasion"
REASON_LAST = "last_occasion"
REASON_ZERO_RECAPTURES = "zero_recaptures"
REASON_ZERO_MARKED = "zero_marked"
REASONS = frozenset({REASON_FIRST, REASON_LAST, REASON_ZERO_RECAPTURES, REASON_ZERO_MARKED})

ESTIMATE_CSV_HEADER = (
    "occasion",
    "captured",
    "m",
    "r",
    "z",
    "M_hat",
    "N_hat",
    "phi_hat",
    "B_hat",
    "estimable",
    "reason",
)


@dataclass(frozen=True)
class OccasionStatistics:
    """Per-occasion capture counts, aligned with ``occasions``.

    ``released`` equals ``captured`` under the photographic protocol:
    taking a picture removes nothing from the population.
    """

    occasions: tuple[int, ...]
    captured: tuple[int, ...]
    marked_recaptured: tuple[int, ...]
    released: tuple[int, ...]
    later_recaught: tuple[int, ...]
    skipped: tuple[int, ...]

    def __post_init__(self) -> None:
        t = len(self.occasions)
        if t < 2:
            raise ValueError("need at least 2 occasions")
        for name in ("captured", "marked_recaptured", "released", "later_recaught", "skipped"):
            values = getattr(self, name)
            if len(values) != t:
                raise ValueError(f"{name} must have one entry per occasion")
            if any(v < 0 or v != int(v) for v in values):
                raise ValueError(f"{name} must contain non-negative integers")
        for i in range(t):
            if self.marked_recaptured[i] > self.captured[i]:
                raise ValueError(f"occasion {self.occasions[i]}: marked recaptures exceed captures")
            if self.later_recaught[i] > self.released[i]:
                raise ValueError(f"occasion {self.occasions[i]}: later recaptures exceed releases")
        if self.marked_recaptured[0] != 0 or self.skipped[0] != 0:
            raise ValueError("first occasion cannot have prior-capture statistics")

    @property
    def n_occasions(self) -> int:
        return len(self.occasions)


@dataclass(frozen=True)
class OccasionEstimate:
    """Estimates for one occasion; None marks an inestimable quantity.

    Each None value is paired with a reason tag from ``REASONS``.
    """

    occasion: int
    captured: int
    marked_recaptured: int
    released: int
    later_recaught: int
    skipped: int
    marked_pop: float | None = None
    abundance: float | None = None
    survival: float | None = None
    recruitment: float | None = None
    marked_pop_reason: str | None = None
    abundance_reason: str | None = None
    survival_reason: str | None = None
    recruitment_reason: str | None = None

    @property
    def estimable(self) -> bool:
        return self.abundance is not None


@dataclass(frozen=True)
class PopulationEstimate:
    variant: str
    occasions: tuple[int, ...]
    estimates: tuple[OccasionEstimate, ...]

    def for_occasion(self, occasion: int) -> OccasionEstimate:
        for est in self.estimates:
            if est.occasion == occasion:
                return est
        raise KeyError(f"unknown occasion {occasion}")

    def abundance_by_occasion(self) -> dict[int, float]:
        """Abundances for the occasions where one could be estimated."""
        return {e.occasion: e.abundance for e in self.estimates if e.abundance is not None}


def occasion_statistics(matrix: EncounterMatrix) -> OccasionStatistics:
    """Count captures, marked recaptures, later recaptures, and skips.

    Released counts equal captured counts: there are no losses on
    capture when capture means being photographed.
    """
    n_occ = len(matrix.occasions)
    if n_occ < 2:
        raise DataError("encounter matrix needs at least 2 occasions")
    caught = np.asarray(matrix.matrix) > 0
    captured = []
    marked = []
    recaught = []
    skipped = []
    for t in range(n_occ):
        here = caught[:, t]
        seen_before = caught[:, :t].any(axis=1)
        seen_after = caught[:, t + 1 :].any(axis=1)
        captured.append(int(here.sum()))
        marked.append(int((here & seen_before).sum()))
        recaught.append(int((here & seen_after).sum()))
        skipped.append(int((~here & seen_before & seen_after).sum()))
    return OccasionStatistics(
        occasions=matrix.occasions,
        captured=tuple(captured),
        marked_recaptured=tuple(marked),
        released=tuple(captured),
        later_recaught=tuple(recaught),
        skipped=tuple(skipped),
    )


def _marked_pop(stats: OccasionStatistics, t: int, variant: str) -> tuple[float | None, str | None]:
    if t == 0:
        # nothing is marked before the study starts
        return 0.0, None
    if t == stats.n_occasions - 1:
        return None, REASON_LAST
    m = stats.marked_recaptured[t]
    rel = stats.released[t]
    r = stats.later_recaught[t]
    z = stats.skipped[t]
    if variant == VARIANT_CLASSIC:
        if r == 0:
            return None, REASON_ZERO_RECAPTURES
        return m + rel * z / r, None
    return m + (rel + 1) * z / (r + 1), None


def _abundance(
    stats: OccasionStatistics, t: int, variant: str, marked_pop: float | None, marked_reason: str | None
) -> tuple[float | None, str | None]:
    if t == 0:
        return None, REASON_FIRST
    if t == stats.n_occasions - 1:
        return None, REASON_LAST
    if marked_pop is None:
        return None, marked_reason
    n = stats.captured[t]
    m = stats.marked_recaptured[t]
    if variant == VARIANT_CLASSIC:
        if m == 0:
            return None, REASON_ZERO_MARKED
        return n * marked_pop / m, None
    return (n + 1) * marked_pop / (m + 1), None


def jolly_seber_estimate(stats: OccasionStatistics, variant: str = VARIANT_CLASSIC) -> PopulationEstimate:
    """Estimate abundance, survival, and recruitment per occasion.

    The classic variant uses M_hat = m + R*z/r and N_hat = n*M_hat/m;
    the bias_corrected variant adds one to each denominator's pairing
    (M_hat = m + (R+1)*z/(r+1), N_hat = (n+1)*M_hat/(m+1)), which keeps
    small-sample occasions estimable.  Survival and recruitment follow
    from consecutive occasions:

        phi_hat_t = M_hat_{t+1} / (M_hat_t - m_t + R_t)
        B_hat_t   = N_hat_{t+1} - phi_hat_t * (N_hat_t - n_t + R_t)

    Inestimability is data, not failure: affected quantities come back
    as None with a reason tag.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n_occ = stats.n_occasions
    marked = [_marked_pop(stats, t, variant) for t in range(n_occ)]
    abundance = [_abundance(stats, t, variant, marked[t][0], marked[t][1]) for t in range(n_occ)]

    survival: list[tuple[float | None, str | None]] = []
    for t in range(n_occ):
        if t == n_occ - 1:
            survival.append((None, REASON_LAST))
            continue
        m_now, reason_now = marked[t]
        m_next, reason_next = marked[t + 1]
        if m_now is None:
            survival.append((None, reason_now))
            continue
        if m_next is None:
            survival.append((None, reason_next))
            continue
        denom = m_now - stats.marked_recaptured[t] + stats.released[t]
        if denom <= 0:
            survival.append((None, REASON_ZERO_RECAPTURES))
            continue
        survival.append((m_next / denom, None))

    recruitment: list[tuple[float | None, str | None]] = []
    for t in range(n_occ):
        if t == n_occ - 1:
            recruitment.append((None, REASON_LAST))
            continue
        parts = (abundance[t], abundance[t + 1], survival[t])
        missing = next((reason for value, reason in parts if value is None), None)
        if missing is not None:
            recruitment.append((None, missing))
            continue
        n_now, n_next, phi = abundance[t][0], abundance[t + 1][0], survival[t][0]
        value = n_next - phi * (n_now - stats.captured[t] + stats.released[t])
        recruitment.append((value, None))

    estimates = tuple(
        OccasionEstimate(
            occasion=stats.occasions[t],
            captured=stats.captured[t],
            marked_recaptured=stats.marked_recaptured[t],
            released=stats.released[t],
            later_recaught=stats.later_recaught[t],
            skipped=stats.skipped[t],
            marked_pop=marked[t][0],
            abundance=abundance[t][0],
            survival=survival[t][0],
            recruitment=recruitment[t][0],
            marked_pop_reason=marked[t][1],
            abundance_reason=abundance[t][1],
            survival_reason=survival[t][1],
            recruitment_reason=recruitment[t][1],
        )
        for t in range(n_occ)
    )
    return PopulationEstimate(variant=variant, occasions=stats.occasions, estimates=estimates)


def lincoln_petersen(captured_1: int, captured_2: int, recaptured: int, chapman: bool = False) -> float:
    """Two-occasion abundance estimate (plain, or Chapman's correction).

    Plain requires at least one recapture; Chapman stays defined at
    zero recaptures.
    """
    if min(captured_1, captured_2, recaptured) < 0:
        raise ValueError("counts must be non-negative")
    if recaptured > min(captured_1, captured_2):
        raise ValueError("recaptures cannot exceed either capture count")
    if chapman:
        return (captured_1 + 1) * (captured_2 + 1) / (recaptured + 1) - 1
    if recaptured == 0:
        raise ValueError("plain estimator undefined with zero recaptures")
    return captured_1 * captured_2 / recaptured


def apply_bias_to_counts(
    estimates: Sequence[ShareEstimate], matrix: EncounterMatrix
) -> OccasionStatistics:
    """Inflate capture totals by each occasion's mean share coefficient.

    Only captured and released counts are scaled (half-up to integers).
    Marked-recapture structure (m, r, z) stays at observed values:
    unshared photos hide animals but cannot create observed recaptures.
    """
    stats = occasion_statistics(matrix)
    by_occasion: dict[int, list[float]] = {occ: [] for occ in stats.occasions}
    for est in estimates:
        if est.occasion in by_occasion:
            by_occasion[est.occasion].append(est.coefficient)

    scaled = []
    for occ, observed in zip(stats.occasions, stats.captured):
        ks = sorted(by_occasion[occ])
        if not ks:
            if observed > 0:
                raise DataError(f"occasion {occ} has sightings but no share estimates")
            scaled.append(0)
            continue
        mean_k = sum(ks) / len(ks)
        scaled.append(int(math.floor(observed * mean_k + 0.5)))
    corrected = tuple(scaled)
    return OccasionStatistics(
        occasions=stats.occasions,
        captured=corrected,
        marked_recaptured=stats.marked_recaptured,
        released=corrected,
        later_recaught=stats.later_recaught,
        skipped=stats.skipped,
    )


def _cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_population_estimates(estimate: PopulationEstimate, path: str) -> None:
    """Write one CSV row per occasion, blank cells where inestimable."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ESTIMATE_CSV_HEADER)
        for row in estimate.estimates:
            writer.writerow(
                [
                    row.occasion,
                    row.captured,
                    row.marked_recaptured,
                    row.later_recaught,
                    row.skipped,
                    _cell(row.marked_pop),
                    _cell(row.abundance),
                    _cell(row.survival),
                    _cell(row.recruitment),
                    "1" if row.estimable else "0",
                    row.abundance_reason or "",
                ]
            )
