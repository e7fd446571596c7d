"""Encounter histories: who was seen when.

Capture-mark-recapture needs, for every identified individual, a 0/1 row
over the ordered survey occasions saying whether that individual was
photographed at least once in that occasion. This module builds that matrix
from parsed collections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .records import Collection


@dataclass(frozen=True, eq=False)
class EncounterMatrix:
    """0/1 sighting histories, individuals by occasions.

    ``matrix[i, t]`` is 1 iff ``individuals[i]`` was seen in ``occasions[t]``.
    Occasions are strictly increasing; individuals are sorted for stable
    output.
    """

    individuals: tuple[str, ...]
    occasions: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (len(self.individuals), len(self.occasions)):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.individuals)} individuals x {len(self.occasions)} occasions"
            )
        if any(b <= a for a, b in zip(self.occasions, self.occasions[1:])):
            raise ValueError(f"occasions must be strictly increasing: {self.occasions}")

    @property
    def n_individuals(self) -> int:
        return len(self.individuals)

    @property
    def n_occasions(self) -> int:
        return len(self.occasions)

    def history_string(self, individual: str) -> str:
        """The history of one individual as a string like "101"."""
        row = self.matrix[self.individuals.index(individual)]
        return "".join("1" if v else "0" for v in row)


def build_encounter_matrix(
    collections: Iterable[Collection],
    occasions: Sequence[int] | None = None,
) -> EncounterMatrix:
    """Collapse collections into an encounter matrix.

    Multiple sightings of the same individual in one occasion collapse to a
    single 1. When ``occasions`` is given it fixes the column order (and must
    cover every occasion present in the data); otherwise the occasions seen
    in the data are used, sorted ascending.
    """
    sightings: dict[str, set[int]] = {}
    present_occasions: set[int] = set()
    for collection in collections:
        present_occasions.add(collection.occasion)
        for individual in collection.distinct_individuals:
            sightings.setdefault(individual, set()).add(collection.occasion)

    if occasions is None:
        occasion_order = tuple(sorted(present_occasions))
    else:
        occasion_order = tuple(occasions)
        if any(b <= a for a, b in zip(occasion_order, occasion_order[1:])):
            raise DataError(f"occasions must be strictly increasing: {occasion_order}")
        uncovered = present_occasions - set(occasion_order)
        if uncovered:
            raise DataError(f"collections contain occasions outside the requested set: {sorted(uncovered)}")

    individuals = tuple(sorted(sightings))
    column = {occ: j for j, occ in enumerate(occasion_order)}
    matrix = np.zeros((len(individuals), len(occasion_order)), dtype=np.int8)
    for i, individual in enumerate(individuals):
        for occ in sightings[individual]:
            matrix[i, column[occ]] = 1
    return EncounterMatrix(individuals=individuals, occasions=occasion_order, matrix=matrix)


def matrix_from_histories(histories: dict[str, str], occasions: Sequence[int]) -> EncounterMatrix:
    """Build a matrix directly from history strings (test and fixture helper)."""
    occasion_order = tuple(occasions)
    individuals = tuple(sorted(histories))
    matrix = np.zeros((len(individuals), len(occasion_order)), dtype=np.int8)
    for i, individual in enumerate(individuals):
        h = histories[individual]
        if len(h) != len(occasion_order):
            raise DataError(
                f"history for {individual!r} has length {len(h)}, expected {len(occasion_order)}"
            )
        for t, ch in enumerate(h):
            if ch not in "01":
                raise DataError(f"history for {individual!r} contains {ch!r}")
            matrix[i, t] = 1 if ch == "1" else 0
    return EncounterMatrix(individuals=individuals, occasions=occasion_order, matrix=matrix)
