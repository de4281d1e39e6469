"""Exhaustive integer-endpoint reference for interval reasoning.

Independent of :mod:`tempoeval.closure`: it never touches point constraints.
Every labelled configuration of up to four intervals with integer endpoints in
``0..max_point`` is enumerated once; a set of premises is then answered by
filtering those configurations.  Used as a test oracle.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .model import RelationType

ALLEN = (
    "before", "after", "meets", "met_by", "overlaps", "overlapped_by", "starts",
    "started_by", "during", "contains", "finishes", "finished_by", "equals",
)
ALLEN_CONVERSE = {
    "before": "after", "meets": "met_by", "overlaps": "overlapped_by", "starts": "started_by",
    "during": "contains", "finishes": "finished_by", "equals": "equals",
}
ALLEN_CONVERSE.update({v: k for k, v in list(ALLEN_CONVERSE.items())})

# What each TimeML label means as a single Allen relation.
LABEL_TO_ALLEN = {
    RelationType.BEFORE: "before",
    RelationType.AFTER: "after",
    RelationType.IBEFORE: "meets",
    RelationType.IAFTER: "met_by",
    RelationType.INCLUDES: "contains",
    RelationType.IS_INCLUDED: "during",
    RelationType.BEGINS: "starts",
    RelationType.BEGUN_BY: "started_by",
    RelationType.ENDS: "finishes",
    RelationType.ENDED_BY: "finished_by",
    RelationType.SIMULTANEOUS: "equals",
    RelationType.IDENTITY: "equals",
    RelationType.DURING: "equals",
}


def allen_codes(a_start, a_end, b_start, b_end):
    """Allen relation index (into ALLEN) of interval a to interval b, elementwise."""
    conditions = [
        a_end < b_start,
        b_end < a_start,
        a_end == b_start,
        b_end == a_start,
        (a_start < b_start) & (b_start < a_end) & (a_end < b_end),
        (b_start < a_start) & (a_start < b_end) & (b_end < a_end),
        (a_start == b_start) & (a_end < b_end),
        (a_start == b_start) & (a_end > b_end),
        (a_start > b_start) & (a_end < b_end),
        (a_start < b_start) & (a_end > b_end),
        (a_end == b_end) & (a_start > b_start),
        (a_end == b_end) & (a_start < b_start),
        (a_start == b_start) & (a_end == b_end),
    ]
    return np.select(conditions, list(range(len(ALLEN))), default=-1)


@lru_cache(maxsize=None)
def scenarios(n_entities: int = 4, max_point: int = 8) -> np.ndarray:
    """Distinct realizable tuples of pairwise Allen codes, one column per pair i<j."""
    intervals = np.array([(s, e) for s in range(max_point + 1) for e in range(s + 1, max_point + 1)])
    grids = np.meshgrid(*([np.arange(len(intervals))] * n_entities), indexing="ij")
    choice = np.stack([g.ravel() for g in grids], axis=1)
    starts = intervals[choice, 0]
    ends = intervals[choice, 1]
    cols = []
    for i, j in itertools.combinations(range(n_entities), 2):
        codes = allen_codes(starts[:, i], ends[:, i], starts[:, j], ends[:, j])
        assert (codes >= 0).all()
        cols.append(codes)
    packed = np.zeros(len(choice), dtype=np.int64)
    for codes in cols:
        packed = packed * len(ALLEN) + codes
    packed = np.unique(packed)
    rows = []
    for _ in cols:
        rows.append(packed % len(ALLEN))
        packed = packed // len(ALLEN)
    return np.stack(rows[::-1], axis=1).astype(np.int8)


class IntervalOracle:
    """Answers consistency and entailment over ``n_entities`` intervals by enumeration."""

    def __init__(self, n_entities: int = 4, max_point: int = 8):
        self.n = n_entities
        self.table = scenarios(n_entities, max_point)
        self.columns = {pair: k for k, pair in enumerate(itertools.combinations(range(n_entities), 2))}

    def _column_code(self, i: int, j: int, label: RelationType):
        name = LABEL_TO_ALLEN[label]
        if i < j:
            return self.columns[(i, j)], ALLEN.index(name)
        return self.columns[(j, i)], ALLEN.index(ALLEN_CONVERSE[name])

    def models(self, premises) -> np.ndarray:
        """Rows of the scenario table satisfying every (i, j, label) premise."""
        mask = np.ones(len(self.table), dtype=bool)
        for i, j, label in premises:
            if label is RelationType.NONE:
                continue
            col, code = self._column_code(i, j, label)
            mask &= self.table[:, col] == code
        return self.table[mask]

    def consistent(self, premises) -> bool:
        return len(self.models(premises)) > 0

    def entailed(self, premises, i: int, j: int, label: RelationType, models=None) -> bool:
        """True iff ``i label j`` holds in every model (vacuously true when none exist)."""
        if models is None:
            models = self.models(premises)
        col, code = self._column_code(i, j, label)
        return bool((models[:, col] == code).all())
