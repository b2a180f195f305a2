#!/usr/bin/env python3
# -*- coding: utf-8
"""
Immutable temporal indexes over a (augmented) dataset
Every history lookup takes an exclusive upper time bound so a query at time t
only ever sees facts with t' < t, and an optional inclusive lower bound for
the window t - w.
"""

from bisect import bisect_left
from collections import defaultdict
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from errors import DatasetValidationError
from logging_system import get_logger
from tkg_dataset import SPLITS, Dataset, Quadruple

logger = get_logger("TemporalIndex")

_EMPTY: Tuple = ()


class TemporalIndex:
    """Read-only lookups over the facts of the requested splits

    by_pair:         (s, r)    -> ((t, o), ...) sorted
    by_pair_full:    (s, r, o) -> (t, ...) strictly ascending
    by_subject:      s         -> ((t, r, o), ...) sorted
    same_time_truth: (s, r, t) -> frozenset of o
    """

    def __init__(self, by_pair, by_pair_full, by_subject, same_time_truth,
                 entity_count: int, relation_count: int, raw_relation_count: int,
                 splits: FrozenSet[str], fact_count: int):
        self.by_pair: Mapping[Tuple[int, int], Tuple[Tuple[int, int], ...]] = MappingProxyType(by_pair)
        self.by_pair_full: Mapping[Tuple[int, int, int], Tuple[int, ...]] = MappingProxyType(by_pair_full)
        self.by_subject: Mapping[int, Tuple[Tuple[int, int, int], ...]] = MappingProxyType(by_subject)
        self.same_time_truth: Mapping[Tuple[int, int, int], FrozenSet[int]] = MappingProxyType(same_time_truth)
        self.entity_count = entity_count
        self.relation_count = relation_count
        self.raw_relation_count = raw_relation_count
        self.splits = splits
        self.fact_count = fact_count

    def __reduce__(self):
        # mapping proxies do not pickle; worker processes get plain dict copies
        return (TemporalIndex, (dict(self.by_pair), dict(self.by_pair_full), dict(self.by_subject),
                                dict(self.same_time_truth), self.entity_count, self.relation_count,
                                self.raw_relation_count, self.splits, self.fact_count))

    def inverse_relation(self, relation: int) -> int:
        R = self.raw_relation_count
        return relation + R if relation < R else relation - R

    # -- window helpers -------------------------------------------------

    @staticmethod
    def window_start(query_time: int, window: Optional[int]) -> int:
        """Inclusive lower bound t - w; full history when window is None"""
        if window is None:
            return 0
        return query_time - window

    # -- lookups --------------------------------------------------------

    def objects_in_window(self, subject: int, relation: int, start: int, end: int) -> Tuple[Tuple[int, int], ...]:
        """(t, o) for facts (subject, relation, o, t) with start <= t < end"""
        rows = self.by_pair.get((subject, relation), _EMPTY)
        lo = bisect_left(rows, (start,))
        hi = bisect_left(rows, (end,))
        return rows[lo:hi]

    def times(self, subject: int, relation: int, obj: int) -> Tuple[int, ...]:
        return self.by_pair_full.get((subject, relation, obj), _EMPTY)

    def times_in_window(self, subject: int, relation: int, obj: int, start: int, end: int) -> Tuple[int, ...]:
        stamps = self.by_pair_full.get((subject, relation, obj), _EMPTY)
        return stamps[bisect_left(stamps, start):bisect_left(stamps, end)]

    def last_time_before(self, subject: int, relation: int, obj: int, end: int) -> Optional[int]:
        stamps = self.by_pair_full.get((subject, relation, obj), _EMPTY)
        position = bisect_left(stamps, end)
        return stamps[position - 1] if position else None

    def count_before(self, subject: int, relation: int, obj: int, end: int) -> int:
        return bisect_left(self.by_pair_full.get((subject, relation, obj), _EMPTY), end)

    def subject_facts_in_window(self, subject: int, start: int, end: int) -> Tuple[Tuple[int, int, int], ...]:
        """(t, r, o) for facts (subject, r, o, t) with start <= t < end"""
        rows = self.by_subject.get(subject, _EMPTY)
        return rows[bisect_left(rows, (start,)):bisect_left(rows, (end,))]

    def truth_at(self, subject: int, relation: int, timestamp: int) -> FrozenSet[int]:
        return self.same_time_truth.get((subject, relation, timestamp), frozenset())

    def pair_count(self, subject: int, relation: int, end: Optional[int] = None) -> int:
        rows = self.by_pair.get((subject, relation), _EMPTY)
        if end is None:
            return len(rows)
        return bisect_left(rows, (end,))

    def facts(self) -> Iterable[Quadruple]:
        for (s, r, o), stamps in self.by_pair_full.items():
            for t in stamps:
                yield Quadruple(s, r, o, t)


def build_index(dataset: Dataset, splits_included: Iterable[str]) -> TemporalIndex:
    """Build all four maps from exactly the requested splits"""
    included = frozenset(splits_included)
    unknown = included - set(SPLITS)
    if unknown:
        raise DatasetValidationError("unknown split name(s): " + ", ".join(sorted(unknown)))
    if not included:
        raise DatasetValidationError("build_index needs at least one split")
    if not dataset.augmented:
        raise DatasetValidationError("build_index expects an inverse-augmented dataset")

    by_pair: Dict[Tuple[int, int], List[Tuple[int, int]]] = defaultdict(list)
    by_pair_full: Dict[Tuple[int, int, int], List[int]] = defaultdict(list)
    by_subject: Dict[int, List[Tuple[int, int, int]]] = defaultdict(list)
    same_time: Dict[Tuple[int, int, int], set] = defaultdict(set)

    seen = set()
    for split in SPLITS:
        if split not in included:
            continue
        for fact in dataset.split(split):
            if fact in seen:
                continue
            seen.add(fact)
            s, r, o, t = fact
            by_pair[(s, r)].append((t, o))
            by_pair_full[(s, r, o)].append(t)
            by_subject[s].append((t, r, o))
            same_time[(s, r, t)].add(o)

    index = TemporalIndex(
        by_pair={key: tuple(sorted(rows)) for key, rows in by_pair.items()},
        by_pair_full={key: tuple(sorted(stamps)) for key, stamps in by_pair_full.items()},
        by_subject={key: tuple(sorted(rows)) for key, rows in by_subject.items()},
        same_time_truth={key: frozenset(objs) for key, objs in same_time.items()},
        entity_count=dataset.entity_count,
        relation_count=dataset.relation_count,
        raw_relation_count=dataset.raw_relation_count,
        splits=included,
        fact_count=len(seen),
    )
    logger.info("Built temporal index over " + ",".join(sorted(included)) + " (" + str(len(seen)) + " facts)",
                {'splits': sorted(included), 'facts': len(seen), 'pairs': len(index.by_pair_full)})
    return index
