#!/usr/bin/env python3
# -*- coding: utf-8
"""
Comparison strikingness measures
Freq Inv: how uncommon the (subject, relation) pair is in the training split.
Temp Inv: how long ago the exact event last happened.
Both write the same table schema as the rule-based measure.
"""

import math
from typing import Dict, Optional, Sequence, Tuple

from tqdm import tqdm

from errors import ConfigError, DatasetValidationError, IndexQueryError
from logging_system import get_logger
from rsmf import StrikingnessRecord, StrikingnessTable
from temporal_index import TemporalIndex
from tkg_dataset import Quadruple, Query

logger = get_logger("BaselineStrikingness")


class PairFrequencyTable:
    """(subject, relation) counts over the training split, frozen at build time"""

    def __init__(self, counts: Dict[Tuple[int, int], int]):
        self.counts = {key: count for key, count in counts.items() if count > 0}
        self.max_count = max(self.counts.values(), default=0)

    @classmethod
    def from_index(cls, train_index: TemporalIndex) -> 'PairFrequencyTable':
        if train_index.splits != frozenset({'train'}):
            raise DatasetValidationError("pair frequencies must come from the train split only")
        return cls({key: len(rows) for key, rows in train_index.by_pair.items()})

    def count(self, subject: int, relation: int) -> int:
        return self.counts.get((subject, relation), 0)

    def __len__(self) -> int:
        return len(self.counts)


def freq_inv(event: Quadruple, table: PairFrequencyTable) -> float:
    if table.max_count == 0:
        raise IndexQueryError("pair frequency table is empty")
    return 1.0 - table.count(event.subject, event.relation) / table.max_count


def temp_inv(event: Quadruple, history: TemporalIndex, lambda_t: float = 0.005) -> float:
    """1 - exp(-lambda * gap) to the last exact occurrence before t; 1.0 if it never happened"""
    if not lambda_t > 0:
        raise ConfigError("Temp Inv lambda must be > 0, got " + str(lambda_t))
    last = history.last_time_before(event.subject, event.relation, event.object, event.timestamp)
    if last is None:
        return 1.0
    return 1.0 - math.exp(-lambda_t * (event.timestamp - last))


def _record(query: Query, sk: float) -> StrikingnessRecord:
    return StrikingnessRecord(query.query_index, query.direction, None, None, None, sk,
                              subject=query.subject, relation=query.relation, timestamp=query.timestamp)


def batch_freq_inv(queries: Sequence[Query], table: PairFrequencyTable, show_progress: bool = False) -> StrikingnessTable:
    records = [_record(query, freq_inv(query.event(), table))
               for query in tqdm(queries, desc="freq_inv", disable=not show_progress)]
    logger.info("Scored " + str(len(records)) + " query directions with Freq Inv",
                {'records': len(records), 'max_count': table.max_count})
    return StrikingnessTable(records, {'measure': 'freq_inv', 'max_count': table.max_count})


def batch_temp_inv(queries: Sequence[Query], history: TemporalIndex, lambda_t: float = 0.005,
                   history_scope: Optional[str] = None, show_progress: bool = False) -> StrikingnessTable:
    records = [_record(query, temp_inv(query.event(), history, lambda_t))
               for query in tqdm(queries, desc="temp_inv", disable=not show_progress)]
    logger.info("Scored " + str(len(records)) + " query directions with Temp Inv",
                {'records': len(records), 'temp_lambda': lambda_t})
    header = {'measure': 'temp_inv', 'temp_lambda': lambda_t}
    if history_scope:
        header['history_scope'] = history_scope
    return StrikingnessTable(records, header)
