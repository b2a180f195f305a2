#!/usr/bin/env python3
# -*- coding: utf-8
"""
Group analyses over rank tables
Strikingness bins, bias sweeps, neighborhood overlap (NO_f), agreement across
several models, significance tests between groups and the descriptive
profiles (novelty, relation rarity, outstanding events, measure volumes).
"""

import csv
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from errors import ConfigError, MismatchedQueriesError
from eval_metrics import HITS_AT, QueryKey, RankTable, original_metrics, weighted_metrics, check_bias
from logging_system import get_logger
from temporal_index import TemporalIndex
from tkg_dataset import Dataset, Quadruple, Query

logger = get_logger("GroupAnalysis")

BIN_EPSILON = 1e-9


def bin_count(bin_width: float) -> int:
    if not 0 < bin_width <= 1:
        raise ConfigError("bin width must lie in (0, 1], got " + str(bin_width))
    nearest = round(1.0 / bin_width)
    if abs(nearest * bin_width - 1.0) < BIN_EPSILON:
        return int(nearest)
    return int(math.ceil(1.0 / bin_width))


def bin_index(sk: float, bin_width: float, bins: int) -> int:
    """Half-open bins [k*w, (k+1)*w) with the last one closed at 1.0"""
    return min(max(int(math.floor(sk / bin_width + BIN_EPSILON)), 0), bins - 1)


def _bin_bounds(index: int, bin_width: float, bins: int) -> Tuple[float, float]:
    return round(index * bin_width, 12), (1.0 if index == bins - 1 else round((index + 1) * bin_width, 12))


def _rows_by_bin(ranks: RankTable, bin_width: float):
    if not ranks.has_sk:
        raise MismatchedQueriesError("grouping needs strikingness on every rank row")
    bins = bin_count(bin_width)
    grouped = defaultdict(list)
    for row in ranks:
        grouped[bin_index(row.sk, bin_width, bins)].append(row)
    return bins, grouped


def group_by_strikingness(ranks: RankTable, bin_width: float = 0.1) -> List[Dict]:
    """Per-bin count and mean metrics; empty bins are kept with count 0"""
    bins, grouped = _rows_by_bin(ranks, bin_width)
    rows = []
    for index in range(bins):
        lower, upper = _bin_bounds(index, bin_width, bins)
        members = grouped.get(index, [])
        row = {'bin': index, 'lower': lower, 'upper': upper, 'count': len(members)}
        if members:
            row.update(original_metrics(np.array([m.rank for m in members], dtype=np.float64), ranks.mrr_available))
        else:
            row.update({'mrr': None, **{'hits@' + str(k): None for k in HITS_AT}})
        rows.append(row)
    return rows


def wmrr_bias_sweep(ranks: RankTable, b_values: Iterable[float]) -> List[Dict]:
    if not ranks.has_sk:
        raise MismatchedQueriesError("bias sweep needs strikingness on every rank row")
    rank_values = ranks.ranks()
    sk = np.array([row.sk for row in ranks], dtype=np.float64)
    original = original_metrics(rank_values, ranks.mrr_available)
    rows = []
    for b in b_values:
        check_bias(b, sk)
        rows.append({'b': b, 'mrr': original['mrr'], **weighted_metrics(rank_values, sk, b, ranks.mrr_available)})
    return rows


def neighborhood_overlap(event: Quadruple, history: TemporalIndex, window: Optional[int] = None) -> float:
    """Jaccard overlap of the subject's and object's neighbors within the window before t"""
    s, _, o, t = event
    start = history.window_start(t, window)
    subject_neighbors = {obj for _, _, obj in history.subject_facts_in_window(s, start, t)}
    object_neighbors = {obj for _, _, obj in history.subject_facts_in_window(o, start, t)}
    union = subject_neighbors | object_neighbors
    if not union:
        return 0.0
    return len(subject_neighbors & object_neighbors) / len(union)


def nof_values(queries: Sequence[Query], history: TemporalIndex, window: Optional[int] = None) -> Dict[QueryKey, float]:
    return {query.key: neighborhood_overlap(query.event(), history, window) for query in queries}


def nof_split_hits(ranks: RankTable, nof_by_key: Mapping[QueryKey, float], bin_width: float = 0.1,
                   ks: Sequence[int] = (1, 3)) -> List[Dict]:
    """Inside each strikingness bin, Hits@k for the High (>= median NO_f) and Low groups"""
    bins, grouped = _rows_by_bin(ranks, bin_width)
    rows = []
    for index in range(bins):
        lower, upper = _bin_bounds(index, bin_width, bins)
        members = grouped.get(index, [])
        row = {'bin': index, 'lower': lower, 'upper': upper, 'count': len(members)}
        if members:
            overlaps = np.array([nof_by_key[m.key] for m in members], dtype=np.float64)
            member_ranks = np.array([m.rank for m in members], dtype=np.float64)
            median = float(np.median(overlaps))
            high = overlaps >= median
            row['median_nof'] = median
            row['high_count'] = int(np.count_nonzero(high))
            row['low_count'] = int(np.count_nonzero(~high))
            for k in ks:
                row['high_hits@' + str(k)] = float(np.mean(member_ranks[high] <= k)) if high.any() else None
                row['low_hits@' + str(k)] = float(np.mean(member_ranks[~high] <= k)) if (~high).any() else None
        rows.append(row)
    return rows


def n_model_hits(rank_tables: Sequence[RankTable], n: int, k: int) -> float:
    """Fraction of query directions where at least n models rank the answer within the top k"""
    if not rank_tables:
        raise ConfigError("n_model_hits needs at least one rank table")
    if not 1 <= n <= len(rank_tables):
        raise ConfigError("n must lie in [1, " + str(len(rank_tables)) + "], got " + str(n))
    keys = set(rank_tables[0].keys())
    for table in rank_tables[1:]:
        if set(table.keys()) != keys:
            raise MismatchedQueriesError(table.model_name + " covers different queries than "
                                         + rank_tables[0].model_name)
    if not keys:
        return 0.0
    hits = np.zeros(len(keys), dtype=np.int64)
    ordered = sorted(keys)
    for table in rank_tables:
        hits += np.array([table.rows[key].rank <= k for key in ordered], dtype=np.int64)
    return float(np.mean(hits >= n))


@dataclass
class SignificanceResult:
    welch_t: Optional[float]
    welch_p: Optional[float]
    mannwhitney_u: float
    mannwhitney_p: Optional[float]
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _finite_or_none(value) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def group_significance(values_a: Sequence[float], values_b: Sequence[float]) -> SignificanceResult:
    """One-sided tests of A > B: Welch's t-test and Mann-Whitney U with normal approximation"""
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ConfigError("both groups must be non-empty")

    welch_t = welch_p = None
    both_constant = np.var(a) == 0 and np.var(b) == 0
    if not both_constant and a.size > 1 and b.size > 1:
        welch = stats.ttest_ind(a, b, equal_var=False, alternative='greater')
        welch_t = _finite_or_none(welch.statistic)
        welch_p = _finite_or_none(welch.pvalue)

    mwu = stats.mannwhitneyu(a, b, alternative='greater', method='asymptotic', use_continuity=True)
    return SignificanceResult(
        welch_t=welch_t,
        welch_p=welch_p,
        mannwhitney_u=float(mwu.statistic),
        mannwhitney_p=_finite_or_none(mwu.pvalue),
        n_a=int(a.size),
        n_b=int(b.size),
        mean_a=float(np.mean(a)),
        mean_b=float(np.mean(b)),
    )


def bin_significance(ranks: RankTable, bin_width: float = 0.1, k: int = 1) -> Optional[SignificanceResult]:
    """Hits@k of the lowest non-empty strikingness bin against the highest one"""
    _, grouped = _rows_by_bin(ranks, bin_width)
    occupied = sorted(grouped)
    if len(occupied) < 2:
        return None
    low = [float(row.rank <= k) for row in grouped[occupied[0]]]
    high = [float(row.rank <= k) for row in grouped[occupied[-1]]]
    return group_significance(low, high)


def novelty_profile(queries: Sequence[Query], sk_by_key: Mapping[QueryKey, float], history: TemporalIndex,
                    cap: int = 5) -> List[Dict]:
    """Strikingness grouped by how often the exact event occurred before its timestamp"""
    groups: Dict[int, List[float]] = defaultdict(list)
    for query in queries:
        repeats = history.count_before(query.subject, query.relation, query.answer, query.timestamp)
        groups[min(repeats, cap)].append(sk_by_key[query.key])
    rows = []
    for repeats in sorted(groups):
        values = np.array(groups[repeats])
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        rows.append({
            'repeats': str(repeats) + ('+' if repeats == cap else ''),
            'count': int(values.size),
            'mean_sk': float(values.mean()),
            'q1_sk': float(q1),
            'median_sk': float(median),
            'q3_sk': float(q3),
        })
    return rows


def relation_counts(index: TemporalIndex) -> Counter:
    counts: Counter = Counter()
    for (_, relation, _), stamps in index.by_pair_full.items():
        counts[relation] += len(stamps)
    return counts


def relation_rarity_profile(queries: Sequence[Query], sk_by_key: Mapping[QueryKey, float],
                            train_counts: Mapping[int, int],
                            label: Optional[Callable[[int], str]] = None) -> List[Dict]:
    """Mean strikingness per query relation, most frequent training relations first"""
    groups: Dict[int, List[float]] = defaultdict(list)
    for query in queries:
        groups[query.relation].append(sk_by_key[query.key])
    ordered = sorted(groups, key=lambda relation: (-train_counts.get(relation, 0), relation))
    return [{
        'relation': relation,
        'label': label(relation) if label else str(relation),
        'train_count': int(train_counts.get(relation, 0)),
        'count': len(groups[relation]),
        'mean_sk': float(np.mean(groups[relation])),
    } for relation in ordered]


def outstanding_events(sk_by_key: Mapping[QueryKey, float], queries: Sequence[Query], dataset: Dataset,
                       top_k: int = 20) -> List[Dict]:
    """Top tail-direction events by strikingness with resolved labels"""
    tail = [query for query in queries if query.direction == 'tail' and query.key in sk_by_key]
    tail.sort(key=lambda query: (-sk_by_key[query.key], query.query_index))
    rows = []
    for position, query in enumerate(tail[:top_k], 1):
        rows.append({
            'position': position,
            'query_index': query.query_index,
            'subject': dataset.entity_vocab.label(query.subject),
            'relation': dataset.relation_label(query.relation),
            'object': dataset.entity_vocab.label(query.answer),
            'timestamp': query.timestamp * dataset.time_divisor,
            'sk': sk_by_key[query.key],
        })
    return rows


def measure_volume_comparison(tables: Mapping[str, Mapping[QueryKey, float]], bin_width: float = 0.1) -> List[Dict]:
    """Event volume per strikingness bin for each measure, side by side"""
    bins = bin_count(bin_width)
    volumes = {}
    for measure, sk_by_key in tables.items():
        counts = np.zeros(bins, dtype=np.int64)
        for sk in sk_by_key.values():
            counts[bin_index(sk, bin_width, bins)] += 1
        volumes[measure] = counts
    rows = []
    for index in range(bins):
        lower, upper = _bin_bounds(index, bin_width, bins)
        row = {'bin': index, 'lower': lower, 'upper': upper}
        for measure, counts in volumes.items():
            row[measure] = int(counts[index])
        rows.append(row)
    return rows


def write_rows_csv(rows: List[Dict], path: Union[str, Path]):
    """Plot-ready CSV; None is written as an empty cell"""
    columns: List[str] = []
    for row in rows:
        for column in row:
            if column not in columns:
                columns.append(column)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({column: ('' if row.get(column) is None else row.get(column)) for column in columns})
