#!/usr/bin/env python3
# -*- coding: utf-8
"""
Evaluation of link-prediction outputs
Prediction file readers/writers, time-aware filtered ranking and the original
(MRR, Hits@k) and strikingness-weighted (WMRR, WHits@k) metrics.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from errors import ConfigError, MismatchedQueriesError, ParseError, PredictionFormatError
from logging_system import get_logger
from temporal_index import TemporalIndex
from tkg_dataset import DIRECTIONS, Query

logger = get_logger("EvalMetrics")

TIE_POLICIES = ('realistic', 'optimistic', 'pessimistic')
HITS_AT = (1, 3, 10)
PREDICTION_KINDS = ('dense', 'scores', 'topk')
RANK_COLUMNS = ('query_index', 'direction', 'answer', 'rank', 'sk')
# stands in for -inf in the float32 dense layout
UNLISTED_SCORE = float(np.finfo(np.float32).min)

QueryKey = Tuple[int, str]


def dense_row(query_index: int, direction: str) -> int:
    """Row of a query direction in the dense binary layout"""
    return query_index * 2 + DIRECTIONS.index(direction)


def shape_path(path: Union[str, Path]) -> Path:
    return Path(str(path) + '.shape.json')


class PredictionSet:
    """Model outputs keyed by (query_index, direction)

    dense:  one float vector over all entities per query
    scores: sparse {entity: score}, unlisted entities score -inf
    topk:   ranked top-K list; MRR is not meaningful for these
    """

    def __init__(self, kind: str, entries: Dict[QueryKey, object], entity_count: int, model_name: str = 'model'):
        if kind not in PREDICTION_KINDS:
            raise PredictionFormatError("unknown prediction kind: " + repr(kind))
        self.kind = kind
        self.entries = entries
        self.entity_count = entity_count
        self.model_name = model_name

    @property
    def mrr_available(self) -> bool:
        return self.kind != 'topk'

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: QueryKey) -> bool:
        return key in self.entries

    def keys(self) -> List[QueryKey]:
        return sorted(self.entries, key=lambda key: (key[0], DIRECTIONS.index(key[1])))

    def vector(self, key: QueryKey) -> np.ndarray:
        payload = self.entries[key]
        if self.kind == 'dense':
            return np.asarray(payload, dtype=np.float64)
        scores = np.full(self.entity_count, -np.inf)
        if payload:
            ids = np.fromiter(payload.keys(), dtype=np.int64, count=len(payload))
            values = np.fromiter(payload.values(), dtype=np.float64, count=len(payload))
            scores[ids] = values
        return scores

    def sparse(self, key: QueryKey) -> Dict[int, float]:
        payload = self.entries[key]
        if self.kind == 'dense':
            return {i: float(v) for i, v in enumerate(payload)}
        return dict(payload)


def _check_entity(entity: int, entity_count: int, path, line_number):
    if not 0 <= entity < entity_count:
        raise PredictionFormatError(str(path) + ":" + str(line_number) + ": entity id " + str(entity)
                                    + " outside [0, " + str(entity_count) + ")")


def load_jsonl_predictions(path: Union[str, Path], entity_count: int, model_name: Optional[str] = None) -> PredictionSet:
    kind = None
    entries: Dict[QueryKey, Dict[int, float]] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                key = (int(row['query_index']), row['direction'])
            except (ValueError, KeyError, TypeError) as e:
                raise ParseError("bad prediction record: " + str(e), str(path), line_number)
            if key[1] not in DIRECTIONS:
                raise PredictionFormatError(str(path) + ":" + str(line_number) + ": bad direction " + repr(key[1]))
            if key in entries:
                raise PredictionFormatError(str(path) + ":" + str(line_number) + ": duplicate record for " + str(key))

            if 'scores' in row:
                row_kind = 'scores'
                payload = {int(entity): float(score) for entity, score in row['scores'].items()}
            elif 'topk' in row:
                row_kind = 'topk'
                payload = {}
                for entity, score in row['topk']:
                    entity = int(entity)
                    if entity in payload:
                        raise PredictionFormatError(str(path) + ":" + str(line_number)
                                                    + ": entity " + str(entity) + " listed twice")
                    payload[entity] = float(score)
            else:
                raise PredictionFormatError(str(path) + ":" + str(line_number) + ": record needs 'scores' or 'topk'")

            if kind is None:
                kind = row_kind
            elif kind != row_kind:
                raise PredictionFormatError(str(path) + ":" + str(line_number) + ": mixes 'scores' and 'topk' records")
            for entity in payload:
                _check_entity(entity, entity_count, path, line_number)
            entries[key] = payload

    return PredictionSet(kind or 'scores', entries, entity_count, model_name or Path(path).stem)


def load_dense_predictions(path: Union[str, Path], entity_count: int, model_name: Optional[str] = None) -> PredictionSet:
    sidecar = shape_path(path)
    if not sidecar.exists():
        raise FileNotFoundError("missing shape header " + str(sidecar))
    with open(sidecar, 'r', encoding='utf-8') as f:
        try:
            shape = json.load(f)
            rows, columns = int(shape['rows']), int(shape['columns'])
        except (ValueError, KeyError, TypeError) as e:
            raise PredictionFormatError("bad shape header " + str(sidecar) + ": " + str(e))
    if columns != entity_count:
        raise PredictionFormatError("dense predictions have " + str(columns) + " columns, dataset has "
                                    + str(entity_count) + " entities")
    matrix = np.fromfile(path, dtype='<f4')
    if matrix.size != rows * columns:
        raise PredictionFormatError(str(path) + " holds " + str(matrix.size) + " values, expected " + str(rows * columns))
    matrix = matrix.reshape(rows, columns)
    entries = {(row // 2, DIRECTIONS[row % 2]): matrix[row] for row in range(rows)}
    return PredictionSet('dense', entries, entity_count, model_name or Path(path).stem)


def load_predictions(path: Union[str, Path], entity_count: int, model_name: Optional[str] = None) -> PredictionSet:
    """Pick the reader by extension: .bin is dense float32, anything else JSON Lines"""
    if str(path).endswith('.bin'):
        return load_dense_predictions(path, entity_count, model_name)
    return load_jsonl_predictions(path, entity_count, model_name)


def save_jsonl_predictions(predictions: PredictionSet, path: Union[str, Path]):
    field_name = 'topk' if predictions.kind == 'topk' else 'scores'
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for key in predictions.keys():
            scores = predictions.sparse(key)
            if field_name == 'topk':
                payload = [[entity, score] for entity, score in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]
            else:
                payload = {str(entity): score for entity, score in sorted(scores.items())}
            f.write(json.dumps({'query_index': key[0], 'direction': key[1], field_name: payload}) + "\n")


def save_dense_predictions(predictions: PredictionSet, path: Union[str, Path]):
    """Little-endian float32 matrix, one row per query direction, plus the shape header"""
    keys = predictions.keys()
    rows = (max(key[0] for key in keys) + 1) * 2 if keys else 0
    matrix = np.full((rows, predictions.entity_count), UNLISTED_SCORE, dtype='<f4')
    for key in keys:
        vector = predictions.vector(key)
        matrix[dense_row(*key)] = np.where(np.isneginf(vector), UNLISTED_SCORE, vector)
    matrix.tofile(path)
    with open(shape_path(path), 'w', encoding='utf-8', newline='\n') as f:
        json.dump({'rows': rows, 'columns': predictions.entity_count, 'dtype': '<f4',
                   'row_order': 'query_index * 2 + (0 tail, 1 head)'}, f, sort_keys=True)


def compute_rank(scores: np.ndarray, answer: int, filtered: Iterable[int] = (), tie_policy: str = 'realistic') -> int:
    """Filtered rank of the answer; ties among surviving entities follow tie_policy"""
    if tie_policy not in TIE_POLICIES:
        raise ConfigError("tie policy must be one of " + ", ".join(TIE_POLICIES))
    scores = np.asarray(scores)
    if not 0 <= answer < scores.shape[0]:
        raise PredictionFormatError("answer " + str(answer) + " outside score vector of length " + str(scores.shape[0]))

    target = scores[answer]
    keep = np.ones(scores.shape[0], dtype=bool)
    drop = [e for e in filtered if e != answer and 0 <= e < scores.shape[0]]
    if drop:
        keep[drop] = False
    keep[answer] = False
    survivors = scores[keep]
    greater = int(np.count_nonzero(survivors > target))
    equal = int(np.count_nonzero(survivors == target))

    if tie_policy == 'optimistic':
        return 1 + greater
    if tie_policy == 'pessimistic':
        return 1 + greater + equal
    return 1 + greater + equal // 2


@dataclass(frozen=True)
class RankRow:
    query_index: int
    direction: str
    answer: int
    rank: int
    sk: Optional[float] = None

    @property
    def key(self) -> QueryKey:
        return (self.query_index, self.direction)


class RankTable:
    def __init__(self, rows: Iterable[RankRow], model_name: str = 'model', tie_policy: str = 'realistic',
                 mrr_available: bool = True):
        ordered = sorted(rows, key=lambda row: (row.query_index, DIRECTIONS.index(row.direction)))
        self.rows: Dict[QueryKey, RankRow] = {row.key: row for row in ordered}
        if len(self.rows) != len(ordered):
            raise MismatchedQueriesError("rank table holds duplicate query directions")
        self.model_name = model_name
        self.tie_policy = tie_policy
        self.mrr_available = mrr_available

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows.values())

    def keys(self):
        return self.rows.keys()

    def ranks(self) -> np.ndarray:
        return np.array([row.rank for row in self.rows.values()], dtype=np.float64)

    @property
    def has_sk(self) -> bool:
        return bool(self.rows) and all(row.sk is not None for row in self.rows.values())

    def join_sk(self, sk_by_key: Dict[QueryKey, float]) -> 'RankTable':
        missing = [key for key in self.rows if key not in sk_by_key]
        if missing:
            raise MismatchedQueriesError("strikingness table lacks " + str(len(missing))
                                         + " query directions, first " + str(missing[0]))
        rows = [replace(row, sk=sk_by_key[key]) for key, row in self.rows.items()]
        return RankTable(rows, self.model_name, self.tie_policy, self.mrr_available)

    def save(self, path: Union[str, Path]):
        header = {'model': self.model_name, 'tie_policy': self.tie_policy, 'mrr_available': self.mrr_available}
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write("#" + json.dumps(header, sort_keys=True) + "\n")
            f.write("\t".join(RANK_COLUMNS) + "\n")
            for row in self.rows.values():
                sk = '-' if row.sk is None else repr(float(row.sk))
                f.write("\t".join([str(row.query_index), row.direction, str(row.answer), str(row.rank), sk]) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'RankTable':
        header: Dict = {}
        rows = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_number, line in enumerate(f, 1):
                line = line.rstrip('\n')
                if not line:
                    continue
                if line.startswith('#'):
                    try:
                        header = json.loads(line[1:])
                    except json.JSONDecodeError as e:
                        raise ParseError("bad rank table header: " + str(e), str(path), line_number)
                    continue
                columns = line.split('\t')
                if columns[0] == 'query_index':
                    continue
                if len(columns) != len(RANK_COLUMNS) or columns[1] not in DIRECTIONS:
                    raise ParseError("malformed rank row", str(path), line_number)
                try:
                    rows.append(RankRow(int(columns[0]), columns[1], int(columns[2]), int(columns[3]),
                                        None if columns[4] == '-' else float(columns[4])))
                except ValueError as e:
                    raise ParseError("bad rank value: " + str(e), str(path), line_number)
        return cls(rows, header.get('model', Path(path).stem), header.get('tie_policy', 'realistic'),
                   header.get('mrr_available', True))


def build_rank_table(predictions: PredictionSet, queries: Sequence[Query], filter_index: TemporalIndex,
                     sk_by_key: Optional[Dict[QueryKey, float]] = None, tie_policy: str = 'realistic',
                     jobs: int = 1, show_progress: bool = False) -> RankTable:
    """Rank every query direction under the time-aware filter of the full index"""
    missing = [query.key for query in queries if query.key not in predictions]
    if missing:
        raise MismatchedQueriesError(predictions.model_name + " has no prediction for " + str(len(missing))
                                     + " query directions, first " + str(missing[0]))
    extra = len(predictions) - len(queries)
    if extra > 0:
        logger.warning("Ignoring " + str(extra) + " predictions without a matching query",
                       {'model': predictions.model_name, 'extra': extra})

    def rank_one(query: Query) -> RankRow:
        filtered = filter_index.truth_at(query.subject, query.relation, query.timestamp)
        rank = compute_rank(predictions.vector(query.key), query.answer, filtered, tie_policy)
        sk = None if sk_by_key is None else sk_by_key.get(query.key)
        return RankRow(query.query_index, query.direction, query.answer, rank, sk)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(tqdm(pool.map(rank_one, queries), total=len(queries), desc="ranking",
                             disable=not show_progress))
    else:
        rows = [rank_one(query) for query in tqdm(queries, desc="ranking", disable=not show_progress)]

    if sk_by_key is not None:
        unmatched = [row.key for row in rows if row.sk is None]
        if unmatched:
            raise MismatchedQueriesError("strikingness table lacks " + str(len(unmatched))
                                         + " query directions, first " + str(unmatched[0]))
    return RankTable(rows, predictions.model_name, tie_policy, predictions.mrr_available)


@dataclass
class EvalReport:
    model_name: str
    tie_policy: str
    count: int
    bias_b: float
    mrr_available: bool
    sk_available: bool
    original: Dict[str, Optional[float]] = field(default_factory=dict)
    weighted: Dict[str, Optional[float]] = field(default_factory=dict)
    delta: Dict[str, Optional[float]] = field(default_factory=dict)
    bins: List[Dict] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'model': self.model_name,
            'tie_policy': self.tie_policy,
            'count': self.count,
            'b': self.bias_b,
            'mrr_available': self.mrr_available,
            'sk_available': self.sk_available,
            'original': self.original,
            'weighted': self.weighted,
            'delta': self.delta,
            'bins': self.bins,
        }


def query_weight(sk: float, b: float) -> float:
    return sk + b


def check_bias(b: float, sk_values: Iterable[float]):
    if b < 0:
        raise ConfigError("bias b must be >= 0, got " + str(b))
    if b <= 0 and any(sk == 0 for sk in sk_values):
        raise ConfigError("bias b = 0 gives zero weight to events with sk = 0; use b > 0")


def original_metrics(ranks: np.ndarray, mrr_available: bool = True) -> Dict[str, Optional[float]]:
    metrics: Dict[str, Optional[float]] = {'mrr': float(np.mean(1.0 / ranks)) if mrr_available else None}
    for k in HITS_AT:
        metrics['hits@' + str(k)] = float(np.mean(ranks <= k))
    return metrics


def weighted_metrics(ranks: np.ndarray, sk: np.ndarray, b: float, mrr_available: bool = True) -> Dict[str, Optional[float]]:
    weights = query_weight(sk, b)
    total = float(np.sum(weights))
    if total <= 0:
        raise ConfigError("strikingness weights sum to zero; use b > 0")
    metrics: Dict[str, Optional[float]] = {
        'wmrr': float(np.sum(weights / ranks) / total) if mrr_available else None
    }
    for k in HITS_AT:
        metrics['whits@' + str(k)] = float(np.sum(weights * (ranks <= k)) / total)
    return metrics


def aggregate(ranks: RankTable, b: float = 0.1) -> EvalReport:
    """ORG metrics over both directions plus (sk + b)-weighted metrics and their relative decrease"""
    if not len(ranks):
        raise ConfigError("cannot aggregate an empty rank table")
    rank_values = ranks.ranks()
    report = EvalReport(ranks.model_name, ranks.tie_policy, len(ranks), b, ranks.mrr_available, ranks.has_sk)
    report.original = original_metrics(rank_values, ranks.mrr_available)

    if not ranks.has_sk:
        if any(row.sk is not None for row in ranks):
            raise MismatchedQueriesError("some rank rows carry strikingness and some do not")
        return report

    sk = np.array([row.sk for row in ranks], dtype=np.float64)
    check_bias(b, sk)
    report.weighted = weighted_metrics(rank_values, sk, b, ranks.mrr_available)
    for name, weighted_name in (('mrr', 'wmrr'), ('hits@1', 'whits@1'), ('hits@3', 'whits@3'), ('hits@10', 'whits@10')):
        org = report.original[name]
        weighted = report.weighted[weighted_name]
        report.delta[name] = (org - weighted) / org if org and weighted is not None else None
    return report
