#!/usr/bin/env python3
# -*- coding: utf-8
"""
Linear score fusion of two models: eta * y_a + (1 - eta) * y_b
eta is picked by grid search on the validation split, either by MRR or by the
strikingness-weighted WMRR.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ConfigError, MismatchedQueriesError, PredictionFormatError
from eval_metrics import (UNLISTED_SCORE, QueryKey, PredictionSet, check_bias, compute_rank, original_metrics,
                          weighted_metrics)
from logging_system import get_logger
from temporal_index import TemporalIndex
from tkg_dataset import Query

logger = get_logger("Ensemble")

NORMALIZATIONS = ('minmax', 'l2', 'none')
METRICS = ('mrr', 'wmrr')
METRIC_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EnsembleConfig:
    eta: float = 0.5
    grid_step: float = 0.1
    normalization: str = 'minmax'

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError("eta must lie in [0, 1], got " + str(self.eta))
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError("normalization must be one of " + ", ".join(NORMALIZATIONS))
        if not 0 < self.grid_step <= 1:
            raise ConfigError("grid step must lie in (0, 1], got " + str(self.grid_step))
        steps = round(1.0 / self.grid_step)
        if abs(steps * self.grid_step - 1.0) > 1e-9:
            raise ConfigError("grid step " + str(self.grid_step) + " does not divide 1 evenly")

    def grid(self) -> List[float]:
        steps = int(round(1.0 / self.grid_step))
        return [round(i / steps, 12) for i in range(steps + 1)]

    def with_eta(self, eta: float) -> 'EnsembleConfig':
        return EnsembleConfig(eta, self.grid_step, self.normalization)


def densify(predictions: PredictionSet, key: QueryKey) -> np.ndarray:
    """Dense vector; unlisted entities sit one below the lowest listed score

    In dense rows -inf and the float32 sentinel of the binary layout mark
    unlisted entities.
    """
    if predictions.kind == 'dense':
        vector = predictions.vector(key)
        unlisted = np.isneginf(vector) | (vector <= UNLISTED_SCORE)
        if not unlisted.any():
            return vector
        if unlisted.all():
            return np.zeros(predictions.entity_count)
        return np.where(unlisted, float(np.min(vector[~unlisted])) - 1.0, vector)
    listed = predictions.entries[key]
    if not listed:
        return np.zeros(predictions.entity_count)
    floor = min(listed.values()) - 1.0
    vector = np.full(predictions.entity_count, floor)
    vector[np.fromiter(listed.keys(), dtype=np.int64, count=len(listed))] = np.fromiter(
        listed.values(), dtype=np.float64, count=len(listed))
    return vector


def normalize(vector: np.ndarray, mode: str = 'minmax') -> np.ndarray:
    if mode == 'none':
        return vector
    if mode == 'minmax':
        low, high = float(np.min(vector)), float(np.max(vector))
        if high == low:
            return np.zeros_like(vector)
        return (vector - low) / (high - low)
    if mode == 'l2':
        norm = float(np.linalg.norm(vector))
        return vector / norm if norm > 0 else np.zeros_like(vector)
    raise ConfigError("unknown normalization: " + repr(mode))


def combine_scores(y_a: np.ndarray, y_b: np.ndarray, cfg: EnsembleConfig) -> np.ndarray:
    y_a = np.asarray(y_a, dtype=np.float64)
    y_b = np.asarray(y_b, dtype=np.float64)
    if y_a.shape != y_b.shape:
        raise PredictionFormatError("score vectors differ in shape: " + str(y_a.shape) + " vs " + str(y_b.shape))
    return cfg.eta * normalize(y_a, cfg.normalization) + (1.0 - cfg.eta) * normalize(y_b, cfg.normalization)


def _shared_queries(pred_a: PredictionSet, pred_b: PredictionSet, queries: Sequence[Query]) -> List[Query]:
    if pred_a.entity_count != pred_b.entity_count:
        raise PredictionFormatError("models score different entity spaces")
    shared = [query for query in queries if query.key in pred_a and query.key in pred_b]
    if not shared:
        raise MismatchedQueriesError(pred_a.model_name + " and " + pred_b.model_name + " share no queries")
    if len(shared) < len(queries):
        logger.warning("Evaluating " + str(len(shared)) + " of " + str(len(queries)) + " queries covered by both models",
                       {'shared': len(shared), 'queries': len(queries)})
    return shared


def _closer_to_half(eta: float, other: float) -> bool:
    distance, other_distance = abs(eta - 0.5), abs(other - 0.5)
    if abs(distance - other_distance) > 1e-12:
        return distance < other_distance
    return eta < other


def search_eta(valid_a: PredictionSet, valid_b: PredictionSet, queries: Sequence[Query], filter_index: TemporalIndex,
               metric: str = 'mrr', cfg: Optional[EnsembleConfig] = None,
               sk_by_key: Optional[Mapping[QueryKey, float]] = None, b: float = 0.1,
               tie_policy: str = 'realistic', jobs: int = 1) -> Tuple[float, List[Dict]]:
    """eta maximizing the validation metric over the grid; ties go to the eta closest to 0.5"""
    cfg = cfg or EnsembleConfig()
    if metric not in METRICS:
        raise ConfigError("metric must be one of " + ", ".join(METRICS))
    shared = _shared_queries(valid_a, valid_b, queries)

    sk = None
    if metric == 'wmrr':
        if sk_by_key is None:
            raise ConfigError("metric wmrr needs validation strikingness")
        missing = [query.key for query in shared if query.key not in sk_by_key]
        if missing:
            raise MismatchedQueriesError("validation strikingness lacks " + str(len(missing)) + " query directions")
        sk = np.array([sk_by_key[query.key] for query in shared], dtype=np.float64)
        check_bias(b, sk)

    normalized = [(normalize(densify(valid_a, query.key), cfg.normalization),
                   normalize(densify(valid_b, query.key), cfg.normalization)) for query in shared]
    filters = [filter_index.truth_at(query.subject, query.relation, query.timestamp) for query in shared]

    def evaluate(eta: float) -> Dict:
        ranks = np.array([
            compute_rank(eta * y_a + (1.0 - eta) * y_b, query.answer, filtered, tie_policy)
            for query, (y_a, y_b), filtered in zip(shared, normalized, filters)
        ], dtype=np.float64)
        row = {'eta': eta, **original_metrics(ranks)}
        if sk is not None:
            row.update(weighted_metrics(ranks, sk, b))
        row['value'] = row[metric]
        return row

    grid = cfg.grid()
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scan = list(pool.map(evaluate, grid))
    else:
        scan = [evaluate(eta) for eta in grid]

    best = scan[0]
    for row in scan[1:]:
        if row['value'] > best['value'] + METRIC_TOLERANCE:
            best = row
        elif abs(row['value'] - best['value']) <= METRIC_TOLERANCE and _closer_to_half(row['eta'], best['eta']):
            best = row

    logger.info("Ensemble grid search picked eta=" + str(best['eta']),
                {'metric': metric, 'value': best['value'], 'points': len(grid), 'normalization': cfg.normalization})
    return best['eta'], scan


def fuse_predictions(pred_a: PredictionSet, pred_b: PredictionSet, cfg: EnsembleConfig,
                     model_name: Optional[str] = None) -> PredictionSet:
    """Dense fused scores for every query direction both models cover"""
    if pred_a.entity_count != pred_b.entity_count:
        raise PredictionFormatError("models score different entity spaces")
    keys = [key for key in pred_a.keys() if key in pred_b]
    if not keys:
        raise MismatchedQueriesError(pred_a.model_name + " and " + pred_b.model_name + " share no queries")
    entries = {key: combine_scores(densify(pred_a, key), densify(pred_b, key), cfg) for key in keys}
    name = model_name or (pred_a.model_name + "+" + pred_b.model_name)
    return PredictionSet('dense', entries, pred_a.entity_count, name)


def save_grid_scan(path: Union[str, Path], eta: float, scan: List[Dict], cfg: EnsembleConfig, metric: str):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump({'eta': eta, 'metric': metric, 'grid_step': cfg.grid_step,
                   'normalization': cfg.normalization, 'scan': scan}, f, indent=2, sort_keys=True)
        f.write("\n")
