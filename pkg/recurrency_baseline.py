#!/usr/bin/env python3
# -*- coding: utf-8
"""
Recurrency baseline predictor
Scores every object seen with the query's (subject, relation) before t by a
blend of recency and frequency. Two hyperparameters (xi, kappa) are chosen by
grid search on validation MRR.
"""

from collections import Counter
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from errors import ConfigError
from eval_metrics import PredictionSet, build_rank_table, original_metrics
from logging_system import get_logger
from temporal_index import TemporalIndex
from tkg_dataset import Query

logger = get_logger("Recurrency")


@dataclass(frozen=True)
class RecurrencyConfig:
    decay_xi: float = 0.9
    mix_kappa: float = 0.5
    grid_xi: Tuple[float, ...] = (0.5, 0.7, 0.9, 0.95, 0.99)
    grid_kappa: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if not self.decay_xi > 0:
            raise ConfigError("xi must be > 0, got " + str(self.decay_xi))
        if not 0.0 <= self.mix_kappa <= 1.0:
            raise ConfigError("kappa must lie in [0, 1], got " + str(self.mix_kappa))
        if not self.grid_xi or not self.grid_kappa:
            raise ConfigError("recurrency search grid must not be empty")
        if any(xi <= 0 for xi in self.grid_xi):
            raise ConfigError("grid xi values must be > 0")
        if any(not 0.0 <= kappa <= 1.0 for kappa in self.grid_kappa):
            raise ConfigError("grid kappa values must lie in [0, 1]")

    def with_point(self, decay_xi: float, mix_kappa: float) -> 'RecurrencyConfig':
        return RecurrencyConfig(decay_xi, mix_kappa, self.grid_xi, self.grid_kappa)


@dataclass(frozen=True)
class _QueryHistory:
    objects: Tuple[int, ...]
    counts: np.ndarray
    gaps: np.ndarray
    total: int


def _query_history(query: Query, history: TemporalIndex) -> _QueryHistory:
    rows = history.objects_in_window(query.subject, query.relation, 0, query.timestamp)
    counts: Counter = Counter()
    last: Dict[int, int] = {}
    for t, obj in rows:
        counts[obj] += 1
        last[obj] = t
    objects = tuple(sorted(counts))
    return _QueryHistory(
        objects=objects,
        counts=np.array([counts[obj] for obj in objects], dtype=np.float64),
        gaps=np.array([query.timestamp - last[obj] for obj in objects], dtype=np.float64),
        total=len(rows),
    )


def _blend(stats: _QueryHistory, decay_xi: float, mix_kappa: float) -> Dict[int, float]:
    if not stats.objects:
        return {}
    recency = np.power(decay_xi, stats.gaps)
    frequency = stats.counts / stats.total
    scores = mix_kappa * recency + (1.0 - mix_kappa) * frequency
    return {obj: float(score) for obj, score in zip(stats.objects, scores)}


def recurrency_scores(query: Query, history: TemporalIndex, cfg: RecurrencyConfig) -> Dict[int, float]:
    """kappa * xi^(t - t_last) + (1 - kappa) * count / total for every past object of (s, r)"""
    return _blend(_query_history(query, history), cfg.decay_xi, cfg.mix_kappa)


def predict_recurrency(queries: Sequence[Query], history: TemporalIndex, cfg: RecurrencyConfig,
                       entity_count: int, model_name: str = 'recurrency', show_progress: bool = False) -> PredictionSet:
    entries = {query.key: recurrency_scores(query, history, cfg)
               for query in tqdm(queries, desc="recurrency", disable=not show_progress)}
    logger.info("Predicted " + str(len(entries)) + " query directions",
                {'xi': cfg.decay_xi, 'kappa': cfg.mix_kappa, 'queries': len(entries)})
    return PredictionSet('scores', entries, entity_count, model_name)


def tune_recurrency(valid_queries: Sequence[Query], history: TemporalIndex, filter_index: TemporalIndex,
                    cfg: RecurrencyConfig, entity_count: int, tie_policy: str = 'realistic',
                    show_progress: bool = False) -> Tuple[RecurrencyConfig, List[Dict]]:
    """Grid point with the best validation MRR; ties go to the smaller xi, then the smaller kappa"""
    if not valid_queries:
        raise ConfigError("recurrency tuning needs a non-empty validation split")
    stats = {query.key: _query_history(query, history) for query in valid_queries}

    scan = []
    best = None
    points = list(product(sorted(set(cfg.grid_xi)), sorted(set(cfg.grid_kappa))))
    for decay_xi, mix_kappa in tqdm(points, desc="recurrency grid", disable=not show_progress):
        entries = {key: _blend(query_stats, decay_xi, mix_kappa) for key, query_stats in stats.items()}
        predictions = PredictionSet('scores', entries, entity_count, 'recurrency')
        ranks = build_rank_table(predictions, valid_queries, filter_index, tie_policy=tie_policy)
        mrr = original_metrics(ranks.ranks())['mrr']
        scan.append({'xi': decay_xi, 'kappa': mix_kappa, 'mrr': mrr})
        if best is None or mrr > best[0] + 1e-12:
            best = (mrr, decay_xi, mix_kappa)

    logger.info("Recurrency grid search picked xi=" + str(best[1]) + " kappa=" + str(best[2]),
                {'mrr': best[0], 'points': len(points)})
    return cfg.with_point(best[1], best[2]), scan
