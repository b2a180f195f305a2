#!/usr/bin/env python3
# -*- coding: utf-8
"""
RSMF parameter study
Re-scores the same queries while one parameter (tau, alpha_s, window or
lambda) moves over a grid. Reports the strikingness volume per bin for every
value and, when model predictions are given, each model's weighted metrics so
the model ordering can be compared across values.
"""

from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import settings
from errors import ConfigError
from eval_metrics import PredictionSet, aggregate, build_rank_table
from group_analysis import measure_volume_comparison
from logging_system import get_logger
from rsmf import RsmfConfig, batch_strikingness, history_for_scope
from rule_miner import RuleSet, mine_rules
from temporal_index import TemporalIndex, build_index
from tkg_dataset import Dataset, Query

logger = get_logger("ParameterStudy")

PARAMETERS = ('tau', 'alpha_s', 'window', 'lambda')


def variant_config(base: RsmfConfig, parameter: str, value) -> RsmfConfig:
    """base with one parameter replaced; alpha_s sets both entity weights, relation gets the rest"""
    if parameter == 'tau':
        return base
    if parameter == 'window':
        return replace(base, window=settings.parse_window(value))
    if parameter == 'lambda':
        return replace(base, lambda_decay=float(value))
    if parameter == 'alpha_s':
        weight = float(value)
        return replace(base, alpha=(weight, weight, 1.0 - 2.0 * weight))
    raise ConfigError("parameter must be one of " + ", ".join(PARAMETERS) + ", got " + repr(parameter))


def rules_at(mined: RuleSet, tau: float) -> RuleSet:
    return RuleSet([rule for rule in mined if rule.confidence >= tau], tau, mined.min_body_support)


def strikingness_study(dataset: Dataset, queries: Sequence[Query], parameter: str, values: Sequence,
                       base: Optional[RsmfConfig] = None, tau: float = 0.01, min_body_support: int = 2,
                       bin_width: float = 0.1, predictions: Sequence[PredictionSet] = (),
                       filter_index: Optional[TemporalIndex] = None, b: float = 0.1,
                       tie_policy: str = 'realistic', jobs: int = 1,
                       show_progress: bool = False) -> Tuple[List[Dict], List[Dict]]:
    """(volume rows, metric rows) over the value grid of one parameter"""
    if parameter not in PARAMETERS:
        raise ConfigError("parameter must be one of " + ", ".join(PARAMETERS) + ", got " + repr(parameter))
    if not values:
        raise ConfigError("the study needs at least one value")
    if predictions and filter_index is None:
        raise ConfigError("model metrics need the filter index")
    base = base or RsmfConfig()
    configs = [variant_config(base, parameter, value) for value in values]
    taus = [float(value) for value in values] if parameter == 'tau' else [tau] * len(values)
    if any(not 0.0 <= t <= 1.0 for t in taus):
        raise ConfigError("tau values must lie in [0, 1]")

    # rules for every tau are a confidence filter over one mining pass at the lowest tau
    mined = mine_rules(build_index(dataset, ('train',)), tau=min(taus), min_body_support=min_body_support, jobs=jobs)
    history = history_for_scope(dataset, base.history_scope)

    volume_rows: List[Dict] = []
    metric_rows: List[Dict] = []
    for value, cfg, value_tau in zip(values, configs, taus):
        label = str(value)
        table = batch_strikingness(queries, rules_at(mined, value_tau), history, cfg, parallelism=jobs,
                                   show_progress=show_progress)
        sk_map = table.sk_map()
        mean_sk = float(np.mean(list(sk_map.values()))) if sk_map else None
        for row in measure_volume_comparison({'count': sk_map}, bin_width):
            volume_rows.append({'parameter': parameter, 'value': label, **row, 'mean_sk': mean_sk})
        for model in predictions:
            report = aggregate(build_rank_table(model, queries, filter_index, sk_map, tie_policy, jobs), b)
            metric_rows.append({'parameter': parameter, 'value': label, 'model': model.model_name,
                                'mrr': report.original['mrr'], **report.weighted})
        logger.info("Scored " + str(len(table)) + " query directions at " + parameter + "=" + label,
                    {'parameter': parameter, 'value': label, 'mean_sk': mean_sk})
    return volume_rows, metric_rows


def model_order(metric_rows: Sequence[Dict], metric: str = 'wmrr') -> Dict[str, List[str]]:
    """Model names by descending metric per parameter value; ties keep input order"""
    by_value: Dict[str, List[Dict]] = {}
    for row in metric_rows:
        by_value.setdefault(row['value'], []).append(row)
    return {value: [row['model'] for row in sorted(rows, key=lambda row: -(row[metric] or 0.0))]
            for value, rows in by_value.items()}


def ordering_is_stable(metric_rows: Sequence[Dict], metric: str = 'wmrr') -> bool:
    orders = list(model_order(metric_rows, metric).values())
    return all(order == orders[0] for order in orders[1:])
