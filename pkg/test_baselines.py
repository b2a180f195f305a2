#!/usr/bin/env python3
# -*- coding: utf-8
"""
Tests for the Freq Inv / Temp Inv measures and the recurrency predictor
"""

import math
import sys

import pytest

from errors import ConfigError, DatasetValidationError
from baseline_strikingness import PairFrequencyTable, batch_freq_inv, batch_temp_inv, freq_inv, temp_inv
from eval_metrics import build_rank_table
from recurrency_baseline import RecurrencyConfig, predict_recurrency, recurrency_scores, tune_recurrency
from rsmf import StrikingnessTable
from synthetic_data import dataset_from_facts
from temporal_index import build_index
from tkg_dataset import SPLITS, Quadruple, augment_inverse, directional_queries


@pytest.fixture
def counted():
    dataset = augment_inverse(dataset_from_facts(
        train=[(0, 0, 1, 0), (0, 0, 1, 1), (0, 0, 3, 2), (0, 0, 1, 3), (1, 0, 2, 3)],
        valid=[(0, 0, 1, 5)],
        test=[(1, 0, 2, 7)],
        raw_relation_count=1,
    ))
    return dataset, build_index(dataset, ('train',)), build_index(dataset, SPLITS)


@pytest.fixture
def recurring():
    dataset = augment_inverse(dataset_from_facts(
        train=[(0, 0, 1, 1), (0, 0, 1, 2), (0, 0, 1, 3), (0, 0, 2, 8), (3, 0, 4, 1)],
        valid=[(0, 0, 2, 9), (3, 0, 4, 9)],
        test=[(0, 0, 2, 10)],
        raw_relation_count=1,
    ))
    index = build_index(dataset, SPLITS)
    valid = directional_queries(dataset.raw_split('valid'), 1)
    test = directional_queries(dataset.raw_split('test'), 1)
    return dataset, index, valid, test


# -- Freq Inv / Temp Inv -----------------------------------------------------------------

def test_freq_inv_examples(counted):
    _, train_index, _ = counted
    table = PairFrequencyTable.from_index(train_index)
    assert table.max_count == 4
    assert freq_inv(Quadruple(1, 0, 2, 7), table) == pytest.approx(0.75)
    assert freq_inv(Quadruple(0, 0, 1, 7), table) == pytest.approx(0.0)
    assert freq_inv(Quadruple(2, 0, 0, 7), table) == pytest.approx(1.0)


def test_freq_inv_requires_train_only(counted):
    _, _, full_index = counted
    with pytest.raises(DatasetValidationError):
        PairFrequencyTable.from_index(full_index)


def test_temp_inv_examples(counted):
    _, _, full_index = counted
    assert temp_inv(Quadruple(0, 0, 1, 6), full_index) == pytest.approx(1 - math.exp(-0.005), abs=1e-12)
    assert temp_inv(Quadruple(0, 0, 1, 6), full_index) == pytest.approx(0.0049875, abs=1e-7)
    assert temp_inv(Quadruple(2, 0, 1, 6), full_index) == 1.0
    # same-time facts are not history
    assert temp_inv(Quadruple(0, 0, 1, 5), full_index) == pytest.approx(1 - math.exp(-0.005 * 2))
    with pytest.raises(ConfigError):
        temp_inv(Quadruple(0, 0, 1, 6), full_index, lambda_t=0.0)


def test_baseline_tables_share_schema(counted, tmp_path):
    dataset, train_index, full_index = counted
    queries = directional_queries(dataset.raw_split('test'), dataset.raw_relation_count)
    freq = batch_freq_inv(queries, PairFrequencyTable.from_index(train_index))
    temp = batch_temp_inv(queries, full_index, 0.01, history_scope='all-before-t')
    assert freq.measure == 'freq_inv' and temp.measure == 'temp_inv'
    assert freq.sk(0, 'tail') == pytest.approx(0.75)
    assert temp.sk(0, 'head') == pytest.approx(1 - math.exp(-0.01 * 4))
    record = freq.records[(0, 'tail')]
    assert (record.sk_s, record.sk_o, record.sk_r) == (None, None, None)
    temp.save(tmp_path / 'temp.tsv')
    loaded = StrikingnessTable.load(tmp_path / 'temp.tsv')
    assert loaded.measure == 'temp_inv'
    assert loaded.header['temp_lambda'] == 0.01
    assert loaded.sk_map() == temp.sk_map()


# -- recurrency ---------------------------------------------------------------------------

def test_recurrency_recency_versus_frequency(recurring):
    _, index, _, test = recurring
    query = test[0]
    recent = recurrency_scores(query, index, RecurrencyConfig(decay_xi=0.9, mix_kappa=1.0))
    assert max(recent, key=recent.get) == 2
    frequent = recurrency_scores(query, index, RecurrencyConfig(decay_xi=0.9, mix_kappa=0.0))
    assert max(frequent, key=frequent.get) == 1
    assert frequent[1] == pytest.approx(3 / 5)


def test_recurrency_point_value(recurring):
    _, index, _, test = recurring
    scores = recurrency_scores(test[0], index, RecurrencyConfig(decay_xi=0.9, mix_kappa=0.5))
    assert set(scores) == {1, 2}
    assert scores[2] == pytest.approx(0.5 * 0.9 + 0.5 * 2 / 5)
    assert scores[1] == pytest.approx(0.5 * 0.9 ** 7 + 0.5 * 3 / 5)


def test_recurrency_predictions_rank(recurring):
    dataset, index, _, test = recurring
    predictions = predict_recurrency(test, index, RecurrencyConfig(mix_kappa=1.0), dataset.entity_count)
    ranks = build_rank_table(predictions, test, index)
    assert ranks.rows[(0, 'tail')].rank == 1
    predictions = predict_recurrency(test, index, RecurrencyConfig(mix_kappa=0.0), dataset.entity_count)
    assert build_rank_table(predictions, test, index).rows[(0, 'tail')].rank == 2


def test_tuning_prefers_best_validation_mrr(recurring):
    dataset, index, valid, _ = recurring
    cfg = RecurrencyConfig(grid_xi=(0.9,), grid_kappa=(0.0, 1.0))
    chosen, scan = tune_recurrency(valid, index, index, cfg, dataset.entity_count)
    assert (chosen.decay_xi, chosen.mix_kappa) == (0.9, 1.0)
    assert len(scan) == 2
    assert scan[1]['mrr'] > scan[0]['mrr']
    again, _ = tune_recurrency(valid, index, index, cfg, dataset.entity_count)
    assert again == chosen


def test_tuning_ties_pick_smallest_point(recurring):
    dataset, index, valid, _ = recurring
    single_history = [query for query in valid if query.query_index == 1]
    cfg = RecurrencyConfig(grid_xi=(0.9, 0.5), grid_kappa=(1.0, 0.0))
    chosen, scan = tune_recurrency(single_history, index, index, cfg, dataset.entity_count)
    assert all(row['mrr'] == 1.0 for row in scan)
    assert (chosen.decay_xi, chosen.mix_kappa) == (0.5, 0.0)


def test_recurrency_config_validation():
    with pytest.raises(ConfigError):
        RecurrencyConfig(decay_xi=0.0)
    with pytest.raises(ConfigError):
        RecurrencyConfig(mix_kappa=1.5)
    with pytest.raises(ConfigError):
        RecurrencyConfig(grid_kappa=())


def main():
    print("=" * 50)
    print("BASELINE TESTS")
    print("=" * 50)
    code = pytest.main([__file__, '-q'])
    print("\n" + "=" * 50)
    print("ALL TESTS PASSED" if code == 0 else "SOME TESTS FAILED - Check the issues above")
    print("=" * 50)
    return code


if __name__ == "__main__":
    sys.exit(main())
