#!/usr/bin/env python3
# -*- coding: utf-8
"""
Tests for two-model score fusion and the eta grid search
"""

import json
import sys

import numpy as np
import pytest

from errors import ConfigError, MismatchedQueriesError, PredictionFormatError
from ensemble import EnsembleConfig, combine_scores, densify, fuse_predictions, normalize, save_grid_scan, search_eta
from eval_metrics import PredictionSet, aggregate, build_rank_table, load_predictions, save_dense_predictions
from synthetic_data import dataset_from_facts
from temporal_index import build_index
from tkg_dataset import SPLITS, Query, augment_inverse


@pytest.fixture
def empty_filter():
    dataset = augment_inverse(dataset_from_facts(train=[(0, 0, 1, 0)], valid=[(1, 0, 2, 1)], test=[(2, 0, 0, 2)]))
    return build_index(dataset, SPLITS)


def queries_for(count, answer=0):
    # subjects far outside the fixture so nothing gets filtered
    return [Query(i, 'tail', 50 + i, 0, answer, 100) for i in range(count)]


def dense(vectors, name):
    return PredictionSet('dense', {(i, 'tail'): np.asarray(v, dtype=np.float64) for i, v in enumerate(vectors)},
                         len(vectors[0]), name)


def test_combination_endpoints():
    y_a, y_b = np.array([3.0, 1.0, 2.0]), np.array([0.0, 10.0, 5.0])
    assert np.allclose(combine_scores(y_a, y_b, EnsembleConfig(eta=1.0)), normalize(y_a))
    assert np.allclose(combine_scores(y_a, y_b, EnsembleConfig(eta=0.0)), normalize(y_b))
    assert np.allclose(combine_scores(y_a, y_b, EnsembleConfig(eta=1.0, normalization='none')), y_a)
    with pytest.raises(PredictionFormatError):
        combine_scores(y_a, np.zeros(4), EnsembleConfig())


def test_densify_and_normalize():
    sparse = PredictionSet('scores', {(0, 'tail'): {1: 0.5, 3: 0.2}, (1, 'tail'): {}}, 5, 'sparse')
    assert np.allclose(densify(sparse, (0, 'tail')), [-0.8, 0.5, -0.8, 0.2, -0.8])
    assert np.allclose(densify(sparse, (1, 'tail')), np.zeros(5))
    assert np.allclose(normalize(np.array([2.0, 2.0])), [0.0, 0.0])
    assert np.linalg.norm(normalize(np.array([3.0, 4.0]), 'l2')) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        normalize(np.array([1.0]), 'softmax')


def test_dense_sentinels_keep_listed_spread(tmp_path):
    sparse = PredictionSet('scores', {(0, 'tail'): {0: 0.2, 1: 0.6, 2: 1.0}}, 4, 'sparse')
    path = tmp_path / 'sparse.bin'
    save_dense_predictions(sparse, path)
    reloaded = load_predictions(path, 4)
    expected = [1.0 / 1.8, 1.4 / 1.8, 1.0, 0.0]
    assert np.allclose(normalize(densify(reloaded, (0, 'tail'))), expected, atol=1e-6)
    assert np.allclose(normalize(densify(sparse, (0, 'tail'))), expected, atol=1e-6)
    in_memory = dense([[0.2, 0.6, 1.0, -np.inf]], 'inf')
    assert np.allclose(normalize(densify(in_memory, (0, 'tail'))), expected, atol=1e-6)
    # rows never written are all sentinel
    assert np.allclose(densify(reloaded, (0, 'head')), np.zeros(4))


def test_config_grid():
    grid = EnsembleConfig(grid_step=0.1).grid()
    assert len(grid) == 11
    assert (grid[0], grid[5], grid[-1]) == (0.0, 0.5, 1.0)
    with pytest.raises(ConfigError):
        EnsembleConfig(grid_step=0.3)
    with pytest.raises(ConfigError):
        EnsembleConfig(eta=1.2)


def test_identical_models_pick_half(empty_filter):
    rng = np.random.default_rng(5)
    vectors = rng.random((12, 8))
    eta, scan = search_eta(dense(vectors, 'a'), dense(vectors, 'b'), queries_for(12), empty_filter)
    assert eta == 0.5
    assert len({round(row['value'], 12) for row in scan}) == 1


def test_dominating_model_takes_all_weight(empty_filter):
    strong = dense([[0.0, 1.0, 0.99]], 'strong')
    weak = dense([[0.5, 0.0, 1.0]], 'weak')
    queries = queries_for(1, answer=1)
    eta, scan = search_eta(strong, weak, queries, empty_filter)
    assert eta == 1.0
    assert scan[-1]['mrr'] == 1.0 and scan[-2]['mrr'] < 1.0
    eta, _ = search_eta(weak, strong, queries, empty_filter)
    assert eta == 0.0


def test_complementary_models_pick_interior_eta(empty_filter):
    model_a = dense([[1.0, 0.0, 0.0], [0.2, 1.0, 0.0]], 'a')
    model_b = dense([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], 'b')
    cfg = EnsembleConfig(grid_step=0.05)
    eta, scan = search_eta(model_a, model_b, queries_for(2), empty_filter, cfg=cfg, tie_policy='pessimistic')
    assert eta == pytest.approx(0.55)
    assert max(row['mrr'] for row in scan) == 1.0
    assert sum(row['mrr'] == 1.0 for row in scan) == 1


def test_grid_endpoints_match_individual_reports(empty_filter):
    rng = np.random.default_rng(8)
    # the last two queries have a same-time truth that the filter removes
    queries = queries_for(8, answer=2) + [Query(8, 'tail', 0, 0, 2, 0), Query(9, 'tail', 1, 0, 0, 1)]
    model_a, model_b = dense(rng.random((10, 6)), 'a'), dense(rng.random((10, 6)), 'b')
    sk = {query.key: 0.1 * query.query_index for query in queries}
    _, scan = search_eta(model_a, model_b, queries, empty_filter, metric='wmrr', sk_by_key=sk, b=0.1)
    assert (scan[0]['eta'], scan[-1]['eta']) == (0.0, 1.0)
    for model, row in ((model_b, scan[0]), (model_a, scan[-1])):
        report = aggregate(build_rank_table(model, queries, empty_filter, sk), b=0.1)
        for name, value in list(report.original.items()) + list(report.weighted.items()):
            assert row[name] == pytest.approx(value, abs=1e-12), model.model_name + " " + name


def test_parallel_grid_matches_serial(empty_filter):
    rng = np.random.default_rng(6)
    model_a, model_b = dense(rng.random((10, 6)), 'a'), dense(rng.random((10, 6)), 'b')
    serial = search_eta(model_a, model_b, queries_for(10), empty_filter, jobs=1)
    parallel = search_eta(model_a, model_b, queries_for(10), empty_filter, jobs=3)
    assert serial == parallel


def test_weighted_search_needs_strikingness(empty_filter, tmp_path):
    rng = np.random.default_rng(7)
    model_a, model_b = dense(rng.random((4, 5)), 'a'), dense(rng.random((4, 5)), 'b')
    queries = queries_for(4)
    with pytest.raises(ConfigError):
        search_eta(model_a, model_b, queries, empty_filter, metric='wmrr')
    with pytest.raises(MismatchedQueriesError):
        search_eta(model_a, model_b, queries, empty_filter, metric='wmrr', sk_by_key={(0, 'tail'): 0.5})
    sk = {query.key: 0.25 * query.query_index for query in queries}
    cfg = EnsembleConfig(normalization='l2')
    eta, scan = search_eta(model_a, model_b, queries, empty_filter, metric='wmrr', cfg=cfg, sk_by_key=sk)
    assert all(row['value'] == row['wmrr'] for row in scan)
    save_grid_scan(tmp_path / 'grid.json', eta, scan, cfg, 'wmrr')
    saved = json.loads((tmp_path / 'grid.json').read_text(encoding='utf-8'))
    assert saved['eta'] == eta and saved['normalization'] == 'l2'
    assert len(saved['scan']) == 11


def test_fuse_predictions(empty_filter):
    model_a = dense([[3.0, 1.0, 2.0], [0.0, 1.0, 2.0]], 'a')
    model_b = PredictionSet('scores', {(0, 'tail'): {2: 1.0}}, 3, 'b')
    fused = fuse_predictions(model_a, model_b, EnsembleConfig(eta=0.5))
    assert fused.kind == 'dense'
    assert fused.keys() == [(0, 'tail')]
    assert fused.model_name == 'a+b'
    assert np.allclose(fused.vector((0, 'tail')), [0.5, 0.0, 0.75])
    with pytest.raises(PredictionFormatError):
        fuse_predictions(model_a, dense([[1.0, 2.0]], 'c'), EnsembleConfig())
    with pytest.raises(MismatchedQueriesError):
        search_eta(model_a, PredictionSet('scores', {(9, 'tail'): {0: 1.0}}, 3, 'd'), queries_for(2), empty_filter)


def main():
    print("=" * 50)
    print("ENSEMBLE TESTS")
    print("=" * 50)
    code = pytest.main([__file__, '-q'])
    print("\n" + "=" * 50)
    print("ALL TESTS PASSED" if code == 0 else "SOME TESTS FAILED - Check the issues above")
    print("=" * 50)
    return code


if __name__ == "__main__":
    sys.exit(main())
