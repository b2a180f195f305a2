#!/usr/bin/env python3
# -*- coding: utf-8
"""
End-to-end tests for the strikebench command line on a synthetic dataset
"""

import json
import sys

import pytest

import settings
from eval_metrics import RankTable
from rsmf import StrikingnessTable
from strikebench import manifest_path, run
from synthetic_data import generate_synthetic_tkg
from tkg_dataset import save_dataset


@pytest.fixture(scope='module')
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp('cli')
    save_dataset(generate_synthetic_tkg(seed=0, entities=20, facts=200), root / 'data')
    return root


def cli(*args):
    return run([str(a) for a in args] + ['--quiet', '--jobs', '1'])


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def test_ingest_writes_summary_and_manifest(workspace):
    out = workspace / 'normalized'
    assert cli('ingest', '--dataset', workspace / 'data', '--out', out) == 0
    summary = read_json(out / 'dataset_summary.json')
    assert summary['entities'] == 20
    manifest = read_json(manifest_path(str(out)))
    assert manifest['command'] == 'ingest'
    assert manifest['tool_version'] == settings.TOOL_VERSION
    assert all(len(digest) == 64 for digest in manifest['inputs'].values())


def test_full_pipeline(workspace):
    data = workspace / 'data'
    rules = workspace / 'rules.jsonl'
    assert cli('mine-rules', '--dataset', data, '--out', rules, '--tau', '0.05') == 0
    assert read_json(manifest_path(str(rules)))['settings']['tau'] == 0.05

    sk = workspace / 'sk.tsv'
    assert cli('strikingness', '--dataset', data, '--rules', rules, '--out', sk, '--window', '10') == 0
    table = StrikingnessTable.load(sk)
    assert table.header['window'] == 10
    assert all(0.0 <= value <= 1.0 + 1e-9 for value in table.sk_map().values())

    freq = workspace / 'freq.tsv'
    assert cli('strikingness', '--dataset', data, '--measure', 'freq_inv', '--out', freq) == 0
    assert set(StrikingnessTable.load(freq).sk_map()) == set(table.sk_map())

    for split in ('test', 'valid'):
        assert cli('predict-recurrency', '--dataset', data, '--split', split, '--out', workspace / ('rec_' + split + '.jsonl'),
                   '--grid-xi', '0.5', '0.9', '--grid-kappa', '0', '1') == 0
        assert cli('predict-recurrency', '--dataset', data, '--split', split, '--out', workspace / ('freq_' + split + '.jsonl'),
                   '--grid-xi', '0.9', '--grid-kappa', '0') == 0

    evaluated = workspace / 'eval_rec'
    assert cli('evaluate', '--dataset', data, '--preds', workspace / 'rec_test.jsonl', '--sk', sk,
               '--out-dir', evaluated) == 0
    report = read_json(evaluated / 'report.json')
    assert report['sk_available']
    assert 0.0 <= report['weighted']['wmrr'] <= 1.0
    assert (evaluated / 'bins.csv').exists()
    assert RankTable.load(evaluated / 'ranks.tsv').has_sk
    assert manifest_path(str(evaluated)).exists()

    fused = workspace / 'fused.bin'
    assert cli('ensemble', '--dataset', data, '--a', workspace / 'rec_test.jsonl', '--b', workspace / 'freq_test.jsonl',
               '--valid-a', workspace / 'rec_valid.jsonl', '--valid-b', workspace / 'freq_valid.jsonl',
               '--out', fused) == 0
    grid = read_json(workspace / 'fused.grid.json')
    assert 0.0 <= grid['eta'] <= 1.0
    assert len(grid['scan']) == 11
    assert (workspace / 'fused.bin.shape.json').exists()

    evaluated_fused = workspace / 'eval_fused'
    assert cli('evaluate', '--dataset', data, '--preds', fused, '--out-dir', evaluated_fused) == 0
    assert not read_json(evaluated_fused / 'report.json')['sk_available']

    reported = workspace / 'report'
    assert cli('report', '--dataset', data, '--ranks', evaluated / 'ranks.tsv', evaluated_fused / 'ranks.tsv',
               '--nof', '--measure-tables', sk, freq, '--out-dir', reported) == 0
    for name in ('bins.csv', 'bias_sweep.csv', 'significance.json', 'n_model.csv', 'nof_split.csv',
                 'novelty.csv', 'rarity.csv', 'outstanding.csv', 'measure_volume.csv', 'report.json'):
        assert (reported / name).exists(), name
    assert len(read_json(reported / 'report.json')['models']) == 2


def test_sweep_writes_study(workspace):
    data = workspace / 'data'
    models = []
    for name, kappa in (('sweep_recent', '1'), ('sweep_frequent', '0')):
        models.append(workspace / (name + '.jsonl'))
        assert cli('predict-recurrency', '--dataset', data, '--out', models[-1],
                   '--grid-xi', '0.9', '--grid-kappa', kappa) == 0

    out = workspace / 'sweep_lambda'
    assert cli('sweep', '--dataset', data, '--parameter', 'lambda', '--values', '0.05', '0.5',
               '--preds', *models, '--out-dir', out) == 0
    summary = read_json(out / 'sweep.json')
    assert summary['parameter'] == 'lambda'
    assert summary['values'] == ['0.05', '0.5']
    assert set(summary['model_order']) == {'0.05', '0.5'}
    assert isinstance(summary['stable_order'], bool)
    assert (out / 'volumes.csv').exists() and (out / 'metrics.csv').exists()
    assert manifest_path(str(out)).exists()

    assert cli('sweep', '--dataset', data, '--parameter', 'alpha_s', '--values', '0.7',
               '--out-dir', workspace / 'bad_sweep') == 1


def test_config_file_and_flag_precedence(workspace, monkeypatch):
    monkeypatch.setenv('STRIKEBENCH_SEED', '7')
    config = workspace / 'mine.json'
    config.write_text(json.dumps({'tau': 0.2, 'min-body-support': 3}), encoding='utf-8')
    out = workspace / 'rules_cfg.jsonl'
    assert cli('mine-rules', '--dataset', workspace / 'data', '--out', out, '--config', config, '--tau', '0.1') == 0
    resolved = read_json(manifest_path(str(out)))['settings']
    assert resolved['tau'] == 0.1
    assert resolved['min_body_support'] == 3
    assert resolved['seed'] == '7'


def test_exit_codes(workspace, capsys):
    assert cli('mine-rules', '--dataset', workspace / 'data', '--out', workspace / 'bad.jsonl', '--tau', '1.5') == 1
    assert cli('mine-rules', '--dataset', workspace / 'data', '--out', workspace / 'bad.jsonl', '--bogus') == 1
    assert cli('strikingness', '--dataset', workspace / 'data', '--out', workspace / 'bad.tsv') == 1
    assert cli('mine-rules', '--dataset', workspace / 'missing', '--out', workspace / 'bad.jsonl') == 2
    assert run(['--help']) == 0
    assert "Error:" in capsys.readouterr().err


def main():
    print("=" * 50)
    print("STRIKEBENCH CLI TESTS")
    print("=" * 50)
    code = pytest.main([__file__, '-q'])
    print("\n" + "=" * 50)
    print("ALL TESTS PASSED" if code == 0 else "SOME TESTS FAILED - Check the issues above")
    print("=" * 50)
    return code


if __name__ == "__main__":
    sys.exit(main())
