#!/usr/bin/env python3
# -*- coding: utf-8
"""
Strikebench command line
Subcommands: ingest, mine-rules, strikingness, predict-recurrency, evaluate,
ensemble, report, sweep. Every run writes <output>.manifest.json with the resolved
settings, input digests, tool version and duration.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import settings
from baseline_strikingness import PairFrequencyTable, batch_freq_inv, batch_temp_inv
from ensemble import EnsembleConfig, fuse_predictions, save_grid_scan, search_eta
from errors import ConfigError, StrikebenchError
from eval_metrics import (RankTable, TIE_POLICIES, aggregate, build_rank_table, load_predictions,
                          save_dense_predictions, save_jsonl_predictions)
from group_analysis import (bin_significance, group_by_strikingness, measure_volume_comparison, n_model_hits,
                            nof_split_hits, nof_values, novelty_profile, outstanding_events, relation_counts,
                            relation_rarity_profile, wmrr_bias_sweep, write_rows_csv)
from logging_system import get_logger
from parameter_study import PARAMETERS, model_order, ordering_is_stable, strikingness_study
from recurrency_baseline import RecurrencyConfig, predict_recurrency, tune_recurrency
from rsmf import HISTORY_SCOPES, MEASURES, RsmfConfig, StrikingnessTable, batch_strikingness, history_for_scope
from rule_miner import load_rules, mine_rules, save_rules
from temporal_index import build_index
from tkg_dataset import SPLITS, FormatSpec, augment_inverse, directional_queries, load_dataset, save_dataset

logger = get_logger("Strikebench")

COMMANDS = ('ingest', 'mine-rules', 'strikingness', 'predict-recurrency', 'evaluate', 'ensemble', 'report', 'sweep')


@dataclass
class RunManifest:
    command: str
    settings: Dict[str, Any]
    inputs: Dict[str, str]
    outputs: List[str]
    tool_version: str = settings.TOOL_VERSION
    duration_seconds: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def write(self, path: Path):
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True, default=_jsonable)
            f.write("\n")


def _jsonable(value):
    if isinstance(value, (tuple, set, frozenset)):
        return list(value)
    return str(value)


def manifest_path(output: str) -> Path:
    return Path(str(output).rstrip('/\\') + '.manifest.json')


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


class StrikebenchParser(argparse.ArgumentParser):
    """Usage errors surface as ConfigError so they map to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(self.prog + ": " + message)


def _default(key: str) -> str:
    value = settings.DEFAULTS[key]
    if value is None:
        return "full" if key == 'window' else "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help="JSON config file; flags override it")
    parser.add_argument('--jobs', type=int, help="worker count (default: available cores)")
    parser.add_argument('--quiet', action='store_true', help="hide progress bars")


def _add_dataset(parser: argparse.ArgumentParser, required: bool = True):
    parser.add_argument('--dataset', required=required,
                        help="dataset directory (relative paths also tried under STRIKEBENCH_DATA_DIR)")
    parser.add_argument('--time-divisor', help="timestamp granularity, 'auto' or an integer (default: "
                        + _default('time_divisor') + ")")


def build_parser() -> argparse.ArgumentParser:
    parser = StrikebenchParser(prog='strikebench', description="Strikingness-aware evaluation for temporal KG forecasting")
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    ingest = subparsers.add_parser('ingest', help="validate and normalize a dataset")
    _add_common(ingest)
    _add_dataset(ingest)
    ingest.add_argument('--out', required=True, help="output dataset directory")

    mine = subparsers.add_parser('mine-rules', help="mine length-1 temporal rules from the train split")
    _add_common(mine)
    _add_dataset(mine)
    mine.add_argument('--out', required=True, help="rules JSON Lines file")
    mine.add_argument('--tau', type=float, help="minimum confidence (default: " + _default('tau') + ")")
    mine.add_argument('--min-body-support', type=int,
                      help="minimum body support (default: " + _default('min_body_support') + ")")
    mine.add_argument('--sample-cap', type=int, help="cap on body groundings counted per rule (default: none)")
    mine.add_argument('--seed', type=int, help="sampling seed (default: " + _default('seed') + ")")

    sk = subparsers.add_parser('strikingness', help="score query strikingness")
    _add_common(sk)
    _add_dataset(sk)
    sk.add_argument('--rules', help="rules JSON Lines file (needed for rsmf)")
    sk.add_argument('--out', required=True, help="strikingness table TSV")
    sk.add_argument('--measure', choices=MEASURES, help="measure (default: " + _default('measure') + ")")
    sk.add_argument('--split', choices=('valid', 'test'), help="split to score (default: " + _default('split') + ")")
    sk.add_argument('--window', help="history window in steps or 'full' (default: " + _default('window') + ")")
    sk.add_argument('--lambda', dest='lambda', type=float,
                    help="decay coefficient (default: " + _default('lambda') + ")")
    sk.add_argument('--alpha', help="subject,object,relation weights (default: " + _default('alpha') + ")")
    sk.add_argument('--history-scope', choices=HISTORY_SCOPES,
                    help="grounding history (default: " + _default('history_scope') + ")")
    sk.add_argument('--temp-lambda', type=float, help="Temp Inv decay (default: " + _default('temp_lambda') + ")")

    recurrency = subparsers.add_parser('predict-recurrency', help="recency/frequency baseline predictions")
    _add_common(recurrency)
    _add_dataset(recurrency)
    recurrency.add_argument('--out', required=True, help="predictions JSON Lines file")
    recurrency.add_argument('--split', choices=('valid', 'test'),
                            help="split to predict (default: " + _default('split') + ")")
    recurrency.add_argument('--grid-xi', nargs='+', help="recency bases searched (default: " + _default('grid_xi') + ")")
    recurrency.add_argument('--grid-kappa', nargs='+',
                            help="recency/frequency blends searched (default: " + _default('grid_kappa') + ")")
    recurrency.add_argument('--tie-policy', choices=TIE_POLICIES,
                            help="tie policy for tuning (default: " + _default('tie_policy') + ")")

    evaluate = subparsers.add_parser('evaluate', help="rank predictions and compute ORG/SK metrics")
    _add_common(evaluate)
    _add_dataset(evaluate)
    evaluate.add_argument('--preds', required=True, help="predictions (.jsonl or dense .bin)")
    evaluate.add_argument('--sk', help="strikingness table; without it only ORG metrics are reported")
    evaluate.add_argument('--split', choices=('valid', 'test'), help="evaluated split (default: " + _default('split') + ")")
    evaluate.add_argument('--b', dest='b', type=float, help="bias b (default: " + _default('b') + ")")
    evaluate.add_argument('--tie-policy', choices=TIE_POLICIES, help="(default: " + _default('tie_policy') + ")")
    evaluate.add_argument('--group-width', type=float, help="bin width (default: " + _default('group_width') + ")")
    evaluate.add_argument('--out-dir', required=True, help="report directory")

    fuse = subparsers.add_parser('ensemble', help="fuse two models with a validation-tuned eta")
    _add_common(fuse)
    _add_dataset(fuse)
    fuse.add_argument('--a', dest='model_a', required=True, help="test predictions of model A")
    fuse.add_argument('--b', dest='model_b', required=True, help="test predictions of model B")
    fuse.add_argument('--valid-a', required=True, help="validation predictions of model A")
    fuse.add_argument('--valid-b', required=True, help="validation predictions of model B")
    fuse.add_argument('--metric', choices=('mrr', 'wmrr'), help="search metric (default: " + _default('metric') + ")")
    fuse.add_argument('--valid-sk', help="validation strikingness table (needed for wmrr)")
    fuse.add_argument('--bias', dest='b', type=float, help="bias b for wmrr (default: " + _default('b') + ")")
    fuse.add_argument('--grid-step', type=float, help="eta grid step (default: " + _default('grid_step') + ")")
    fuse.add_argument('--normalization', choices=('minmax', 'l2', 'none'),
                      help="per-query normalization (default: " + _default('normalization') + ")")
    fuse.add_argument('--tie-policy', choices=TIE_POLICIES, help="(default: " + _default('tie_policy') + ")")
    fuse.add_argument('--out', required=True, help="fused dense predictions (.bin)")

    report = subparsers.add_parser('report', help="group analyses over saved rank tables")
    _add_common(report)
    _add_dataset(report, required=False)
    report.add_argument('--ranks', nargs='+', required=True, help="rank tables from evaluate")
    report.add_argument('--sk', help="strikingness table to join")
    report.add_argument('--split', choices=('valid', 'test'), help="split of the ranks (default: " + _default('split') + ")")
    report.add_argument('--group-width', type=float, help="bin width (default: " + _default('group_width') + ")")
    report.add_argument('--b', dest='b', type=float, help="bias b (default: " + _default('b') + ")")
    report.add_argument('--b-values', nargs='+', help="biases for the WMRR sweep (default: 0.01 0.1 1 10 100 1000)")
    report.add_argument('--n-model-k', type=int, help="k for n-model hits (default: 3)")
    report.add_argument('--nof', action='store_true', help="split bins by neighborhood overlap (needs --dataset)")
    report.add_argument('--window', help="NO_f window in steps or 'full' (default: " + _default('window') + ")")
    report.add_argument('--top-k', type=int, help="outstanding events listed (default: 20)")
    report.add_argument('--measure-tables', nargs='+', help="strikingness tables to compare bin volumes")
    report.add_argument('--out-dir', required=True, help="report directory")

    sweep = subparsers.add_parser('sweep', help="strikingness distribution over one RSMF parameter grid")
    _add_common(sweep)
    _add_dataset(sweep)
    sweep.add_argument('--parameter', required=True, choices=PARAMETERS, help="parameter to vary")
    sweep.add_argument('--values', nargs='+', required=True, help="grid of values ('full' allowed for window)")
    sweep.add_argument('--split', choices=('valid', 'test'), help="split to score (default: " + _default('split') + ")")
    sweep.add_argument('--tau', type=float, help="rule confidence threshold (default: " + _default('tau') + ")")
    sweep.add_argument('--min-body-support', type=int,
                       help="minimum body support (default: " + _default('min_body_support') + ")")
    sweep.add_argument('--window', help="history window in steps or 'full' (default: " + _default('window') + ")")
    sweep.add_argument('--lambda', dest='lambda', type=float,
                       help="decay coefficient (default: " + _default('lambda') + ")")
    sweep.add_argument('--alpha', help="subject,object,relation weights (default: " + _default('alpha') + ")")
    sweep.add_argument('--history-scope', choices=HISTORY_SCOPES,
                       help="grounding history (default: " + _default('history_scope') + ")")
    sweep.add_argument('--preds', nargs='+', help="model predictions to evaluate at every value")
    sweep.add_argument('--b', dest='b', type=float, help="bias b (default: " + _default('b') + ")")
    sweep.add_argument('--tie-policy', choices=TIE_POLICIES, help="(default: " + _default('tie_policy') + ")")
    sweep.add_argument('--group-width', type=float, help="bin width (default: " + _default('group_width') + ")")
    sweep.add_argument('--out-dir', required=True, help="study directory")
    return parser


# -- value coercion -----------------------------------------------------------

def _float(config: Dict, key: str) -> float:
    try:
        return float(config[key])
    except (TypeError, ValueError):
        raise ConfigError(key + " must be a number, got " + repr(config[key]))


def _int(config: Dict, key: str) -> int:
    try:
        return int(config[key])
    except (TypeError, ValueError):
        raise ConfigError(key + " must be an integer, got " + repr(config[key]))


def _optional_int(config: Dict, key: str) -> Optional[int]:
    value = config.get(key)
    if value is None or (isinstance(value, str) and value.strip().lower() in ('', 'none')):
        return None
    return _int(config, key)


class StrikebenchRunner:
    def __init__(self, config: Dict[str, Any], show_progress: bool = True):
        self.config = config
        self.show_progress = show_progress
        self.jobs = _optional_int(config, 'jobs') or settings.default_jobs()
        self.inputs: Dict[str, str] = {}
        self.outputs: List[str] = []
        self.details: Dict[str, Any] = {}

    # -- inputs ------------------------------------------------------------

    def track(self, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError("input not found: " + str(path))
        self.inputs[str(path)] = file_digest(path)
        return path

    def load_dataset(self, augmented: bool = True):
        root = settings.resolve_dataset_path(self.config['dataset'])
        format_spec = FormatSpec(time_divisor=self.config.get('time_divisor') or 'auto')
        dataset = load_dataset(root, format_spec)
        for split in SPLITS:
            self.track(root / format_spec.split_file(split))
        for name in (format_spec.entity_vocab_file, format_spec.relation_vocab_file):
            if (root / name).exists():
                self.track(root / name)
        return augment_inverse(dataset) if augmented else dataset

    def queries_for(self, dataset, split: str):
        return directional_queries(dataset.raw_split(split), dataset.raw_relation_count)

    def produced(self, path) -> Path:
        path = Path(path)
        self.outputs.append(str(path))
        return path

    # -- subcommands -------------------------------------------------------

    def ingest(self):
        dataset = self.load_dataset(augmented=False)
        out = Path(self.config['out'])
        save_dataset(dataset, out)
        self.produced(out)
        with open(self.produced(out / 'dataset_summary.json'), 'w', encoding='utf-8', newline='\n') as f:
            json.dump(dataset.summary(), f, indent=2, sort_keys=True)
            f.write("\n")
        self.details['summary'] = dataset.summary()
        return self.config['out']

    def mine_rules(self):
        dataset = self.load_dataset()
        train_index = build_index(dataset, ('train',))
        rules = mine_rules(train_index, tau=_float(self.config, 'tau'),
                           min_body_support=_int(self.config, 'min_body_support'),
                           sample_cap=_optional_int(self.config, 'sample_cap'),
                           seed=_int(self.config, 'seed'), jobs=self.jobs)
        save_rules(rules, self.produced(self.config['out']))
        self.details['rules'] = len(rules)
        return self.config['out']

    def strikingness(self):
        dataset = self.load_dataset()
        split = self.config['split']
        measure = self.config['measure']
        queries = self.queries_for(dataset, split)
        history_scope = self.config['history_scope']

        if measure == 'rsmf':
            if not self.config.get('rules'):
                raise ConfigError("--rules is required for the rsmf measure")
            rules = load_rules(self.track(self.config['rules']))
            cfg = RsmfConfig(window=settings.parse_window(self.config['window']),
                             lambda_decay=_float(self.config, 'lambda'),
                             alpha=settings.parse_alpha(self.config['alpha']),
                             history_scope=history_scope)
            history = history_for_scope(dataset, history_scope)
            table = batch_strikingness(queries, rules, history, cfg, parallelism=self.jobs,
                                       show_progress=self.show_progress, extra_header={'split': split})
        elif measure == 'freq_inv':
            table = batch_freq_inv(queries, PairFrequencyTable.from_index(build_index(dataset, ('train',))),
                                   show_progress=self.show_progress)
        elif measure == 'temp_inv':
            table = batch_temp_inv(queries, history_for_scope(dataset, history_scope),
                                   _float(self.config, 'temp_lambda'), history_scope, self.show_progress)
        else:
            raise ConfigError("unknown measure: " + repr(measure))
        table.header['split'] = split
        table.save(self.produced(self.config['out']))
        self.details['records'] = len(table)
        return self.config['out']

    def predict_recurrency(self):
        dataset = self.load_dataset()
        history = build_index(dataset, SPLITS)
        cfg = RecurrencyConfig(grid_xi=settings.parse_float_list(self.config['grid_xi']),
                               grid_kappa=settings.parse_float_list(self.config['grid_kappa']))
        tuned, scan = tune_recurrency(self.queries_for(dataset, 'valid'), history, history, cfg,
                                      dataset.entity_count, self.config['tie_policy'], self.show_progress)
        predictions = predict_recurrency(self.queries_for(dataset, self.config['split']), history, tuned,
                                         dataset.entity_count, show_progress=self.show_progress)
        save_jsonl_predictions(predictions, self.produced(self.config['out']))
        self.details.update({'xi': tuned.decay_xi, 'kappa': tuned.mix_kappa, 'scan': scan})
        return self.config['out']

    def evaluate(self):
        dataset = self.load_dataset()
        full_index = build_index(dataset, SPLITS)
        queries = self.queries_for(dataset, self.config['split'])
        predictions = load_predictions(self.track(self.config['preds']), dataset.entity_count)
        sk_map = None
        if self.config.get('sk'):
            sk_map = StrikingnessTable.load(self.track(self.config['sk'])).sk_map()

        ranks = build_rank_table(predictions, queries, full_index, sk_map, self.config['tie_policy'],
                                 jobs=self.jobs, show_progress=self.show_progress)
        b = _float(self.config, 'b')
        report = aggregate(ranks, b)
        out_dir = Path(self.config['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
        if ranks.has_sk:
            report.bins = group_by_strikingness(ranks, _float(self.config, 'group_width'))
            write_rows_csv(report.bins, self.produced(out_dir / 'bins.csv'))
        ranks.save(self.produced(out_dir / 'ranks.tsv'))
        with open(self.produced(out_dir / 'report.json'), 'w', encoding='utf-8', newline='\n') as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        self.details.update({'original': report.original, 'weighted': report.weighted})
        print_report(report.to_dict())
        return self.config['out_dir']

    def ensemble(self):
        dataset = self.load_dataset()
        full_index = build_index(dataset, SPLITS)
        entity_count = dataset.entity_count
        pred_a = load_predictions(self.track(self.config['model_a']), entity_count)
        pred_b = load_predictions(self.track(self.config['model_b']), entity_count)
        valid_a = load_predictions(self.track(self.config['valid_a']), entity_count, pred_a.model_name)
        valid_b = load_predictions(self.track(self.config['valid_b']), entity_count, pred_b.model_name)
        sk_map = None
        if self.config.get('valid_sk'):
            sk_map = StrikingnessTable.load(self.track(self.config['valid_sk'])).sk_map()

        cfg = EnsembleConfig(grid_step=_float(self.config, 'grid_step'), normalization=self.config['normalization'])
        metric = self.config['metric']
        eta, scan = search_eta(valid_a, valid_b, self.queries_for(dataset, 'valid'), full_index, metric, cfg,
                               sk_map, _float(self.config, 'b'), self.config['tie_policy'], self.jobs)
        fused = fuse_predictions(pred_a, pred_b, cfg.with_eta(eta))
        out = self.produced(self.config['out'])
        save_dense_predictions(fused, out)
        self.produced(str(out) + '.shape.json')
        save_grid_scan(self.produced(out.with_suffix('.grid.json')), eta, scan, cfg, metric)
        self.details.update({'eta': eta, 'metric': metric})
        return self.config['out']

    def report(self):
        out_dir = Path(self.config['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
        tables = [RankTable.load(self.track(path)) for path in self.config['ranks']]
        sk_map = None
        if self.config.get('sk'):
            sk_map = StrikingnessTable.load(self.track(self.config['sk'])).sk_map()
            tables = [table.join_sk(sk_map) for table in tables]
        elif tables[0].has_sk:
            sk_map = {row.key: row.sk for row in tables[0]}

        b = _float(self.config, 'b')
        width = _float(self.config, 'group_width')
        summary: Dict[str, Any] = {'models': [aggregate(table, b).to_dict() for table in tables]}
        primary = tables[0]

        if primary.has_sk:
            write_rows_csv(group_by_strikingness(primary, width), self.produced(out_dir / 'bins.csv'))
            b_values = settings.parse_float_list(self.config.get('b_values') or (0.01, 0.1, 1, 10, 100, 1000))
            write_rows_csv(wmrr_bias_sweep(primary, b_values), self.produced(out_dir / 'bias_sweep.csv'))
            significance = {}
            for k in (1, 3):
                result = bin_significance(primary, width, k)
                significance['hits@' + str(k)] = result.to_dict() if result else None
            summary['significance'] = significance
            with open(self.produced(out_dir / 'significance.json'), 'w', encoding='utf-8', newline='\n') as f:
                json.dump(significance, f, indent=2, sort_keys=True)
                f.write("\n")

        if len(tables) > 1:
            k = _optional_int(self.config, 'n_model_k') or 3
            rows = [{'n': n, 'k': k, 'n_model_hits': n_model_hits(tables, n, k)} for n in range(1, len(tables) + 1)]
            write_rows_csv(rows, self.produced(out_dir / 'n_model.csv'))

        if self.config.get('dataset'):
            dataset = self.load_dataset()
            queries = self.queries_for(dataset, self.config['split'])
            history = build_index(dataset, SPLITS)
            if sk_map is not None:
                if self.config.get('nof'):
                    overlaps = nof_values(queries, history, settings.parse_window(self.config['window']))
                    write_rows_csv(nof_split_hits(primary, overlaps, width), self.produced(out_dir / 'nof_split.csv'))
                write_rows_csv(novelty_profile(queries, sk_map, history), self.produced(out_dir / 'novelty.csv'))
                train_counts = relation_counts(build_index(dataset, ('train',)))
                write_rows_csv(relation_rarity_profile(queries, sk_map, train_counts, dataset.relation_label),
                               self.produced(out_dir / 'rarity.csv'))
                top_k = _optional_int(self.config, 'top_k') or 20
                write_rows_csv(outstanding_events(sk_map, queries, dataset, top_k),
                               self.produced(out_dir / 'outstanding.csv'))
            elif self.config.get('nof'):
                raise ConfigError("--nof needs strikingness (--sk or ranks with sk)")
        elif self.config.get('nof'):
            raise ConfigError("--nof needs --dataset")

        if self.config.get('measure_tables'):
            measures = {}
            for path in self.config['measure_tables']:
                table = StrikingnessTable.load(self.track(path))
                name = table.measure if table.measure not in measures else Path(path).stem
                measures[name] = table.sk_map()
            write_rows_csv(measure_volume_comparison(measures, width), self.produced(out_dir / 'measure_volume.csv'))

        with open(self.produced(out_dir / 'report.json'), 'w', encoding='utf-8', newline='\n') as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
        return self.config['out_dir']

    def sweep(self):
        dataset = self.load_dataset()
        split = self.config['split']
        queries = self.queries_for(dataset, split)
        base = RsmfConfig(window=settings.parse_window(self.config['window']),
                          lambda_decay=_float(self.config, 'lambda'),
                          alpha=settings.parse_alpha(self.config['alpha']),
                          history_scope=self.config['history_scope'])
        predictions = [load_predictions(self.track(path), dataset.entity_count)
                       for path in self.config.get('preds') or ()]
        filter_index = build_index(dataset, SPLITS) if predictions else None
        parameter = self.config['parameter']
        values = list(self.config['values'])

        volume_rows, metric_rows = strikingness_study(
            dataset, queries, parameter, values, base, _float(self.config, 'tau'),
            _int(self.config, 'min_body_support'), _float(self.config, 'group_width'), predictions, filter_index,
            _float(self.config, 'b'), self.config['tie_policy'], self.jobs, self.show_progress)

        out_dir = Path(self.config['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
        write_rows_csv(volume_rows, self.produced(out_dir / 'volumes.csv'))
        summary: Dict[str, Any] = {'parameter': parameter, 'values': [str(v) for v in values], 'split': split}
        if metric_rows:
            write_rows_csv(metric_rows, self.produced(out_dir / 'metrics.csv'))
            summary['model_order'] = model_order(metric_rows)
            summary['stable_order'] = ordering_is_stable(metric_rows)
        with open(self.produced(out_dir / 'sweep.json'), 'w', encoding='utf-8', newline='\n') as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
        self.details.update(summary)
        return self.config['out_dir']


HANDLERS = {
    'ingest': StrikebenchRunner.ingest,
    'mine-rules': StrikebenchRunner.mine_rules,
    'strikingness': StrikebenchRunner.strikingness,
    'predict-recurrency': StrikebenchRunner.predict_recurrency,
    'evaluate': StrikebenchRunner.evaluate,
    'ensemble': StrikebenchRunner.ensemble,
    'report': StrikebenchRunner.report,
    'sweep': StrikebenchRunner.sweep,
}


def print_report(report: Dict):
    print("\n" + "=" * 60)
    print("EVALUATION: " + str(report['model']) + " (" + str(report['count']) + " query directions)")
    print("=" * 60)
    for name, value in report['original'].items():
        print("  " + name.ljust(10) + ("n/a" if value is None else "%.2f" % (value * 100)))
    if report['sk_available']:
        for name, value in report['weighted'].items():
            delta = report['delta'].get(name.replace('w', '', 1))
            shown = "n/a" if value is None else "%.2f" % (value * 100)
            if delta is not None:
                shown += "  (delta %.1f%%)" % (delta * 100)
            print("  " + name.ljust(10) + shown)
    else:
        print("  SK metrics unavailable (no strikingness table)")
    print("=" * 60)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Execute one subcommand; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flags = {key: value for key, value in vars(args).items() if key not in ('command', 'config', 'quiet')}
        config = settings.resolve(flags, settings.load_config_file(args.config))
        runner = StrikebenchRunner(config, show_progress=not args.quiet)

        start_time = time.time()
        output = HANDLERS[args.command](runner)
        duration = time.time() - start_time

        manifest = RunManifest(args.command, config, runner.inputs, runner.outputs,
                               duration_seconds=round(duration, 3), details=runner.details)
        manifest.write(manifest_path(output))
        logger.performance(args.command.replace('-', '_') + "_seconds", duration, {'output': str(output)})
        logger.info("SUCCESS: " + args.command + " completed in " + str(duration)[:5] + " seconds")
        return 0
    except SystemExit as e:
        return int(e.code or 0)
    except StrikebenchError as e:
        logger.error("FAILED: " + str(e), {'error': type(e).__name__})
        print("Error: " + str(e), file=sys.stderr)
        return 1
    except OSError as e:
        logger.error("I/O ERROR: " + str(e), {'error': type(e).__name__})
        print("I/O error: " + str(e), file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
