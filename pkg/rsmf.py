#!/usr/bin/env python3
# -*- coding: utf-8
"""
Rule-based strikingness measure
For a target event, finds peer events that replace one element (subject,
object or relation) and are supported by a mined rule in the recent history,
scores every peer by rule confidence with exponential time decay over its
grounding chains, L2-normalizes the scores and measures how far the peers
exceed the target. The three element scores are combined with weights alpha.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from tqdm import tqdm

from errors import ConfigError, ParseError
from logging_system import get_logger
from rule_miner import RuleSet, TemporalRule
from temporal_index import TemporalIndex, build_index
from tkg_dataset import DIRECTIONS, SPLITS, Dataset, Quadruple, Query

logger = get_logger("RSMF")

ELEMENTS = ('subject', 'object', 'relation')
HISTORY_SCOPES = ('all-before-t', 'train-only')
MEASURES = ('rsmf', 'freq_inv', 'temp_inv')
TABLE_COLUMNS = ('query_index', 'direction', 'sk_s', 'sk_o', 'sk_r', 'sk')


@dataclass(frozen=True)
class RsmfConfig:
    window: Optional[int] = None
    lambda_decay: float = 0.1
    alpha: Tuple[float, float, float] = (0.4, 0.4, 0.2)
    history_scope: str = 'all-before-t'

    def __post_init__(self):
        if not self.lambda_decay > 0:
            raise ConfigError("lambda must be > 0, got " + str(self.lambda_decay))
        if len(self.alpha) != 3:
            raise ConfigError("alpha needs three weights (subject, object, relation)")
        if any(a < 0 or a > 1 for a in self.alpha):
            raise ConfigError("alpha weights must lie in [0, 1], got " + str(self.alpha))
        if abs(sum(self.alpha) - 1.0) > 1e-12:
            raise ConfigError("alpha weights must sum to 1, got " + str(sum(self.alpha)))
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be >= 1 or full history, got " + str(self.window))
        if self.history_scope not in HISTORY_SCOPES:
            raise ConfigError("history scope must be one of " + ", ".join(HISTORY_SCOPES))

    def header(self) -> Dict:
        return {
            'window': 'full' if self.window is None else self.window,
            'lambda': self.lambda_decay,
            'alpha': list(self.alpha),
            'history_scope': self.history_scope,
        }


@dataclass(frozen=True)
class GroundingChain:
    rule: TemporalRule
    body_times: Tuple[int, ...]
    head_times: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.body_times)


@dataclass
class StrikingnessRecord:
    query_index: int
    direction: str
    sk_s: Optional[float]
    sk_o: Optional[float]
    sk_r: Optional[float]
    sk: float
    subject: Optional[int] = None
    relation: Optional[int] = None
    timestamp: Optional[int] = None
    candidate_counts: Dict[str, int] = field(default_factory=dict)
    target_raw_scores: Dict[str, float] = field(default_factory=dict)

    @property
    def key(self) -> Tuple[int, str]:
        return (self.query_index, self.direction)


def history_for_scope(dataset: Dataset, history_scope: str) -> TemporalIndex:
    """Grounding history: every split (bounded by t at lookup) or train only"""
    if history_scope == 'all-before-t':
        return build_index(dataset, SPLITS)
    if history_scope == 'train-only':
        return build_index(dataset, ('train',))
    raise ConfigError("unknown history scope: " + repr(history_scope))


def _element_value(event: Quadruple, element: str) -> int:
    if element == 'subject':
        return event.subject
    if element == 'object':
        return event.object
    if element == 'relation':
        return event.relation
    raise ConfigError("unknown element: " + repr(element))


def _replace_element(event: Quadruple, element: str, value: int) -> Quadruple:
    if element == 'subject':
        return event._replace(subject=value)
    if element == 'object':
        return event._replace(object=value)
    return event._replace(relation=value)


def peer_candidates(event: Quadruple, element: str, rules: RuleSet, history: TemporalIndex,
                    cfg: RsmfConfig) -> Set[int]:
    """Replacement ids for one element whose peer event has a grounded rule body in the window"""
    s, r, o, t = event
    start = history.window_start(t, cfg.window)
    candidates: Set[int] = set()

    if element == 'object':
        for rule in rules.rules_for(r):
            candidates.update(obj for _, obj in history.objects_in_window(s, rule.body, start, t))
    elif element == 'subject':
        # (s', r_b, o) is stored as its inverse (o, inv(r_b), s')
        for rule in rules.rules_for(r):
            inverse_body = history.inverse_relation(rule.body)
            candidates.update(subj for _, subj in history.objects_in_window(o, inverse_body, start, t))
    elif element == 'relation':
        for body in rules.bodies():
            if history.times_in_window(s, body, o, start, t):
                candidates.update(rules.heads_for_body(body))
    else:
        raise ConfigError("unknown element: " + repr(element))
    return candidates


def build_grounding_chains(peer: Quadruple, rule: TemporalRule, history: TemporalIndex,
                           cfg: RsmfConfig, query_time: int) -> GroundingChain:
    """Greedy earliest-match chain of body/head occurrences ending in a hypothetical head at query_time

    Taking the earliest body, then the earliest head after it, then the earliest
    body at or after that head yields the longest valid chain and, among those,
    the one with the earliest body times.
    """
    s, _, o, _ = peer
    start = history.window_start(query_time, cfg.window)
    bodies = history.times_in_window(s, rule.body, o, start, query_time)
    heads = history.times_in_window(s, rule.head, o, start, query_time)

    body_times: List[int] = []
    head_times: List[int] = []
    b = h = 0
    while b < len(bodies):
        body_time = bodies[b]
        while h < len(heads) and heads[h] <= body_time:
            h += 1
        body_times.append(body_time)
        if h == len(heads):
            break
        head_times.append(heads[h])
        while b < len(bodies) and bodies[b] < heads[h]:
            b += 1

    if body_times:
        # the last entry always pairs with the query time
        head_times = head_times[:len(body_times) - 1] + [query_time]
    return GroundingChain(rule, tuple(body_times), tuple(head_times))


def expectation_score(peer: Quadruple, rules: RuleSet, history: TemporalIndex, cfg: RsmfConfig,
                      query_time: int) -> float:
    score = 0.0
    for rule in rules.rules_for(peer.relation):
        chain = build_grounding_chains(peer, rule, history, cfg, query_time)
        for body_time in chain.body_times:
            score += rule.confidence * math.exp(-cfg.lambda_decay * (query_time - body_time))
    return score


def strikingness_from_scores(target_score: float, peer_scores: Sequence[float]) -> float:
    """Sum over peers that outscore the target of v' * (v' - v) on the L2-normalized vector"""
    vector = np.asarray([target_score, *peer_scores], dtype=float)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        return 0.0
    vector = vector / norm
    target = vector[0]
    peers = vector[1:]
    above = peers[peers > target]
    return float(np.sum(above * (above - target)))


def element_strikingness(target_event: Quadruple, element: str, rules: RuleSet, history: TemporalIndex,
                         cfg: RsmfConfig, query_time: Optional[int] = None) -> Tuple[float, Dict]:
    query_time = target_event.timestamp if query_time is None else query_time
    target_value = _element_value(target_event, element)
    candidates = sorted(peer_candidates(target_event, element, rules, history, cfg) - {target_value})

    target_score = expectation_score(target_event, rules, history, cfg, query_time)
    peer_scores = [
        expectation_score(_replace_element(target_event, element, value), rules, history, cfg, query_time)
        for value in candidates
    ]
    sk = strikingness_from_scores(target_score, peer_scores)
    return sk, {'candidates': len(candidates), 'target_score': target_score}


def event_strikingness(target_event: Quadruple, rules: RuleSet, history: TemporalIndex, cfg: RsmfConfig,
                       query_index: int = -1, direction: str = 'tail') -> StrikingnessRecord:
    components = {}
    counts = {}
    raw_scores = {}
    for element in ELEMENTS:
        sk, diagnostics = element_strikingness(target_event, element, rules, history, cfg)
        components[element] = sk
        counts[element] = diagnostics['candidates']
        raw_scores[element] = diagnostics['target_score']

    alpha_s, alpha_o, alpha_r = cfg.alpha
    sk = alpha_s * components['subject'] + alpha_o * components['object'] + alpha_r * components['relation']
    return StrikingnessRecord(
        query_index=query_index,
        direction=direction,
        sk_s=components['subject'],
        sk_o=components['object'],
        sk_r=components['relation'],
        sk=sk,
        subject=target_event.subject,
        relation=target_event.relation,
        timestamp=target_event.timestamp,
        candidate_counts=counts,
        target_raw_scores=raw_scores,
    )


class StrikingnessTable:
    """Per query-direction strikingness, ordered by query index then tail/head"""

    def __init__(self, records: Iterable[StrikingnessRecord], header: Optional[Dict] = None):
        ordered = sorted(records, key=lambda rec: (rec.query_index, DIRECTIONS.index(rec.direction)))
        self.records: Dict[Tuple[int, str], StrikingnessRecord] = {}
        for record in ordered:
            if record.key in self.records:
                raise ParseError("duplicate strikingness record for " + str(record.key))
            self.records[record.key] = record
        self.header: Dict = dict(header or {})

    @property
    def measure(self) -> str:
        return self.header.get('measure', 'rsmf')

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def __contains__(self, key) -> bool:
        return key in self.records

    def sk(self, query_index: int, direction: str) -> float:
        return self.records[(query_index, direction)].sk

    def sk_map(self) -> Dict[Tuple[int, str], float]:
        return {key: record.sk for key, record in self.records.items()}

    def save(self, path: Union[str, Path]):
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write("#" + json.dumps(self.header, sort_keys=True) + "\n")
            f.write("\t".join(TABLE_COLUMNS) + "\n")
            for record in self.records.values():
                f.write("\t".join([
                    str(record.query_index),
                    record.direction,
                    _format_value(record.sk_s),
                    _format_value(record.sk_o),
                    _format_value(record.sk_r),
                    _format_value(record.sk),
                ]) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'StrikingnessTable':
        header: Dict = {}
        records = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_number, line in enumerate(f, 1):
                line = line.rstrip('\n')
                if not line:
                    continue
                if line.startswith('#'):
                    try:
                        header = json.loads(line[1:])
                    except json.JSONDecodeError as e:
                        raise ParseError("bad table header: " + str(e), str(path), line_number)
                    continue
                columns = line.split('\t')
                if columns[0] == 'query_index':
                    continue
                if len(columns) != len(TABLE_COLUMNS):
                    raise ParseError("expected " + str(len(TABLE_COLUMNS)) + " columns", str(path), line_number)
                if columns[1] not in DIRECTIONS:
                    raise ParseError("bad direction " + repr(columns[1]), str(path), line_number)
                try:
                    records.append(StrikingnessRecord(
                        query_index=int(columns[0]),
                        direction=columns[1],
                        sk_s=_parse_value(columns[2]),
                        sk_o=_parse_value(columns[3]),
                        sk_r=_parse_value(columns[4]),
                        sk=float(columns[5]),
                    ))
                except ValueError as e:
                    raise ParseError("bad strikingness value: " + str(e), str(path), line_number)
        return cls(records, header)


def _format_value(value: Optional[float]) -> str:
    return '-' if value is None else repr(float(value))


def _parse_value(raw: str) -> Optional[float]:
    return None if raw == '-' else float(raw)


# -- batch scoring -----------------------------------------------------------

_WORKER_STATE: Dict = {}


def _init_worker(rules: RuleSet, history: TemporalIndex, cfg: RsmfConfig):
    _WORKER_STATE['rules'] = rules
    _WORKER_STATE['history'] = history
    _WORKER_STATE['cfg'] = cfg


def _score_query(query: Query) -> StrikingnessRecord:
    return event_strikingness(query.event(), _WORKER_STATE['rules'], _WORKER_STATE['history'],
                              _WORKER_STATE['cfg'], query.query_index, query.direction)


def batch_strikingness(queries: Sequence[Query], rules: RuleSet, history: TemporalIndex, cfg: RsmfConfig,
                       parallelism: int = 1, show_progress: bool = False,
                       extra_header: Optional[Dict] = None) -> StrikingnessTable:
    """One record per query-direction; identical output for any parallelism"""
    header = {'measure': 'rsmf', **cfg.header(), 'tau': rules.min_confidence}
    if extra_header:
        header.update(extra_header)

    if parallelism and parallelism > 1 and len(queries) > 1:
        chunksize = max(1, len(queries) // (parallelism * 8))
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                 initargs=(rules, history, cfg)) as pool:
            records = list(tqdm(pool.map(_score_query, queries, chunksize=chunksize),
                                total=len(queries), desc="strikingness", disable=not show_progress))
    else:
        records = [
            event_strikingness(query.event(), rules, history, cfg, query.query_index, query.direction)
            for query in tqdm(queries, desc="strikingness", disable=not show_progress)
        ]

    table = StrikingnessTable(records, header)
    logger.info("Scored " + str(len(table)) + " query directions", {'records': len(table), **cfg.header()})
    return table
