#!/usr/bin/env python3
# -*- coding: utf-8
"""
Length-1 temporal rule miner
Mines rules (E1, r_h, E2, T2) <- (E1, r_b, E2, T1), T1 < T2 from the training
split. A body grounding is one body fact occurrence; it supports the rule when
the same entity pair carries the head relation at some strictly later time.
"""

import json
from bisect import bisect_left
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from errors import ConfigError, DatasetValidationError, ParseError
from logging_system import get_logger
from temporal_index import TemporalIndex

logger = get_logger("RuleMiner")


@dataclass(frozen=True)
class TemporalRule:
    head: int
    body: int
    confidence: float
    body_support: int
    rule_support: int

    def to_json(self) -> str:
        return json.dumps({
            'head': self.head,
            'body': self.body,
            'conf': self.confidence,
            'body_support': self.body_support,
            'rule_support': self.rule_support,
        }, sort_keys=True)


class RuleSet:
    """Rules grouped by head relation, each group sorted by descending confidence"""

    def __init__(self, rules: List[TemporalRule], min_confidence: float, min_body_support: int):
        grouped: Dict[int, List[TemporalRule]] = defaultdict(list)
        for rule in rules:
            grouped[rule.head].append(rule)
        self.by_head: Dict[int, Tuple[TemporalRule, ...]] = {
            head: tuple(sorted(group, key=lambda rule: (-rule.confidence, rule.body)))
            for head, group in sorted(grouped.items())
        }
        heads_by_body: Dict[int, set] = defaultdict(set)
        for rule in rules:
            heads_by_body[rule.body].add(rule.head)
        self._heads_by_body = {body: tuple(sorted(heads)) for body, heads in heads_by_body.items()}
        self.min_confidence = min_confidence
        self.min_body_support = min_body_support

    def rules_for(self, head: int) -> Tuple[TemporalRule, ...]:
        return self.by_head.get(head, ())

    def heads_for_body(self, body: int) -> Tuple[int, ...]:
        return self._heads_by_body.get(body, ())

    def bodies(self) -> Tuple[int, ...]:
        return tuple(sorted(self._heads_by_body))

    def __iter__(self) -> Iterator[TemporalRule]:
        for group in self.by_head.values():
            yield from group

    def __len__(self) -> int:
        return sum(len(group) for group in self.by_head.values())


def _validate(tau: float, min_body_support: int, sample_cap: Optional[int]):
    if not 0.0 <= tau <= 1.0:
        raise ConfigError("tau must lie in [0, 1], got " + str(tau))
    if min_body_support < 0:
        raise ConfigError("min_body_support must be >= 0, got " + str(min_body_support))
    if sample_cap is not None and sample_cap < 1:
        raise ConfigError("sample_cap must be >= 1 when set, got " + str(sample_cap))


class RuleMiner:
    """Counts body and rule support for every co-occurring (head, body) pair"""

    def __init__(self, train_index: TemporalIndex, sample_cap: Optional[int] = None, seed: int = 42):
        if train_index.splits != frozenset({'train'}):
            raise DatasetValidationError("rules must be mined from an index over the train split only")
        self.index = train_index
        self.sample_cap = sample_cap
        self.seed = seed

        # relation -> body groundings (s, o, t), relation -> its (s, o) pairs
        self.body_facts: Dict[int, List[Tuple[int, int, int]]] = defaultdict(list)
        self.pairs_by_relation: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
        # (s, o) -> {relation: times}
        self.pair_relations: Dict[Tuple[int, int], Dict[int, Tuple[int, ...]]] = defaultdict(dict)
        for (s, r, o), stamps in sorted(train_index.by_pair_full.items()):
            self.pair_relations[(s, o)][r] = stamps
            self.pairs_by_relation[r].append((s, o))
            for t in stamps:
                self.body_facts[r].append((s, o, t))

    def body_support(self, body: int) -> int:
        return len(self.body_facts.get(body, ()))

    def exact_rule_support(self, head: int) -> Dict[int, int]:
        """body -> number of body occurrences followed by a later head occurrence"""
        support: Dict[int, int] = defaultdict(int)
        for pair in self.pairs_by_relation.get(head, ()):
            relations = self.pair_relations[pair]
            last_head = relations[head][-1]
            for body, stamps in relations.items():
                support[body] += bisect_left(stamps, last_head)
        return support

    def sampled_support(self, head: int, body: int) -> Tuple[int, int]:
        """(body_support, rule_support) over at most sample_cap uniformly drawn body groundings"""
        facts = self.body_facts[body]
        rng = np.random.default_rng([self.seed, head, body])
        chosen = np.sort(rng.choice(len(facts), size=self.sample_cap, replace=False))
        supported = 0
        for position in chosen:
            s, o, t = facts[int(position)]
            head_times = self.index.times(s, head, o)
            if head_times and head_times[-1] > t:
                supported += 1
        return self.sample_cap, supported

    def mine_head(self, head: int, tau: float, min_body_support: int) -> List[TemporalRule]:
        rules = []
        for body, rule_support in sorted(self.exact_rule_support(head).items()):
            if rule_support == 0:
                continue
            body_support = self.body_support(body)
            if self.sample_cap is not None and body_support > self.sample_cap:
                body_support, rule_support = self.sampled_support(head, body)
                if rule_support == 0:
                    continue
            if body_support < min_body_support:
                continue
            confidence = rule_support / body_support
            if confidence < tau:
                continue
            rules.append(TemporalRule(head, body, confidence, body_support, rule_support))
        return rules


def mine_rules(train_index: TemporalIndex, tau: float = 0.01, min_body_support: int = 2,
               sample_cap: Optional[int] = None, seed: int = 42, jobs: int = 1) -> RuleSet:
    """Mine length-1 rules from a train-only index; parallel over head relations"""
    _validate(tau, min_body_support, sample_cap)
    miner = RuleMiner(train_index, sample_cap=sample_cap, seed=seed)
    heads = sorted(miner.pairs_by_relation)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_head = list(pool.map(lambda head: miner.mine_head(head, tau, min_body_support), heads))
    else:
        per_head = [miner.mine_head(head, tau, min_body_support) for head in heads]

    rules = [rule for group in per_head for rule in group]
    logger.info("Mined " + str(len(rules)) + " rules over " + str(len(heads)) + " head relations",
                {'tau': tau, 'min_body_support': min_body_support, 'sample_cap': sample_cap, 'rules': len(rules)})
    return RuleSet(rules, tau, min_body_support)


def save_rules(rules: RuleSet, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for rule in rules:
            f.write(rule.to_json() + "\n")


def load_rules(path: Union[str, Path], min_confidence: Optional[float] = None,
               min_body_support: Optional[int] = None) -> RuleSet:
    """Read a rules JSON Lines file; optional thresholds filter further"""
    rules = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                rule = TemporalRule(int(row['head']), int(row['body']), float(row['conf']),
                                    int(row['body_support']), int(row['rule_support']))
            except (ValueError, KeyError, TypeError) as e:
                raise ParseError("bad rule record: " + str(e), str(path), line_number)
            if min_confidence is not None and rule.confidence < min_confidence:
                continue
            if min_body_support is not None and rule.body_support < min_body_support:
                continue
            rules.append(rule)
    tau = min_confidence if min_confidence is not None else min((r.confidence for r in rules), default=0.0)
    support = min_body_support if min_body_support is not None else min((r.body_support for r in rules), default=0)
    return RuleSet(rules, tau, support)
