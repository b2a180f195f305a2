#!/usr/bin/env python3
# -*- coding: utf-8
"""
Synthetic temporal KGs and brute-force reference computations
The generator plants repeating and chained events so that rules exist. The
oracles work on plain fact lists with nested loops and exhaustive search,
sharing no code with the indexed pipeline they are compared against.
"""

import math
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from tkg_dataset import Dataset, Quadruple, Vocabulary

RuleKey = Tuple[int, int]  # (head, body)


def generate_synthetic_tkg(seed: int = 0, entities: int = 30, relations: int = 4, timestamps: int = 30,
                           facts: int = 300, repeat_rate: float = 0.35, max_repeats: int = 5) -> Dataset:
    """Random raw (non-augmented) dataset split chronologically 60/20/20 by timestamp"""
    rng = np.random.default_rng(seed)
    chosen = set()
    repeats: Dict[Tuple[int, int], int] = {}
    while len(chosen) < facts:
        if chosen and rng.random() < repeat_rate:
            # follow an earlier pair with the same or another relation at a later step
            s, r, o, t = sorted(chosen)[int(rng.integers(len(chosen)))]
            if repeats.get((s, o), 0) >= max_repeats or t >= timestamps - 1:
                continue
            repeats[(s, o)] = repeats.get((s, o), 0) + 1
            relation = int(rng.integers(relations))
            fact = (s, relation, o, int(rng.integers(t + 1, timestamps)))
        else:
            s, o = (int(x) for x in rng.choice(entities, size=2, replace=False))
            fact = (s, int(rng.integers(relations)), o, int(rng.integers(timestamps)))
        chosen.add(fact)

    train_end = int(timestamps * 0.6)
    valid_end = int(timestamps * 0.8)
    ordered = sorted(chosen, key=lambda f: (f[3], f))
    train = tuple(Quadruple(*f) for f in ordered if f[3] < train_end)
    valid = tuple(Quadruple(*f) for f in ordered if train_end <= f[3] < valid_end)
    test = tuple(Quadruple(*f) for f in ordered if f[3] >= valid_end)
    # every split needs at least one fact
    if not valid:
        valid = (Quadruple(0, 0, 1, train_end),)
    if not test:
        test = (Quadruple(1, 0, 0, valid_end),)
    return Dataset(
        entity_vocab=Vocabulary({'e' + str(i): i for i in range(entities)}),
        relation_vocab=Vocabulary({'r' + str(i): i for i in range(relations)}),
        train=train, valid=valid, test=test,
        granularity='step', entity_count=entities, raw_relation_count=relations,
        raw_sizes={'train': len(train), 'valid': len(valid), 'test': len(test)},
    )


def dataset_from_facts(train: Sequence[Tuple[int, int, int, int]], valid: Sequence[Tuple[int, int, int, int]],
                       test: Sequence[Tuple[int, int, int, int]], entity_count: Optional[int] = None,
                       raw_relation_count: Optional[int] = None) -> Dataset:
    """Small hand-written raw dataset; counts default to max id + 1"""
    splits = {name: tuple(Quadruple(*f) for f in facts) for name, facts in
              (('train', train), ('valid', valid), ('test', test))}
    every = [f for facts in splits.values() for f in facts]
    return Dataset(
        entity_vocab=Vocabulary(), relation_vocab=Vocabulary(),
        train=splits['train'], valid=splits['valid'], test=splits['test'],
        granularity='step',
        entity_count=entity_count or max(max(f.subject, f.object) for f in every) + 1,
        raw_relation_count=raw_relation_count or max(f.relation for f in every) + 1,
        raw_sizes={name: len(facts) for name, facts in splits.items()},
    )


def with_inverses(facts: Sequence[Quadruple], raw_relation_count: int) -> List[Quadruple]:
    R = raw_relation_count
    return list(facts) + [Quadruple(f.object, f.relation + R, f.subject, f.timestamp) for f in facts]


def oracle_rules(train_facts: Sequence[Quadruple], tau: float, min_body_support: int) -> Dict[RuleKey, Tuple[float, int, int]]:
    """(head, body) -> (confidence, body_support, rule_support) by pairwise fact comparison"""
    facts = sorted(set(train_facts))
    relations = sorted({f.relation for f in facts})
    rules = {}
    for head in relations:
        for body in relations:
            body_facts = [f for f in facts if f.relation == body]
            supported = 0
            for b in body_facts:
                if any(h.relation == head and h.subject == b.subject and h.object == b.object
                       and h.timestamp > b.timestamp for h in facts):
                    supported += 1
            if supported == 0 or len(body_facts) < min_body_support:
                continue
            confidence = supported / len(body_facts)
            if confidence >= tau:
                rules[(head, body)] = (confidence, len(body_facts), supported)
    return rules


def oracle_chain_body_times(body_times: Sequence[int], head_times: Sequence[int], query_time: int) -> Tuple[int, ...]:
    """Longest valid chain, lexicographically earliest among the longest, by trying every subset"""
    bodies = sorted(b for b in body_times if b < query_time)
    heads = sorted(h for h in head_times if h < query_time)
    for n in range(len(bodies), 0, -1):
        for subset in combinations(bodies, n):
            if all(any(subset[i] < h <= subset[i + 1] for h in heads) for i in range(n - 1)):
                return subset
    return ()


def _window_start(query_time: int, window: Optional[int]) -> int:
    return 0 if window is None else query_time - window


def oracle_candidates(event: Quadruple, element: str, rules: Dict[RuleKey, Tuple[float, int, int]],
                      history: Sequence[Quadruple], window: Optional[int]) -> Set[int]:
    s, r, o, t = event
    start = _window_start(t, window)
    bodies_of_r = {body for (head, body) in rules if head == r}
    found = set()
    for f in history:
        if not start <= f.timestamp < t:
            continue
        if element == 'object' and f.subject == s and f.relation in bodies_of_r:
            found.add(f.object)
        elif element == 'subject' and f.object == o and f.relation in bodies_of_r:
            found.add(f.subject)
        elif element == 'relation' and f.subject == s and f.object == o:
            found.update(head for (head, body) in rules if body == f.relation)
    return found


def oracle_expectation_score(peer: Quadruple, rules: Dict[RuleKey, Tuple[float, int, int]],
                             history: Sequence[Quadruple], window: Optional[int], lambda_decay: float) -> float:
    s, r, o, t = peer
    start = _window_start(t, window)
    pair_facts = [f for f in history if f.subject == s and f.object == o and start <= f.timestamp < t]
    score = 0.0
    for (head, body), (confidence, _, _) in sorted(rules.items()):
        if head != r:
            continue
        body_times = [f.timestamp for f in pair_facts if f.relation == body]
        head_times = [f.timestamp for f in pair_facts if f.relation == head]
        for y in oracle_chain_body_times(body_times, head_times, t):
            score += confidence * math.exp(-lambda_decay * (t - y))
    return score


def oracle_strikingness(target_score: float, peer_scores: Sequence[float]) -> float:
    values = [target_score] + list(peer_scores)
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0:
        return 0.0
    normalized = [v / norm for v in values]
    target = normalized[0]
    return sum(v * (v - target) for v in normalized[1:] if v > target)


def oracle_element_strikingness(event: Quadruple, element: str, rules, history, window, lambda_decay) -> float:
    field_index = {'subject': 0, 'relation': 1, 'object': 2}[element]
    own = event[field_index]
    candidates = sorted(oracle_candidates(event, element, rules, history, window) - {own})
    target_score = oracle_expectation_score(event, rules, history, window, lambda_decay)
    peer_scores = []
    for value in candidates:
        peer = list(event)
        peer[field_index] = value
        peer_scores.append(oracle_expectation_score(Quadruple(*peer), rules, history, window, lambda_decay))
    return oracle_strikingness(target_score, peer_scores)


def oracle_event_strikingness(event: Quadruple, rules, history, window, lambda_decay,
                              alpha: Tuple[float, float, float]) -> float:
    return (alpha[0] * oracle_element_strikingness(event, 'subject', rules, history, window, lambda_decay)
            + alpha[1] * oracle_element_strikingness(event, 'object', rules, history, window, lambda_decay)
            + alpha[2] * oracle_element_strikingness(event, 'relation', rules, history, window, lambda_decay))
