#!/usr/bin/env python3
# -*- coding: utf-8
"""
Temporal knowledge graph dataset model
Reads ICEWS/GDELT style quadruple directories (train/valid/test + optional
entity2id/relation2id vocabularies), validates the chronological split,
normalizes timestamps to contiguous integer steps and adds inverse events.
"""

import math
import os
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple, Union

from errors import DatasetValidationError, ParseError
from logging_system import get_logger

logger = get_logger("TKGDataset")

SPLITS = ('train', 'valid', 'test')
DIRECTIONS = ('tail', 'head')


class Quadruple(NamedTuple):
    subject: int
    relation: int
    object: int
    timestamp: int


class Query(NamedTuple):
    """One link-prediction query in directional form: (subject, relation, ?, timestamp)"""
    query_index: int
    direction: str
    subject: int
    relation: int
    answer: int
    timestamp: int

    @property
    def key(self) -> Tuple[int, str]:
        return (self.query_index, self.direction)

    def event(self) -> Quadruple:
        return Quadruple(self.subject, self.relation, self.answer, self.timestamp)


class Vocabulary:
    """Bidirectional label <-> id map; unknown ids fall back to their decimal form"""

    def __init__(self, label_to_id: Optional[Dict[str, int]] = None):
        self.label_to_id: Dict[str, int] = dict(label_to_id or {})
        self.id_to_label: Dict[int, str] = {i: label for label, i in self.label_to_id.items()}
        if len(self.id_to_label) != len(self.label_to_id):
            raise DatasetValidationError("vocabulary maps two labels to the same id")

    def __len__(self) -> int:
        return len(self.label_to_id)

    def __bool__(self) -> bool:
        return bool(self.label_to_id)

    def label(self, item_id: int) -> str:
        return self.id_to_label.get(item_id, str(item_id))

    def lookup(self, label: str) -> int:
        return self.label_to_id[label]


@dataclass(frozen=True)
class FormatSpec:
    train_file: str = 'train.txt'
    valid_file: str = 'valid.txt'
    test_file: str = 'test.txt'
    entity_vocab_file: str = 'entity2id.txt'
    relation_vocab_file: str = 'relation2id.txt'
    # 'auto' = gcd of all raw timestamps
    time_divisor: Union[int, str] = 'auto'
    granularity: Optional[str] = None

    def split_file(self, split: str) -> str:
        return {'train': self.train_file, 'valid': self.valid_file, 'test': self.test_file}[split]


@dataclass(frozen=True)
class Dataset:
    entity_vocab: Vocabulary
    relation_vocab: Vocabulary
    train: Tuple[Quadruple, ...]
    valid: Tuple[Quadruple, ...]
    test: Tuple[Quadruple, ...]
    granularity: str
    entity_count: int
    raw_relation_count: int
    time_divisor: int = 1
    augmented: bool = False
    raw_sizes: Dict[str, int] = field(default_factory=dict)

    @property
    def relation_count(self) -> int:
        return self.raw_relation_count * 2 if self.augmented else self.raw_relation_count

    def split(self, name: str) -> Tuple[Quadruple, ...]:
        if name not in SPLITS:
            raise DatasetValidationError("unknown split name: " + repr(name))
        return getattr(self, name)

    def raw_split(self, name: str) -> Tuple[Quadruple, ...]:
        """The split without inverse companions (inverses are appended after the raw facts)"""
        facts = self.split(name)
        if not self.augmented:
            return facts
        return facts[:self.raw_sizes[name]]

    def inverse_relation(self, relation: int) -> int:
        R = self.raw_relation_count
        return relation + R if relation < R else relation - R

    def relation_label(self, relation: int) -> str:
        R = self.raw_relation_count
        if relation >= R:
            return "inv_" + self.relation_vocab.label(relation - R)
        return self.relation_vocab.label(relation)

    def summary(self) -> Dict:
        return {
            'entities': self.entity_count,
            'relations': self.relation_count,
            'raw_relations': self.raw_relation_count,
            'train': len(self.train),
            'valid': len(self.valid),
            'test': len(self.test),
            'granularity': self.granularity,
            'time_divisor': self.time_divisor,
            'augmented': self.augmented,
        }


def _read_vocabulary(path: Path) -> Vocabulary:
    if not path.exists():
        return Vocabulary()
    mapping: Dict[str, int] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            line = line.rstrip('\n').rstrip('\r')
            if not line.strip() or line.startswith('#'):
                continue
            # labels may contain spaces, the id is the last tab-separated column
            label, sep, raw_id = line.rpartition('\t')
            if not sep:
                raise ParseError("expected 'label<TAB>id'", str(path), line_number)
            try:
                mapping[label] = int(raw_id)
            except ValueError:
                raise ParseError("non-integer id " + repr(raw_id), str(path), line_number)
    return Vocabulary(mapping)


def _read_raw_quadruples(path: Path) -> List[Tuple[Tuple[int, int, int, int], int]]:
    """Parse one split file into (raw quadruple, line number) pairs"""
    rows = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            columns = stripped.split('\t')
            if len(columns) < 4:
                columns = stripped.split()
            if len(columns) < 4:
                raise ParseError("expected 4 columns, found " + str(len(columns)), str(path), line_number)
            try:
                values = tuple(int(c) for c in columns[:4])
            except ValueError:
                raise ParseError("non-integer id in " + repr(stripped), str(path), line_number)
            if min(values) < 0:
                raise ParseError("negative id in " + repr(stripped), str(path), line_number)
            rows.append((values, line_number))
    return rows


def load_dataset(dir_path: Union[str, Path], format_spec: Optional[FormatSpec] = None) -> Dataset:
    """Load and validate a quadruple dataset directory"""
    spec = format_spec or FormatSpec()
    root = Path(dir_path)
    if not root.is_dir():
        raise FileNotFoundError("dataset directory not found: " + str(root))

    entity_vocab = _read_vocabulary(root / spec.entity_vocab_file)
    relation_vocab = _read_vocabulary(root / spec.relation_vocab_file)

    raw: Dict[str, List[Tuple[Tuple[int, int, int, int], int]]] = {}
    for split in SPLITS:
        path = root / spec.split_file(split)
        if not path.exists():
            raise FileNotFoundError("missing split file: " + str(path))
        raw[split] = _read_raw_quadruples(path)
        if not raw[split]:
            raise DatasetValidationError("empty split: " + split)

    divisor = _resolve_divisor(spec.time_divisor, raw)

    splits: Dict[str, Tuple[Quadruple, ...]] = {}
    for split in SPLITS:
        path = root / spec.split_file(split)
        facts = []
        for (s, r, o, ts), line_number in raw[split]:
            if ts % divisor != 0:
                raise DatasetValidationError(
                    str(path) + ":" + str(line_number) + ": timestamp " + str(ts)
                    + " is not a multiple of the time divisor " + str(divisor))
            facts.append(Quadruple(s, r, o, ts // divisor))
        unique = tuple(dict.fromkeys(facts))
        dropped = len(facts) - len(unique)
        if dropped:
            logger.warning("Dropped " + str(dropped) + " duplicate quadruples from " + split,
                           {'split': split, 'dropped': dropped})
        splits[split] = unique

    _check_chronology(splits)

    all_facts = splits['train'] + splits['valid'] + splits['test']
    max_entity = max(max(f.subject, f.object) for f in all_facts)
    max_relation = max(f.relation for f in all_facts)
    entity_count = len(entity_vocab) if entity_vocab else max_entity + 1
    relation_count = max_relation + 1 if not relation_vocab else len(relation_vocab)
    if max_entity >= entity_count:
        raise DatasetValidationError("entity id " + str(max_entity) + " outside vocabulary of size " + str(entity_count))
    if max_relation >= relation_count:
        raise DatasetValidationError("relation id " + str(max_relation) + " outside vocabulary of size " + str(relation_count))

    dataset = Dataset(
        entity_vocab=entity_vocab,
        relation_vocab=relation_vocab,
        train=splits['train'],
        valid=splits['valid'],
        test=splits['test'],
        granularity=spec.granularity or ("raw/" + str(divisor)),
        entity_count=entity_count,
        raw_relation_count=relation_count,
        time_divisor=divisor,
        raw_sizes={split: len(splits[split]) for split in SPLITS},
    )
    logger.info("Loaded dataset " + str(root), dataset.summary())
    return dataset


def _resolve_divisor(time_divisor, raw) -> int:
    if time_divisor in (None, 'auto'):
        stamps = {values[3] for rows in raw.values() for values, _ in rows}
        divisor = reduce(math.gcd, stamps, 0) or 1
        logger.info("Time divisor resolved to " + str(divisor) + " (gcd of raw timestamps)",
                    {'time_divisor': divisor, 'distinct_timestamps': len(stamps)})
        return divisor
    try:
        divisor = int(time_divisor)
    except (TypeError, ValueError):
        raise DatasetValidationError("time divisor must be 'auto' or a positive integer, got " + repr(time_divisor))
    if divisor < 1:
        raise DatasetValidationError("time divisor must be positive, got " + str(divisor))
    return divisor


def _check_chronology(splits: Dict[str, Tuple[Quadruple, ...]]):
    for earlier, later in (('train', 'valid'), ('valid', 'test')):
        latest = max(f.timestamp for f in splits[earlier])
        earliest = min(f.timestamp for f in splits[later])
        if latest > earliest:
            raise DatasetValidationError(
                "split chronology violated: max(" + earlier + ")=" + str(latest)
                + " > min(" + later + ")=" + str(earliest))


def augment_inverse(dataset: Dataset) -> Dataset:
    """Add (o, r+R, s, t) for every (s, r, o, t); relation count doubles"""
    if dataset.augmented:
        raise DatasetValidationError("dataset is already augmented with inverse relations")
    R = dataset.raw_relation_count
    augmented = {}
    for split in SPLITS:
        facts = dataset.split(split)
        inverses = tuple(Quadruple(f.object, f.relation + R, f.subject, f.timestamp) for f in facts)
        augmented[split] = facts + inverses
    return replace(dataset, train=augmented['train'], valid=augmented['valid'], test=augmented['test'],
                   augmented=True, raw_sizes={split: len(dataset.split(split)) for split in SPLITS})


def inverse_fact(fact: Quadruple, raw_relation_count: int) -> Quadruple:
    R = raw_relation_count
    relation = fact.relation + R if fact.relation < R else fact.relation - R
    return Quadruple(fact.object, relation, fact.subject, fact.timestamp)


def save_dataset(dataset: Dataset, dir_path: Union[str, Path], format_spec: Optional[FormatSpec] = None):
    """Write the raw (non-inverse) facts with step timestamps plus vocabularies"""
    spec = format_spec or FormatSpec()
    root = Path(dir_path)
    os.makedirs(root, exist_ok=True)
    for split in SPLITS:
        with open(root / spec.split_file(split), 'w', encoding='utf-8', newline='\n') as f:
            for fact in dataset.raw_split(split):
                f.write("%d\t%d\t%d\t%d\n" % fact)
    for vocab, name, count in ((dataset.entity_vocab, spec.entity_vocab_file, dataset.entity_count),
                               (dataset.relation_vocab, spec.relation_vocab_file, dataset.raw_relation_count)):
        with open(root / name, 'w', encoding='utf-8', newline='\n') as f:
            for item_id in range(count):
                f.write(vocab.label(item_id) + "\t" + str(item_id) + "\n")


def directional_queries(facts: Iterable[Quadruple], raw_relation_count: int) -> List[Query]:
    """Tail query (s, r, ?, t) and head query posed as the inverse event (o, r+R, ?, t), per fact"""
    queries = []
    for index, fact in enumerate(facts):
        queries.append(Query(index, 'tail', fact.subject, fact.relation, fact.object, fact.timestamp))
        queries.append(Query(index, 'head', fact.object, fact.relation + raw_relation_count,
                             fact.subject, fact.timestamp))
    return queries
