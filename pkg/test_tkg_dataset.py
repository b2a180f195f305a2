#!/usr/bin/env python3
# -*- coding: utf-8
"""
Tests for dataset loading, inverse augmentation and the temporal index
"""

import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DatasetValidationError, ParseError
from temporal_index import build_index
from tkg_dataset import (SPLITS, FormatSpec, Quadruple, augment_inverse, directional_queries, load_dataset,
                         save_dataset)
from synthetic_data import dataset_from_facts, generate_synthetic_tkg


def write_split(path, rows):
    path.write_text("".join("\t".join(str(v) for v in row) + "\n" for row in rows), encoding='utf-8')


@pytest.fixture
def dataset_dir(tmp_path):
    write_split(tmp_path / 'train.txt', [(0, 0, 1, 0), (1, 1, 2, 24), (0, 0, 1, 24), (0, 0, 1, 24)])
    write_split(tmp_path / 'valid.txt', [(2, 0, 0, 48)])
    write_split(tmp_path / 'test.txt', [(0, 1, 2, 72), (1, 0, 0, 72)])
    (tmp_path / 'entity2id.txt').write_text("Alpha\t0\nBeta\t1\nGamma Delta\t2\n", encoding='utf-8')
    (tmp_path / 'relation2id.txt').write_text("meet\t0\ncriticize\t1\n", encoding='utf-8')
    return tmp_path


def test_load_normalizes_timestamps_and_dedupes(dataset_dir):
    dataset = load_dataset(dataset_dir)
    assert dataset.time_divisor == 24
    assert dataset.train == (Quadruple(0, 0, 1, 0), Quadruple(1, 1, 2, 1), Quadruple(0, 0, 1, 1))
    assert dataset.test[0] == Quadruple(0, 1, 2, 3)
    assert dataset.entity_count == 3
    assert dataset.raw_relation_count == 2
    assert dataset.entity_vocab.label(2) == "Gamma Delta"


def test_explicit_divisor_must_divide_timestamps(dataset_dir):
    with pytest.raises(DatasetValidationError):
        load_dataset(dataset_dir, FormatSpec(time_divisor=7))


def test_parse_error_carries_line_number(dataset_dir):
    (dataset_dir / 'valid.txt').write_text("2\t0\t0\t48\n2\tx\t0\t48\n", encoding='utf-8')
    with pytest.raises(ParseError) as excinfo:
        load_dataset(dataset_dir)
    assert excinfo.value.line_number == 2
    assert "valid.txt:2" in str(excinfo.value)


def test_chronology_violation_rejected(dataset_dir):
    write_split(dataset_dir / 'valid.txt', [(2, 0, 0, 0)])
    with pytest.raises(DatasetValidationError, match="chronology"):
        load_dataset(dataset_dir)


def test_empty_split_and_missing_directory(dataset_dir, tmp_path):
    (dataset_dir / 'test.txt').write_text("", encoding='utf-8')
    with pytest.raises(DatasetValidationError, match="empty split"):
        load_dataset(dataset_dir)
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / 'missing')


def test_augment_inverse_doubles_relations(dataset_dir):
    dataset = augment_inverse(load_dataset(dataset_dir))
    assert dataset.relation_count == 4
    assert Quadruple(1, 2, 0, 0) in dataset.train
    assert dataset.raw_split('train') == dataset.train[:3]
    assert dataset.relation_label(3) == "inv_criticize"
    with pytest.raises(DatasetValidationError):
        augment_inverse(dataset)


def test_save_dataset_round_trips(dataset_dir, tmp_path):
    original = load_dataset(dataset_dir)
    out = tmp_path / 'normalized'
    save_dataset(augment_inverse(original), out)
    reloaded = load_dataset(out)
    for split in ('train', 'valid', 'test'):
        assert sorted(reloaded.split(split)) == sorted(original.split(split))
    assert reloaded.entity_vocab.label(0) == "Alpha"


def test_directional_queries_pose_head_as_inverse():
    queries = directional_queries([Quadruple(4, 1, 7, 9)], raw_relation_count=3)
    assert [q.direction for q in queries] == ['tail', 'head']
    assert queries[0].event() == Quadruple(4, 1, 7, 9)
    assert queries[1].event() == Quadruple(7, 4, 4, 9)


def test_index_lookups_exclude_query_time():
    dataset = augment_inverse(generate_synthetic_tkg(seed=3))
    index = build_index(dataset, ('train', 'valid', 'test'))
    fact = dataset.test[0]
    s, r, o, t = fact
    assert all(ts < t for ts in index.times_in_window(s, r, o, 0, t))
    assert all(ts < t for ts, _ in index.objects_in_window(s, r, 0, t))
    assert o in index.truth_at(s, r, t)
    assert index.count_before(s, r, o, t) == len(index.times_in_window(s, r, o, 0, t))
    last = index.last_time_before(s, r, o, t)
    assert last is None or last < t


def test_index_window_bounds():
    dataset = augment_inverse(generate_synthetic_tkg(seed=5))
    index = build_index(dataset, ('train',))
    for (s, r, o), stamps in list(index.by_pair_full.items())[:50]:
        end = stamps[-1] + 1
        start = stamps[0]
        assert index.times_in_window(s, r, o, start, end) == stamps
        assert index.times_in_window(s, r, o, start + 1, end) == tuple(t for t in stamps if t >= start + 1)
    assert index.window_start(10, None) == 0
    assert index.window_start(10, 3) == 7


def test_build_index_literal_maps():
    repeated = augment_inverse(dataset_from_facts(train=[(0, 0, 1, 3), (0, 0, 1, 7)], valid=[], test=[]))
    assert list(build_index(repeated, ('train',)).by_pair_full[(0, 0, 1)]) == [3, 7]
    concurrent = augment_inverse(dataset_from_facts(train=[(0, 0, 1, 3), (0, 0, 2, 3)], valid=[], test=[]))
    index = build_index(concurrent, ('train',))
    assert index.same_time_truth[(0, 0, 3)] == {1, 2}
    assert index.truth_at(0, 0, 3) == {1, 2}


small_facts = st.lists(st.tuples(st.integers(0, 4), st.integers(0, 2), st.integers(0, 4), st.integers(0, 20)),
                       min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(small_facts, st.integers(0, 4), st.integers(0, 5), st.integers(0, 4), st.integers(0, 25),
       st.one_of(st.none(), st.integers(1, 10)))
def test_window_lookups_return_source_facts(train, s, r, o, t, w):
    dataset = augment_inverse(dataset_from_facts(train=train, valid=[(0, 0, 1, 30)], test=[(1, 0, 0, 31)],
                                                 entity_count=5, raw_relation_count=3))
    facts = set(dataset.train + dataset.valid + dataset.test)
    index = build_index(dataset, SPLITS)
    start = index.window_start(t, w)

    objects = index.objects_in_window(s, r, start, t)
    for ts, obj in objects:
        assert Quadruple(s, r, obj, ts) in facts
        assert start <= ts < t
    assert list(objects) == sorted((f.timestamp, f.object) for f in facts
                                   if f.subject == s and f.relation == r and start <= f.timestamp < t)

    for ts in index.times_in_window(s, r, o, start, t):
        assert Quadruple(s, r, o, ts) in facts
        assert start <= ts < t

    for ts, rel, obj in index.subject_facts_in_window(s, start, t):
        assert Quadruple(s, rel, obj, ts) in facts
        assert start <= ts < t


def test_auto_divisor_is_logged(dataset_dir, caplog):
    with caplog.at_level('INFO', logger="TKGDataset"):
        load_dataset(dataset_dir)
    assert "Time divisor resolved to 24" in caplog.text


def test_build_index_validation(dataset_dir):
    dataset = load_dataset(dataset_dir)
    with pytest.raises(DatasetValidationError):
        build_index(dataset, ('train',))
    augmented = augment_inverse(dataset)
    with pytest.raises(DatasetValidationError):
        build_index(augmented, ('holdout',))
    with pytest.raises(DatasetValidationError):
        build_index(augmented, ())


def main():
    print("=" * 50)
    print("DATASET AND INDEX TESTS")
    print("=" * 50)
    code = pytest.main([__file__, '-q'])
    print("\n" + "=" * 50)
    print("ALL TESTS PASSED" if code == 0 else "SOME TESTS FAILED - Check the issues above")
    print("=" * 50)
    return code


if __name__ == "__main__":
    sys.exit(main())
