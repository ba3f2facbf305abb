import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from segkge.data import (
    FilterIndex,
    TripleSet,
    Vocabulary,
    build_filter_index,
    decode_triples,
    load_dataset,
    load_triples,
)
from segkge.errors import TripleParseError


def write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def test_three_line_file(tmp_path):
    f = write(tmp_path / "t.txt", ["a\tr1\tb", "b\tr1\ta", "a\tr2\tc"])
    vocab = Vocabulary()
    ts = load_triples(f, vocab)
    assert len(ts) == 3
    assert vocab.num_entities == 3
    assert vocab.num_relations == 2
    assert ts.triples.tolist() == [[0, 0, 1], [1, 0, 0], [0, 1, 2]]


def test_empty_file(tmp_path):
    f = tmp_path / "empty.txt"
    f.write_text("")
    vocab = Vocabulary()
    vocab.add_entity("x")
    ts = load_triples(f, vocab)
    assert len(ts) == 0
    assert ts.triples.shape == (0, 3)
    assert vocab.id_to_entity == ["x"]
    assert vocab.num_relations == 0


def test_blank_lines_skipped_and_crlf(tmp_path):
    f = tmp_path / "t.txt"
    f.write_bytes(b"a\tr\tb\r\n\r\nb\tr\tc\r\n")
    ts = load_triples(f, Vocabulary())
    assert len(ts) == 2


@pytest.mark.parametrize("bad", ["a\tr", "a\tr\tb\tc", "a r b"])
def test_malformed_line_reports_line_number(tmp_path, bad):
    f = write(tmp_path / "bad.txt", ["a\tr\tb", bad])
    with pytest.raises(TripleParseError) as exc:
        load_triples(f, Vocabulary())
    assert exc.value.lineno == 2
    assert ":2:" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_triples(tmp_path / "nope.txt", Vocabulary())


def test_spaces_are_part_of_tokens(tmp_path):
    f = write(tmp_path / "t.txt", ["New York\tlocated in\t USA "])
    vocab = Vocabulary()
    load_triples(f, vocab)
    assert vocab.id_to_entity == ["New York", " USA "]
    assert vocab.id_to_relation == ["located in"]


def test_round_trip_preserves_order(tmp_path):
    rows = [("e%d" % (i % 7), "r%d" % (i % 3), "e%d" % ((i * 5) % 11)) for i in range(40)]
    f = write(tmp_path / "t.txt", ["\t".join(r) for r in rows])
    vocab = Vocabulary()
    ts = load_triples(f, vocab)
    assert decode_triples(ts, vocab) == rows


def test_ids_deterministic_across_loads(tmp_path):
    f = write(tmp_path / "t.txt", ["b\tr\ta", "c\ts\tb", "a\tr\tc"])
    v1, v2 = Vocabulary(), Vocabulary()
    t1, t2 = load_triples(f, v1), load_triples(f, v2)
    assert v1 == v2
    assert np.array_equal(t1.triples, t2.triples)


def test_vocabulary_mappings_inverse():
    vocab = Vocabulary()
    for name in ["x", "y", "x", "z", "y"]:
        vocab.add_entity(name)
    assert vocab.id_to_entity == ["x", "y", "z"]
    for i, name in enumerate(vocab.id_to_entity):
        assert vocab.entity_to_id[name] == i


def test_vocabulary_dump_round_trip(tmp_path):
    vocab = Vocabulary()
    for e in ["a", "b b", "c"]:
        vocab.add_entity(e)
    vocab.add_relation("rel")
    vocab.save(tmp_path / "vocab.tsv")
    assert (tmp_path / "vocab.tsv").read_text().splitlines()[0] == "3\t1"
    assert Vocabulary.load(tmp_path / "vocab.tsv") == vocab


def test_encode_unknown_names():
    vocab = Vocabulary()
    vocab.add_entity("a")
    vocab.add_relation("r")
    assert vocab.encode("a", "r", "a") == (0, 0, 0)
    with pytest.raises(KeyError, match="unknown entity 'zz'"):
        vocab.encode("a", "r", "zz")
    with pytest.raises(KeyError, match="unknown relation"):
        vocab.encode("a", "q", "a")


def test_filter_index_with_cross_split_duplicate():
    train = TripleSet([[0, 0, 1], [1, 0, 2], [2, 0, 0]], "train")
    valid = TripleSet([[0, 0, 1]], "valid")
    test = TripleSet([[1, 1, 0]], "test")
    idx = build_filter_index(train, valid, test)
    assert len(idx) == 4
    assert (0, 0, 1) in idx
    assert (0, 1, 1) not in idx


def test_filter_index_empty():
    empty = TripleSet(np.empty((0, 3)), "train")
    assert len(build_filter_index(empty, empty, empty)) == 0


def test_filter_index_query_lists():
    idx = FilterIndex([(0, 0, 1), (0, 0, 2), (3, 0, 2), (0, 1, 1)])
    assert idx.true_tails(0, 0).tolist() == [1, 2]
    assert idx.true_heads(0, 2).tolist() == [0, 3]
    assert idx.true_tails(5, 5).tolist() == []


triples_st = st.lists(st.tuples(st.integers(0, 6), st.integers(0, 2), st.integers(0, 6)), max_size=25)


@settings(max_examples=60, deadline=None)
@given(triples_st, triples_st, triples_st, st.lists(st.tuples(st.integers(0, 6), st.integers(0, 2), st.integers(0, 6)), max_size=30))
def test_filter_membership_matches_linear_scan(a, b, c, probes):
    idx = build_filter_index(TripleSet(a), TripleSet(b, "valid"), TripleSet(c, "test"))
    everything = a + b + c
    assert len(idx) <= len(everything)
    for p in probes + everything:
        assert (p in idx) == any(p == q for q in everything)


def test_load_dataset_shares_vocabulary(tmp_path):
    write(tmp_path / "train.txt", ["a\tr\tb", "b\tr\tc"])
    write(tmp_path / "valid.txt", ["c\ts\td"])
    write(tmp_path / "test.txt", ["d\tr\ta"])
    ds = load_dataset(tmp_path)
    assert ds.vocab.num_entities == 4
    assert ds.vocab.num_relations == 2
    assert len(ds.filter_index) == 4
    for split in (ds.train, ds.valid, ds.test):
        split.validate(ds.vocab)
