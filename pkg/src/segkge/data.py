"""Triple files, vocabularies and the filtered-evaluation index.

Files are UTF-8, one ``head<TAB>relation<TAB>tail`` triple per line, no
header.  A dataset directory holds ``train.txt``, ``valid.txt`` and
``test.txt``.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import TripleParseError

SPLITS = ("train", "valid", "test")


class Triple(NamedTuple):
    h: int
    r: int
    t: int


class Vocabulary:
    """Bidirectional string <-> dense id maps for entities and relations.

    Ids are assigned in order of first appearance, starting at 0.
    """

    def __init__(self):
        self.entity_to_id: dict[str, int] = {}
        self.id_to_entity: list[str] = []
        self.relation_to_id: dict[str, int] = {}
        self.id_to_relation: list[str] = []

    @property
    def num_entities(self) -> int:
        return len(self.id_to_entity)

    @property
    def num_relations(self) -> int:
        return len(self.id_to_relation)

    def add_entity(self, name: str) -> int:
        idx = self.entity_to_id.get(name)
        if idx is None:
            idx = len(self.id_to_entity)
            self.entity_to_id[name] = idx
            self.id_to_entity.append(name)
        return idx

    def add_relation(self, name: str) -> int:
        idx = self.relation_to_id.get(name)
        if idx is None:
            idx = len(self.id_to_relation)
            self.relation_to_id[name] = idx
            self.id_to_relation.append(name)
        return idx

    def encode(self, h: str, r: str, t: str) -> Triple:
        """Look up an existing triple; raises KeyError naming the unknown string."""
        try:
            hid = self.entity_to_id[h]
        except KeyError:
            raise KeyError(f"unknown entity {h!r}") from None
        try:
            rid = self.relation_to_id[r]
        except KeyError:
            raise KeyError(f"unknown relation {r!r}") from None
        try:
            tid = self.entity_to_id[t]
        except KeyError:
            raise KeyError(f"unknown entity {t!r}") from None
        return Triple(hid, rid, tid)

    def decode(self, triple) -> tuple[str, str, str]:
        h, r, t = triple
        return self.id_to_entity[h], self.id_to_relation[r], self.id_to_entity[t]

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (
            self.id_to_entity == other.id_to_entity
            and self.id_to_relation == other.id_to_relation
        )

    def __repr__(self):
        return f"Vocabulary(entities={self.num_entities}, relations={self.num_relations})"

    def save(self, path) -> None:
        """Write ``<n_entities>\\t<n_relations>`` then ``id\\tname`` lines."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{self.num_entities}\t{self.num_relations}\n")
            for i, name in enumerate(self.id_to_entity):
                f.write(f"{i}\t{name}\n")
            for i, name in enumerate(self.id_to_relation):
                f.write(f"{i}\t{name}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        vocab = cls()
        with open(path, encoding="utf-8") as f:
            lines = f.read().split("\n")
        n_ent, n_rel = (int(v) for v in lines[0].split("\t"))
        body = lines[1 : 1 + n_ent + n_rel]
        if len(body) != n_ent + n_rel:
            raise ValueError(f"{path}: header promises {n_ent + n_rel} rows, found {len(body)}")
        for i, line in enumerate(body):
            idx, name = line.split("\t", 1)
            expected = i if i < n_ent else i - n_ent
            if int(idx) != expected:
                raise ValueError(f"{path}: non-contiguous id {idx} on line {i + 2}")
            if i < n_ent:
                vocab.add_entity(name)
            else:
                vocab.add_relation(name)
        if vocab.num_entities != n_ent or vocab.num_relations != n_rel:
            raise ValueError(f"{path}: duplicate names in vocabulary dump")
        return vocab


@dataclass(frozen=True)
class TripleSet:
    """Id-encoded triples of one split, as an ``(n, 3)`` int64 array of (h, r, t)."""

    triples: np.ndarray
    split_name: str = "train"

    def __post_init__(self):
        arr = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "triples", arr)

    def __len__(self):
        return len(self.triples)

    def __iter__(self):
        for h, r, t in self.triples.tolist():
            yield Triple(h, r, t)

    def __getitem__(self, i) -> Triple:
        h, r, t = self.triples[i].tolist()
        return Triple(h, r, t)

    def validate(self, vocab: Vocabulary) -> None:
        if len(self) == 0:
            return
        if self.triples.min() < 0:
            raise ValueError(f"{self.split_name}: negative id")
        ents = self.triples[:, [0, 2]]
        if ents.max() >= vocab.num_entities or self.triples[:, 1].max() >= vocab.num_relations:
            raise ValueError(f"{self.split_name}: id outside vocabulary {vocab!r}")


def _split_line(path, lineno, line):
    parts = line.split("\t")
    if len(parts) != 3:
        raise TripleParseError(path, lineno, line)
    return parts


def load_triples(path, vocab: Vocabulary, split_name: str = "train") -> TripleSet:
    """Read a TSV triple file, growing ``vocab`` with unseen names.

    Only ``\\n`` / ``\\r\\n`` line terminators are stripped; any other
    whitespace belongs to the token.  Blank lines are skipped.
    """
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            h, r, t = _split_line(path, lineno, line)
            rows.append((vocab.add_entity(h), vocab.add_relation(r), vocab.add_entity(t)))
    return TripleSet(np.array(rows, dtype=np.int64).reshape(-1, 3), split_name)


def read_string_triples(path) -> list[tuple[str, str, str]]:
    """Parse a TSV triple file without touching any vocabulary."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if line:
                out.append(tuple(_split_line(path, lineno, line)))
    return out


def decode_triples(triples: TripleSet, vocab: Vocabulary) -> list[tuple[str, str, str]]:
    return [vocab.decode(tr) for tr in triples.triples.tolist()]


class FilterIndex:
    """Set of every known true triple across train, valid and test.

    Besides exact membership, keeps per-query lookups of the true tails of
    ``(h, r, ?)`` and true heads of ``(?, r, t)`` for filtered ranking.
    """

    def __init__(self, triples: Iterable = ()):
        known = set()
        for h, r, t in triples:
            known.add((int(h), int(r), int(t)))
        self.known: frozenset = frozenset(known)
        tails = defaultdict(list)
        heads = defaultdict(list)
        for h, r, t in self.known:
            tails[(h, r)].append(t)
            heads[(r, t)].append(h)
        self._tails = {key: np.array(sorted(v), dtype=np.int64) for key, v in tails.items()}
        self._heads = {key: np.array(sorted(v), dtype=np.int64) for key, v in heads.items()}

    def __len__(self):
        return len(self.known)

    def __contains__(self, triple) -> bool:
        h, r, t = triple
        return (int(h), int(r), int(t)) in self.known

    def true_tails(self, h: int, r: int) -> np.ndarray:
        return self._tails.get((int(h), int(r)), _EMPTY)

    def true_heads(self, r: int, t: int) -> np.ndarray:
        return self._heads.get((int(r), int(t)), _EMPTY)

    def with_triples(self, extra: Iterable) -> "FilterIndex":
        return FilterIndex(list(self.known) + [tuple(x) for x in extra])

    def sorted_keys(self, num_entities: int, num_relations: int) -> np.ndarray:
        """Known triples packed as sorted int64 keys ``(h * R + r) * E + t``."""
        if not self.known:
            return np.empty(0, dtype=np.int64)
        arr = np.array(sorted(self.known), dtype=np.int64)
        keys = (arr[:, 0] * num_relations + arr[:, 1]) * num_entities + arr[:, 2]
        keys.sort()
        return keys


_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.setflags(write=False)


def build_filter_index(train: TripleSet, valid: TripleSet, test: TripleSet) -> FilterIndex:
    parts = [s.triples for s in (train, valid, test) if len(s)]
    if not parts:
        return FilterIndex()
    return FilterIndex(np.concatenate(parts).tolist())


@dataclass
class Dataset:
    vocab: Vocabulary
    train: TripleSet
    valid: TripleSet
    test: TripleSet
    root: str = ""
    _filter: FilterIndex | None = field(default=None, repr=False)

    @property
    def filter_index(self) -> FilterIndex:
        if self._filter is None:
            self._filter = build_filter_index(self.train, self.valid, self.test)
        return self._filter

    def split(self, name: str) -> TripleSet:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}; expected one of {SPLITS}")
        return getattr(self, name)


def load_dataset(root) -> Dataset:
    """Load ``train.txt``, ``valid.txt``, ``test.txt`` into one shared vocabulary.

    The vocabulary covers all three splits so evaluation never meets an
    unknown id.
    """
    vocab = Vocabulary()
    sets = {}
    for name in SPLITS:
        path = os.path.join(root, f"{name}.txt")
        sets[name] = load_triples(path, vocab, split_name=name)
    return Dataset(vocab, sets["train"], sets["valid"], sets["test"], root=str(root))
