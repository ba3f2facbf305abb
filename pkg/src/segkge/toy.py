"""A small synthetic family graph with one symmetric and one antisymmetric relation.

Every family is a stack of generations.  ``sibling_of`` links each ordered
pair of distinct members of the same generation (symmetric); ``parent_of``
links every member of a generation to every member of the next one
(antisymmetric).  The default, 3 families of generations sized 3/4/6/7, has
60 entities.

Held-out triples are recoverable from the rest: a held-out sibling triple
always keeps its reverse in train, and a held-out parent triple sits in a
generation block whose other cells stay in train.
"""

from __future__ import annotations

import os

import numpy as np

from .data import Dataset, TripleSet, Vocabulary

SYMMETRIC = "sibling_of"
ANTISYMMETRIC = "parent_of"
DEFAULT_GENERATIONS = (3, 4, 6, 7)


def family_triples(family: int, generations=DEFAULT_GENERATIONS):
    """Return ``(sibling_triples, parent_triples)`` for one family."""
    gens = [[f"fam{family}_gen{g}_{j}" for j in range(n)] for g, n in enumerate(generations)]
    sib = [(a, SYMMETRIC, b) for gen in gens for a in gen for b in gen if a != b]
    par = [(a, ANTISYMMETRIC, b) for older, younger in zip(gens, gens[1:]) for a in older for b in younger]
    return sib, par


def make_family_kg(n_families: int = 3, generations=DEFAULT_GENERATIONS, held_out: int = 1,
                   seed: int = 0) -> tuple[dict, Dataset]:
    """Build the graph and split it.

    Per family, ``held_out`` sibling triples and ``held_out`` parent triples
    go to test, and as many again to valid.  Returns the string splits and
    the encoded :class:`Dataset`.
    """
    if len(generations) < 2 or min(generations) < 2:
        raise ValueError("need at least two generations of at least two members")
    rng = np.random.default_rng(seed)
    splits = {"train": [], "valid": [], "test": []}
    for f in range(n_families):
        sib, par = family_triples(f, generations)
        # one direction of an unordered pair; the other stays in train
        pairs = sorted({tuple(sorted((a, b))) for a, _, b in sib})
        picked = rng.choice(len(pairs), size=2 * held_out, replace=False)
        held_sib = [(pairs[i][0], SYMMETRIC, pairs[i][1]) for i in picked]
        held_par = [par[i] for i in rng.choice(len(par), size=2 * held_out, replace=False)]
        splits["test"] += held_sib[:held_out] + held_par[:held_out]
        splits["valid"] += held_sib[held_out:] + held_par[held_out:]
        held = set(held_sib + held_par)
        splits["train"] += [tr for tr in sib + par if tr not in held]

    vocab = Vocabulary()
    encoded = {}
    for name in ("train", "valid", "test"):
        rows = [(vocab.add_entity(h), vocab.add_relation(r), vocab.add_entity(t)) for h, r, t in splits[name]]
        encoded[name] = TripleSet(np.array(rows, dtype=np.int64).reshape(-1, 3), name)
    return splits, Dataset(vocab, encoded["train"], encoded["valid"], encoded["test"])


def write_dataset(root, splits: dict) -> None:
    os.makedirs(root, exist_ok=True)
    for name, rows in splits.items():
        with open(os.path.join(root, f"{name}.txt"), "w", encoding="utf-8") as f:
            for h, r, t in rows:
                f.write(f"{h}\t{r}\t{t}\n")
