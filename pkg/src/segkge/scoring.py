"""Segmented embeddings and the four scoring functions.

An embedding of width ``d`` is split into ``k`` contiguous segments of
width ``d // k``.  ``f1`` is the plain three-way dot product, ``f2`` sums
it over every (relation, head, tail) segment combination, ``f3`` adds a
sign per (relation, head) segment pair, and ``f4`` keeps only ``k**2`` of
those terms by tying the tail segment to the other two.  Even relation
segments are symmetric in head/tail; odd ones carry antisymmetry.

``f4`` and its gradient run through the compiled loops in
:mod:`segkge._kernels`, the same code the trainer uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError

SCORING_FUNCTIONS = ("f1", "f2", "f3", "f4")


@dataclass(frozen=True)
class ModelConfig:
    d: int
    k: int
    seed: int = 0

    def __post_init__(self):
        check_segments(self.d, self.k)

    @property
    def segment_width(self) -> int:
        return self.d // self.k


def check_segments(d: int, k: int) -> None:
    if not isinstance(d, (int, np.integer)) or not isinstance(k, (int, np.integer)):
        raise ConfigError(f"d and k must be integers, got d={d!r}, k={k!r}")
    if d < 1:
        raise ConfigError(f"embedding dimension must be positive, got d={d}")
    if k < 1:
        raise ConfigError(f"segment count must be positive, got k={k}")
    if d % k:
        raise ConfigError(f"k must divide dim: k={k} does not divide d={d}")


@dataclass
class EmbeddingTable:
    """Entity and relation matrices, float64, C-contiguous."""

    entities: np.ndarray
    relations: np.ndarray

    def __post_init__(self):
        self.entities = np.ascontiguousarray(self.entities, dtype=np.float64)
        self.relations = np.ascontiguousarray(self.relations, dtype=np.float64)
        if self.entities.ndim != 2 or self.relations.ndim != 2:
            raise ValueError("embedding matrices must be 2-D")
        if self.entities.shape[1] != self.relations.shape[1]:
            raise ValueError(
                f"entity width {self.entities.shape[1]} != relation width {self.relations.shape[1]}"
            )

    @property
    def d(self) -> int:
        return self.entities.shape[1]

    @property
    def num_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relations.shape[0]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.entities.copy(), self.relations.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.entities).all() and np.isfinite(self.relations).all())

    def equals(self, other: "EmbeddingTable") -> bool:
        """Bit-for-bit equality."""
        return np.array_equal(self.entities, other.entities) and np.array_equal(
            self.relations, other.relations
        )


class TripleGradient(NamedTuple):
    d_h: np.ndarray
    d_r: np.ndarray
    d_t: np.ndarray


def _check_index(x, y, k):
    if not (0 <= x < k and 0 <= y < k):
        raise ValueError(f"segment indices ({x}, {y}) out of range for k={k}")


def sign_coeff(x: int, y: int, k: int) -> int:
    """-1 when relation segment ``x`` is odd and ``x + y >= k``, else +1."""
    _check_index(x, y, k)
    return -1 if (x % 2 == 1 and x + y >= k) else 1


def tail_index(x: int, y: int, k: int) -> int:
    """Tail segment paired with relation segment ``x`` and head segment ``y`` in f4."""
    _check_index(x, y, k)
    return y if x % 2 == 0 else (x + y) % k


def sign_matrix(k: int) -> np.ndarray:
    return np.array([[sign_coeff(x, y, k) for y in range(k)] for x in range(k)], dtype=np.float64)


def tail_index_matrix(k: int) -> np.ndarray:
    return np.array([[tail_index(x, y, k) for y in range(k)] for x in range(k)], dtype=np.int64)


def interaction_terms(k: int) -> list[tuple[int, int, int, int]]:
    """The ``(x, y, w, sign)`` terms summed by f4, in evaluation order."""
    return [(x, y, tail_index(x, y, k), sign_coeff(x, y, k)) for x in range(k) for y in range(k)]


def segments(v: np.ndarray, k: int) -> np.ndarray:
    """View ``v`` (shape ``(d,)``) as a ``(k, d // k)`` array of segments."""
    v = np.asarray(v, dtype=np.float64)
    check_segments(v.shape[-1], k)
    return v.reshape(v.shape[:-1] + (k, v.shape[-1] // k))


def _as_triple(h, r, t):
    h = np.ascontiguousarray(h, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    if not (h.ndim == r.ndim == t.ndim == 1) or not (h.shape == r.shape == t.shape):
        raise ValueError(f"dimension mismatch: h{h.shape}, r{r.shape}, t{t.shape}")
    return h, r, t


def score_f1(h, r, t) -> float:
    h, r, t = _as_triple(h, r, t)
    # h * t first: commutative, so swapping head and tail is bit-exact
    return float(np.dot(r, h * t))


def score_f2(h, r, t, k: int) -> float:
    h, r, t = _as_triple(h, r, t)
    # sum over all (x, y, w) factorizes into segment sums
    rs = segments(r, k).sum(axis=0)
    hs = segments(h, k).sum(axis=0)
    ts = segments(t, k).sum(axis=0)
    return float(np.dot(rs, hs * ts))


def score_f3(h, r, t, k: int) -> float:
    h, r, t = _as_triple(h, r, t)
    ts = segments(t, k).sum(axis=0)
    pair = np.einsum("xi,yi,i->xy", segments(r, k), segments(h, k), ts)
    return float((sign_matrix(k) * pair).sum())


def f4(h, r, t, k: int) -> float:
    """f4 on raw vectors."""
    h, r, t = _as_triple(h, r, t)
    check_segments(h.shape[0], k)
    return float(_kernels.f4_score(h, r, t, k))


def f4_gradient(h, r, t, k: int) -> TripleGradient:
    """Analytic partial derivatives of f4 with respect to h, r and t."""
    h, r, t = _as_triple(h, r, t)
    check_segments(h.shape[0], k)
    gh, gr, gt = np.empty_like(h), np.empty_like(r), np.empty_like(t)
    _kernels.f4_grad(h, r, t, k, gh, gr, gt)
    return TripleGradient(gh, gr, gt)


def _rows(h_id, r_id, t_id, table):
    n_e, n_r = table.num_entities, table.num_relations
    for name, idx, n in (("head", h_id, n_e), ("relation", r_id, n_r), ("tail", t_id, n_e)):
        if not 0 <= idx < n:
            raise IndexError(f"{name} id {idx} out of range [0, {n})")
    return table.entities[h_id], table.relations[r_id], table.entities[t_id]


def score_f4(h_id: int, r_id: int, t_id: int, table: EmbeddingTable, cfg: ModelConfig) -> float:
    h, r, t = _rows(h_id, r_id, t_id, table)
    return float(_kernels.f4_score(h, r, t, cfg.k))


def grad_f4(h_id: int, r_id: int, t_id: int, table: EmbeddingTable, cfg: ModelConfig) -> TripleGradient:
    h, r, t = _rows(h_id, r_id, t_id, table)
    return f4_gradient(h, r, t, cfg.k)


def score_vectors(fn: str, h, r, t, k: int) -> float:
    if fn == "f1":
        return score_f1(h, r, t)
    if fn == "f2":
        return score_f2(h, r, t, k)
    if fn == "f3":
        return score_f3(h, r, t, k)
    if fn == "f4":
        return f4(h, r, t, k)
    raise ValueError(f"unknown scoring function {fn!r}; expected one of {SCORING_FUNCTIONS}")


def tail_coefficients(fn: str, h, r, k: int) -> np.ndarray:
    """Vector ``c`` with ``score(h, r, t) == c @ t`` for every tail ``t``.

    Every scoring function here is linear in the tail, so ranking all
    candidate tails is one matrix-vector product.
    """
    h = np.asarray(h, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if fn == "f1":
        return r * h
    if fn == "f2":
        return np.tile(segments(r, k).sum(axis=0) * segments(h, k).sum(axis=0), k)
    if fn == "f3":
        pair = np.einsum("xy,xi,yi->i", sign_matrix(k), segments(r, k), segments(h, k))
        return np.tile(pair, k)
    if fn == "f4":
        return f4_gradient(h, r, np.zeros_like(h), k).d_t
    raise ValueError(f"unknown scoring function {fn!r}")


def head_coefficients(fn: str, r, t, k: int) -> np.ndarray:
    """Vector ``c`` with ``score(h, r, t) == c @ h`` for every head ``h``."""
    r = np.asarray(r, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if fn == "f1":
        return r * t
    if fn == "f2":
        return np.tile(segments(r, k).sum(axis=0) * segments(t, k).sum(axis=0), k)
    if fn == "f3":
        ts = segments(t, k).sum(axis=0)
        per_y = np.einsum("xy,xi->yi", sign_matrix(k), segments(r, k)) * ts
        return per_y.reshape(-1)
    if fn == "f4":
        return f4_gradient(np.zeros_like(t), r, t, k).d_h
    raise ValueError(f"unknown scoring function {fn!r}")


def probability(score: float) -> float:
    """Logistic sigmoid, branching on sign so neither tail overflows."""
    return float(_kernels.sigmoid(float(score)))


def init_embeddings(num_entities: int, num_relations: int, cfg: ModelConfig, seed: int | None = None) -> EmbeddingTable:
    """Uniform ``[-6/sqrt(d), 6/sqrt(d)]`` initialization, deterministic in ``seed``."""
    if num_entities < 0 or num_relations < 0:
        raise ConfigError("vocabulary sizes must be non-negative")
    check_segments(cfg.d, cfg.k)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    bound = 6.0 / np.sqrt(cfg.d)
    ent = rng.uniform(-bound, bound, size=(num_entities, cfg.d))
    rel = rng.uniform(-bound, bound, size=(num_relations, cfg.d))
    return EmbeddingTable(ent, rel)
