"""Negative-sampling logistic training of f4 embeddings with AdaGrad.

Each positive triple gets one update, followed by one update for each of
its ``eta`` corrupted copies (head or tail swapped for a random entity).
The per-example objective is ``softplus(-label * f4)`` plus an L2 pull of
``lambda / d`` on the three rows the example touches.

``workers=1`` is serial and bit-reproducible.  With ``workers > 1`` the
shuffled positives are split across threads that update the shared
matrices and AdaGrad accumulators without locks (Hogwild); lost updates
are tolerated and the result is not reproducible.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .data import Triple, TripleSet
from .errors import ConfigError, TrainingError
from .scoring import EmbeddingTable, ModelConfig, check_segments, init_embeddings

logger = logging.getLogger(__name__)

ADAGRAD_EPS = 1e-8
# caps the per-call negative draw buffers at ~16 MB
_DRAWS_PER_CHUNK = 1 << 20


@dataclass(frozen=True)
class TrainConfig:
    k: int = 4
    d: int = 400
    lam: float = 0.01
    eta: int = 100
    lr: float = 0.1
    epochs: int = 100
    seed: int = 0
    workers: int = 1
    filter_negatives: bool = False
    epsilon: float = ADAGRAD_EPS

    def __post_init__(self):
        check_segments(self.d, self.k)
        if self.eta < 1:
            raise ConfigError(f"eta must be >= 1, got {self.eta}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def model(self) -> ModelConfig:
        return ModelConfig(d=self.d, k=self.k, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


class LabeledTriple(NamedTuple):
    triple: Triple
    label: int


@dataclass
class OptimizerState:
    """Per-coordinate sums of squared gradients; never reset."""

    accum_entities: np.ndarray
    accum_relations: np.ndarray
    epsilon: float = ADAGRAD_EPS

    @classmethod
    def zeros_like(cls, table: EmbeddingTable, epsilon: float = ADAGRAD_EPS) -> "OptimizerState":
        return cls(np.zeros_like(table.entities), np.zeros_like(table.relations), epsilon)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    seconds: float
    examples: int


@dataclass
class TrainResult:
    table: EmbeddingTable
    optimizer: OptimizerState
    history: list[EpochStats] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [e.mean_loss for e in self.history]


def sample_negatives(pos, eta: int, num_entities: int, rng: np.random.Generator) -> list[LabeledTriple]:
    """Corrupt the head or the tail of ``pos`` ``eta`` times, uniformly.

    The replacement is uniform over every entity except the one replaced,
    so each negative differs from ``pos`` in exactly one slot.
    """
    if num_entities < 2:
        raise ValueError(f"cannot corrupt triples with {num_entities} entities")
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta}")
    h, r, t = (int(v) for v in pos)
    head_side = rng.random(eta) < 0.5
    draws = rng.integers(0, num_entities - 1, size=eta)
    out = []
    for side, draw in zip(head_side.tolist(), draws.tolist()):
        nh, nt = _kernels.corrupt(h, t, side, draw)
        out.append(LabeledTriple(Triple(int(nh), r, int(nt)), -1))
    return out


def loss_term(score: float, label: int) -> float:
    """Negative log-likelihood ``-log sigmoid(label * score)`` as a stable softplus."""
    return float(_kernels.softplus(-float(label) * float(score)))


def sgd_step(example: LabeledTriple, table: EmbeddingTable, opt: OptimizerState, cfg: TrainConfig, epoch: int = 0) -> float:
    """Apply one AdaGrad update for ``example`` in place and return its pre-update loss."""
    (h, r, t), label = example
    if label not in (1, -1):
        raise ValueError(f"label must be +1 or -1, got {label}")
    for name, idx, n in (("head", h, table.num_entities), ("relation", r, table.num_relations), ("tail", t, table.num_entities)):
        if not 0 <= idx < n:
            raise IndexError(f"{name} id {idx} out of range [0, {n})")
    d = table.d
    gh, gr, gt = np.empty(d), np.empty(d), np.empty(d)
    loss = _kernels.sgd_step(
        table.entities, table.relations, opt.accum_entities, opt.accum_relations,
        h, r, t, float(label), cfg.lr, cfg.lam, opt.epsilon, cfg.k, gh, gr, gt,
    )
    if np.isnan(loss):
        raise TrainingError((h, r, t), epoch, label)
    return float(loss)


def _draw_chunk(rng, n, eta, num_entities):
    head_side = rng.random((n, eta)) < 0.5
    draws = rng.integers(0, num_entities - 1, size=(n, eta), dtype=np.int64)
    return head_side, draws


def _run_partition(table, opt, cfg, positives, rng, known_keys, epoch):
    """Serially train on ``positives``; returns (loss_sum, n_examples)."""
    chunk = max(1, _DRAWS_PER_CHUNK // cfg.eta)
    n_ent = table.num_entities
    loss_sum, count = 0.0, 0
    for start in range(0, len(positives), chunk):
        pos = positives[start : start + chunk]
        head_side, draws = _draw_chunk(rng, len(pos), cfg.eta, n_ent)
        s, c, bad, neg, bh, bt = _kernels.train_chunk(
            table.entities, table.relations, opt.accum_entities, opt.accum_relations,
            pos, head_side, draws, cfg.lr, cfg.lam, opt.epsilon, cfg.k,
            known_keys, cfg.filter_negatives,
        )
        loss_sum += s
        count += c
        if bad >= 0:
            r = int(pos[bad, 1])
            label = 1 if neg < 0 else -1
            raise TrainingError((int(bh), r, int(bt)), epoch, label)
    return loss_sum, count


def run_epoch(table: EmbeddingTable, opt: OptimizerState, cfg: TrainConfig, positives: np.ndarray,
              epoch: int, known_keys: np.ndarray | None = None) -> tuple[float, int]:
    """One pass over ``positives`` with the shuffle/negatives seeded by ``seed ^ epoch``."""
    if known_keys is None:
        known_keys = np.empty(0, dtype=np.int64)
    ss = np.random.SeedSequence(cfg.seed ^ epoch)
    rng = np.random.default_rng(ss)
    shuffled = np.ascontiguousarray(positives[rng.permutation(len(positives))])
    if cfg.workers == 1:
        return _run_partition(table, opt, cfg, shuffled, rng, known_keys, epoch)

    parts = np.array_split(shuffled, cfg.workers)
    rngs = [np.random.default_rng(s) for s in ss.spawn(cfg.workers)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [
            pool.submit(_run_partition, table, opt, cfg, np.ascontiguousarray(p), g, known_keys, epoch)
            for p, g in zip(parts, rngs)
        ]
        results = [f.result() for f in futures]
    return sum(r[0] for r in results), sum(r[1] for r in results)


def train(
    train_set: TripleSet,
    cfg: TrainConfig,
    num_entities: int | None = None,
    num_relations: int | None = None,
    table: EmbeddingTable | None = None,
    opt: OptimizerState | None = None,
    known=None,
    on_epoch: Callable[[EpochStats, EmbeddingTable], None] | None = None,
) -> TrainResult:
    """Run ``cfg.epochs`` passes of SGD over ``train_set``.

    Parameters
    ----------
    train_set
        Positive triples.  Duplicates are kept and simply trained twice.
    num_entities, num_relations
        Vocabulary sizes; default to the largest ids seen in ``train_set``.
    table, opt
        Resume from existing parameters and AdaGrad state.  A fresh table
        is drawn from ``cfg.seed`` otherwise.
    known
        A :class:`~segkge.data.FilterIndex`, only consulted when
        ``cfg.filter_negatives`` is set: negatives that are known true
        triples are then skipped.
    on_epoch
        Called after every epoch with its stats and the live table.
    """
    triples = np.ascontiguousarray(train_set.triples, dtype=np.int64)
    if len(triples) == 0:
        raise ValueError("training set is empty")
    if num_entities is None:
        num_entities = int(triples[:, [0, 2]].max()) + 1
    if num_relations is None:
        num_relations = int(triples[:, 1].max()) + 1
    if num_entities < 2:
        raise ValueError(f"cannot corrupt triples with {num_entities} entities")
    if table is None:
        table = init_embeddings(num_entities, num_relations, cfg.model, cfg.seed)
    if opt is None:
        opt = OptimizerState.zeros_like(table, cfg.epsilon)
    if table.d != cfg.d:
        raise ConfigError(f"table width {table.d} != d={cfg.d}")

    known_keys = np.empty(0, dtype=np.int64)
    if cfg.filter_negatives and known is not None:
        known_keys = known.sorted_keys(table.num_entities, table.num_relations)

    result = TrainResult(table, opt)
    for epoch in range(1, cfg.epochs + 1):
        start = time.perf_counter()
        loss_sum, count = run_epoch(table, opt, cfg, triples, epoch, known_keys)
        stats = EpochStats(epoch, loss_sum / max(count, 1), time.perf_counter() - start, count)
        result.history.append(stats)
        logger.info("epoch %d loss %.6f (%.2fs)", epoch, stats.mean_loss, stats.seconds)
        if on_epoch is not None:
            on_epoch(stats, table)
    return result


def write_loss_csv(path, history: list[EpochStats]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,mean_loss,seconds\n")
        for e in history:
            f.write(f"{e.epoch},{e.mean_loss:.10g},{e.seconds:.6f}\n")
