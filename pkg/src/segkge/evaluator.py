"""Filtered link-prediction metrics and the forward/reverse probability report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FilterIndex, TripleSet, Vocabulary
from .scoring import (
    EmbeddingTable,
    ModelConfig,
    head_coefficients,
    probability,
    score_vectors,
    tail_coefficients,
)

HITS_AT = (1, 3, 10)


@dataclass
class RankingReport:
    mrr: float
    hits1: float
    hits3: float
    hits10: float
    count: int
    side: str
    ranks: np.ndarray | None = None

    @classmethod
    def from_ranks(cls, ranks, side: str) -> "RankingReport":
        ranks = np.asarray(ranks, dtype=np.int64)
        if len(ranks) == 0:
            return cls(float("nan"), float("nan"), float("nan"), float("nan"), 0, side, ranks)
        hits = [100.0 * float(np.mean(ranks <= n)) for n in HITS_AT]
        return cls(float(np.mean(1.0 / ranks)), *hits, count=len(ranks), side=side, ranks=ranks)

    def rows(self):
        yield "MRR", self.mrr
        yield "Hits@1", self.hits1
        yield "Hits@3", self.hits3
        yield "Hits@10", self.hits10


@dataclass
class EvaluationResult:
    both: RankingReport
    head: RankingReport
    tail: RankingReport

    @property
    def mrr(self) -> float:
        return self.both.mrr

    def reports(self):
        return (self.both, self.head, self.tail)

    def format_table(self) -> str:
        lines = [f"{'metric':<8} {'both':>9} {'head':>9} {'tail':>9}"]
        for (name, b), (_, h), (_, t) in zip(self.both.rows(), self.head.rows(), self.tail.rows()):
            fmt = "{:>9.4f}" if name == "MRR" else "{:>9.2f}"
            lines.append(f"{name:<8} " + " ".join(fmt.format(v) for v in (b, h, t)))
        lines.append(f"{'count':<8} {self.both.count:>9d} {self.head.count:>9d} {self.tail.count:>9d}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("metric,side,value\n")
            for rep in self.reports():
                for name, value in rep.rows():
                    f.write(f"{name},{rep.side},{value:.10g}\n")
                f.write(f"count,{rep.side},{rep.count}\n")


def candidate_scores(test, side: str, table: EmbeddingTable, k: int, fn: str = "f4") -> np.ndarray:
    """Scores of ``test`` with its head (or tail) replaced by every entity."""
    h, r, t = (int(v) for v in test)
    rel = table.relations[r]
    if side == "tail":
        coeff = tail_coefficients(fn, table.entities[h], rel, k)
    elif side == "head":
        coeff = head_coefficients(fn, rel, table.entities[t], k)
    else:
        raise ValueError(f"side must be 'head' or 'tail', got {side!r}")
    return table.entities @ coeff


def rank_triple(test, side: str, table: EmbeddingTable, cfg: ModelConfig,
                filter: FilterIndex | None, fn: str = "f4") -> int:
    """1 + number of unfiltered candidates scoring strictly above ``test``.

    Candidates that are known true triples are dropped, except ``test``
    itself.  ``filter=None`` gives the raw setting.
    """
    h, r, t = (int(v) for v in test)
    scores = candidate_scores((h, r, t), side, table, cfg.k, fn)
    true_ent = t if side == "tail" else h
    target = scores[true_ent]
    above = scores > target
    if filter is not None:
        known = filter.true_tails(h, r) if side == "tail" else filter.true_heads(r, t)
        if len(known):
            above[known] = False
    above[true_ent] = False
    return 1 + int(np.count_nonzero(above))


def evaluate(test_set: TripleSet, table: EmbeddingTable, cfg: ModelConfig,
             filter: FilterIndex | None, fn: str = "f4") -> EvaluationResult:
    """Head- and tail-side ranks for every test triple, pooled and per side.

    The pooled MRR/Hits average over all ``2 * len(test_set)`` rankings.
    """
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    head_ranks = np.empty(len(test_set), dtype=np.int64)
    tail_ranks = np.empty(len(test_set), dtype=np.int64)
    for i, tr in enumerate(test_set.triples.tolist()):
        head_ranks[i] = rank_triple(tr, "head", table, cfg, filter, fn)
        tail_ranks[i] = rank_triple(tr, "tail", table, cfg, filter, fn)
    return EvaluationResult(
        both=RankingReport.from_ranks(np.concatenate([head_ranks, tail_ranks]), "both"),
        head=RankingReport.from_ranks(head_ranks, "head"),
        tail=RankingReport.from_ranks(tail_ranks, "tail"),
    )


@dataclass
class CaseStudyRow:
    triple: str
    p_forward: float
    p_reverse: float
    scoring_fn: str


def case_study(triples, table: EmbeddingTable, cfg: ModelConfig, fn: str = "f4",
               vocab: Vocabulary | None = None) -> list[CaseStudyRow]:
    """Probability of each triple and of its head/tail-swapped reverse."""
    rows = []
    for h, r, t in triples:
        hv, rv, tv = table.entities[h], table.relations[r], table.entities[t]
        fwd = probability(score_vectors(fn, hv, rv, tv, cfg.k))
        rev = probability(score_vectors(fn, tv, rv, hv, cfg.k))
        label = "\t".join(vocab.decode((h, r, t))) if vocab is not None else f"{h}\t{r}\t{t}"
        rows.append(CaseStudyRow(label, fwd, rev, fn))
    return rows


def _csv_field(text: str) -> str:
    if any(c in text for c in ',"\n\t'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_case_study_csv(path_or_file, rows: list[CaseStudyRow]) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
    try:
        f.write("triple,function,p_forward,p_reverse\n")
        for row in rows:
            f.write(f"{_csv_field(row.triple)},{row.scoring_fn},{row.p_forward:.10g},{row.p_reverse:.10g}\n")
    finally:
        if own:
            f.close()
