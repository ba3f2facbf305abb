"""Text checkpoints.

Layout::

    seek-checkpoint v1 d=<d> k=<k> entities=<n> relations=<m>
    E <name> <d decimals>      (n lines)
    R <name> <d decimals>      (m lines)

Decimals use 17 significant digits, so float64 values round-trip exactly.
Names may contain spaces (never tabs or newlines); the last ``d`` fields of
a row are always the values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError
from .scoring import EmbeddingTable, ModelConfig

MAGIC = "seek-checkpoint"
VERSION = "v1"
_HEADER = re.compile(
    r"^seek-checkpoint (v\d+) d=(\d+) k=(\d+) entities=(\d+) relations=(\d+)$"
)


@dataclass
class Checkpoint:
    table: EmbeddingTable
    cfg: ModelConfig
    entity_names: list[str]
    relation_names: list[str]


def _row(tag, name, values):
    if "\n" in name or "\t" in name:
        raise CheckpointError(f"name {name!r} contains a tab or newline")
    return f"{tag} {name} " + " ".join(format(v, ".17g") for v in values.tolist()) + "\n"


def save_checkpoint(path, table: EmbeddingTable, cfg: ModelConfig, entity_names, relation_names) -> None:
    if len(entity_names) != table.num_entities or len(relation_names) != table.num_relations:
        raise CheckpointError(
            f"name lists ({len(entity_names)}, {len(relation_names)}) do not match table "
            f"({table.num_entities}, {table.num_relations})"
        )
    if table.d != cfg.d:
        raise CheckpointError(f"table width {table.d} != config d={cfg.d}")
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            f"{MAGIC} {VERSION} d={cfg.d} k={cfg.k} "
            f"entities={table.num_entities} relations={table.num_relations}\n"
        )
        for name, row in zip(entity_names, table.entities):
            f.write(_row("E", name, row))
        for name, row in zip(relation_names, table.relations):
            f.write(_row("R", name, row))


def _parse_rows(lines, tag, d, start, path):
    names = []
    values = np.empty((len(lines), d), dtype=np.float64)
    for i, line in enumerate(lines):
        lineno = start + i
        if not line.startswith(tag + " "):
            raise CheckpointError(f"{path}:{lineno}: expected a '{tag}' row")
        parts = line[2:].rsplit(" ", d)
        if len(parts) != d + 1:
            raise CheckpointError(f"{path}:{lineno}: expected a name and {d} values")
        names.append(parts[0])
        try:
            values[i] = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise CheckpointError(f"{path}:{lineno}: {exc}") from None
    return names, values


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CheckpointError(f"{path}: empty checkpoint")
    m = _HEADER.match(lines[0])
    if m is None:
        raise CheckpointError(f"{path}: bad header {lines[0]!r}")
    version, d, k, n_ent, n_rel = m.group(1), *(int(g) for g in m.groups()[1:])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    if len(lines) != 1 + n_ent + n_rel:
        raise CheckpointError(
            f"{path}: header declares {n_ent + n_rel} rows, file has {len(lines) - 1}"
        )
    cfg = ModelConfig(d=d, k=k)
    ent_names, ent = _parse_rows(lines[1 : 1 + n_ent], "E", d, 2, path)
    rel_names, rel = _parse_rows(lines[1 + n_ent :], "R", d, 2 + n_ent, path)
    return Checkpoint(EmbeddingTable(ent, rel), cfg, ent_names, rel_names)
