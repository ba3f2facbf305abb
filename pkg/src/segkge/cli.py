"""Command-line entry point: ``segkge {train,evaluate,case-study,bench-k,make-toy}``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Only
``--workers 1`` training is deterministic.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import subprocess
import sys
import time
from importlib import metadata

import numpy as np

from . import _kernels
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import load_dataset, read_string_triples
from .errors import CheckpointError, ConfigError, TrainingError, TripleParseError
from .evaluator import case_study, evaluate, write_case_study_csv
from .scoring import ModelConfig, init_embeddings
from .toy import make_family_kg, write_dataset
from .trainer import TrainConfig, train, write_loss_csv

DATA_ENV = "SEGKGE_DATA"
CASE_STUDY_FNS = ("f1", "f2", "f4")
RUNTIME_ERRORS = (OSError, TrainingError, TripleParseError, CheckpointError, KeyError, ValueError)


class UsageError(Exception):
    """Bad flag combination detected after argument parsing."""


# ---------------------------------------------------------------- manifest


@dataclasses.dataclass
class RunManifest:
    """Everything needed to rerun a command, written as ``key=value`` lines."""

    command: str
    config: dict = dataclasses.field(default_factory=dict)
    paths: dict = dataclasses.field(default_factory=dict)
    build: str = ""
    timings: dict = dataclasses.field(default_factory=dict)

    def lines(self):
        yield f"command={self.command}"
        yield f"build={self.build}"
        for key, value in self.config.items():
            yield f"{key}={_format_value(value)}"
        for key, value in self.paths.items():
            yield f"{key}={value}"
        for key, value in self.timings.items():
            yield f"time_{key}={value:.6f}"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("".join(line + "\n" for line in self.lines()))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def read_manifest(path) -> dict:
    """Parse ``key=value`` lines into strings; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key] = value
    return out


def _train_defaults_from_manifest(path) -> dict:
    raw = read_manifest(path)
    defaults = {}
    for f in dataclasses.fields(TrainConfig):
        if f.name not in raw:
            continue
        value = raw[f.name]
        default = f.default
        if isinstance(default, bool):
            defaults[f.name] = value == "true"
        else:
            defaults[f.name] = type(default)(value)
    if "data" in raw:
        defaults["data"] = raw["data"]
    return defaults


def build_id() -> str:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True, text=True, timeout=5,
        )
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{version}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return version


# ---------------------------------------------------------------- commands


def _need_data(args) -> str:
    if not args.data:
        raise UsageError(f"no dataset directory: pass --data or set {DATA_ENV}")
    return args.data


def cmd_train(args) -> int:
    data = _need_data(args)
    cfg = TrainConfig(
        k=args.k, d=args.d, lam=args.lam, eta=args.eta, lr=args.lr, epochs=args.epochs,
        seed=args.seed, workers=args.workers, filter_negatives=args.filter_negatives,
        epsilon=args.epsilon,
    )
    os.makedirs(args.out, exist_ok=True)
    ckpt_path = os.path.join(args.out, "checkpoint.txt")
    loss_path = os.path.join(args.out, "loss.csv")
    manifest = RunManifest(
        "train", cfg.to_dict(),
        {"data": data, "checkpoint": ckpt_path, "loss_csv": loss_path},
        build_id(),
    )

    start = time.perf_counter()
    ds = load_dataset(data)
    manifest.timings["load"] = time.perf_counter() - start
    names = (ds.vocab.id_to_entity, ds.vocab.id_to_relation)

    def on_epoch(stats, table):
        if args.checkpoint_every and stats.epoch % args.checkpoint_every == 0 and stats.epoch < cfg.epochs:
            save_checkpoint(os.path.join(args.out, f"checkpoint-epoch{stats.epoch}.txt"), table, cfg.model, *names)

    start = time.perf_counter()
    if cfg.epochs == 0:
        table = init_embeddings(ds.vocab.num_entities, ds.vocab.num_relations, cfg.model, cfg.seed)
        history = []
    else:
        known = ds.filter_index if cfg.filter_negatives else None
        result = train(ds.train, cfg, ds.vocab.num_entities, ds.vocab.num_relations,
                       known=known, on_epoch=on_epoch)
        table, history = result.table, result.history
    manifest.timings["train"] = time.perf_counter() - start

    start = time.perf_counter()
    save_checkpoint(ckpt_path, table, cfg.model, *names)
    write_loss_csv(loss_path, history)
    manifest.timings["save"] = time.perf_counter() - start
    manifest.write(os.path.join(args.out, "manifest.txt"))
    if history:
        print(f"trained {len(history)} epochs, final mean loss {history[-1].mean_loss:.6f}")
    print(f"checkpoint written to {ckpt_path}")
    return 0


def _check_vocab(ckpt: Checkpoint, vocab) -> None:
    counts = (len(ckpt.entity_names), len(ckpt.relation_names))
    expected = (vocab.num_entities, vocab.num_relations)
    if counts != expected:
        raise CheckpointError(
            f"checkpoint has {counts[0]} entities and {counts[1]} relations, "
            f"dataset has {expected[0]} entities and {expected[1]} relations"
        )
    if ckpt.entity_names != vocab.id_to_entity or ckpt.relation_names != vocab.id_to_relation:
        raise CheckpointError("checkpoint names are not in dataset vocabulary order")


def cmd_evaluate(args) -> int:
    data = _need_data(args)
    timings = {}
    start = time.perf_counter()
    ds = load_dataset(data)
    ckpt = load_checkpoint(args.checkpoint)
    _check_vocab(ckpt, ds.vocab)
    timings["load"] = time.perf_counter() - start

    start = time.perf_counter()
    flt = None if args.raw else ds.filter_index
    result = evaluate(ds.split(args.split), ckpt.table, ckpt.cfg, flt, args.fn)
    timings["evaluate"] = time.perf_counter() - start

    mode = "raw" if args.raw else "filtered"
    print(f"{mode} ranking, fn={args.fn}, split={args.split}")
    print(result.format_table())
    if args.csv:
        result.write_csv(args.csv)
    if args.manifest:
        RunManifest(
            "evaluate", {"fn": args.fn, "split": args.split, "raw": args.raw},
            {"data": data, "checkpoint": args.checkpoint, "csv": args.csv or ""},
            build_id(), timings,
        ).write(args.manifest)
    return 0


def cmd_case_study(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    ent = {name: i for i, name in enumerate(ckpt.entity_names)}
    rel = {name: i for i, name in enumerate(ckpt.relation_names)}
    encoded = []
    for h, r, t in read_string_triples(args.triples):
        for name, table, kind in ((h, ent, "entity"), (r, rel, "relation"), (t, ent, "entity")):
            if name not in table:
                raise KeyError(f"unknown {kind} {name!r}")
        encoded.append((ent[h], rel[r], ent[t]))

    fns = CASE_STUDY_FNS if args.fn == "all" else (args.fn,)
    rows = []
    for fn in fns:
        rows += case_study(encoded, ckpt.table, ckpt.cfg, fn)
    names = ["\t".join((ckpt.entity_names[h], ckpt.relation_names[r], ckpt.entity_names[t])) for h, r, t in encoded]
    for i, row in enumerate(rows):
        row.triple = names[i % len(encoded)]
    if args.csv:
        write_case_study_csv(args.csv, rows)
    else:
        write_case_study_csv(sys.stdout, rows)
    if args.manifest:
        RunManifest(
            "case-study", {"fn": args.fn},
            {"checkpoint": args.checkpoint, "triples": args.triples, "csv": args.csv or ""},
            build_id(),
        ).write(args.manifest)
    return 0


def bench_k(ks, dim: int, num_triples: int = 2000, repeats: int = 10, rounds: int = 5,
            num_entities: int = 1000, num_relations: int = 20, triples=None, seed: int = 0):
    """Seconds for ``repeats`` score+gradient passes over a triple batch, per k.

    Rounds interleave the ks and the fastest round is kept, which damps
    scheduler noise on shared machines.
    """
    for k in ks:
        ModelConfig(d=dim, k=k)
    rng = np.random.default_rng(seed)
    if triples is None:
        triples = np.stack([
            rng.integers(0, num_entities, num_triples),
            rng.integers(0, num_relations, num_triples),
            rng.integers(0, num_entities, num_triples),
        ], axis=1)
    triples = np.ascontiguousarray(triples, dtype=np.int64)
    num_entities = int(max(num_entities, triples[:, [0, 2]].max() + 1))
    num_relations = int(max(num_relations, triples[:, 1].max() + 1))
    table = init_embeddings(num_entities, num_relations, ModelConfig(d=dim, k=1), seed)
    for k in ks:
        _kernels.bench_ops(table.entities, table.relations, triples[:1], k, 1)  # compile and warm
    best = {k: float("inf") for k in ks}
    for _ in range(rounds):
        for k in ks:
            start = time.perf_counter()
            _kernels.bench_ops(table.entities, table.relations, triples, k, repeats)
            best[k] = min(best[k], time.perf_counter() - start)
    return [(k, best[k]) for k in ks]


def cmd_bench_k(args) -> int:
    triples = None
    sizes = {}
    if args.data:
        ds = load_dataset(args.data)
        rng = np.random.default_rng(args.seed)
        pick = rng.integers(0, len(ds.train), args.triples) if len(ds.train) else []
        triples = ds.train.triples[pick]
        sizes = {"num_entities": ds.vocab.num_entities, "num_relations": ds.vocab.num_relations}
    start = time.perf_counter()
    rows = bench_k(args.ks, args.dim, args.triples, args.repeats, args.rounds,
                   triples=triples, seed=args.seed, **sizes)
    elapsed = time.perf_counter() - start
    out = open(args.csv, "w", encoding="utf-8") if args.csv else sys.stdout
    try:
        out.write("k,seconds\n")
        for k, seconds in rows:
            out.write(f"{k},{seconds:.6f}\n")
    finally:
        if args.csv:
            out.close()
    if args.manifest:
        RunManifest(
            "bench-k",
            {"ks": ",".join(map(str, args.ks)), "dim": args.dim, "triples": args.triples,
             "repeats": args.repeats, "rounds": args.rounds, "seed": args.seed},
            {"data": args.data or "", "csv": args.csv or ""},
            build_id(), {"bench": elapsed},
        ).write(args.manifest)
    return 0


def cmd_make_toy(args) -> int:
    splits, ds = make_family_kg(n_families=args.families, seed=args.seed)
    write_dataset(args.out, splits)
    print(f"wrote {ds.vocab.num_entities} entities, {len(ds.train)}/{len(ds.valid)}/{len(ds.test)} "
          f"train/valid/test triples to {args.out}")
    return 0


# ---------------------------------------------------------------- parsing


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def build_parser(train_defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segkge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)
    data_help = f"dataset directory with train.txt/valid.txt/test.txt (default: ${DATA_ENV})"
    default_data = os.environ.get(DATA_ENV)

    p = sub.add_parser("train", help="train f4 embeddings")
    p.add_argument("--data", default=default_data, help=data_help)
    p.add_argument("--k", type=int, default=4, help="number of segments")
    p.add_argument("--dim", dest="d", type=int, default=400, help="embedding size")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01, help="L2 weight")
    p.add_argument("--neg", dest="eta", type=int, default=100, help="negatives per positive")
    p.add_argument("--lr", type=float, default=0.1, help="AdaGrad learning rate")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads; only 1 is deterministic")
    p.add_argument("--epsilon", type=float, default=1e-8, help="AdaGrad denominator guard")
    p.add_argument("--filter-negatives", action="store_true",
                   help="skip sampled negatives that are known triples in any split")
    p.add_argument("--out", default="run", help="output directory (default: run)")
    p.add_argument("--checkpoint-every", type=int, default=0, metavar="N",
                   help="also checkpoint every N epochs")
    p.add_argument("--from-manifest", metavar="PATH",
                   help="take defaults from a previous run's manifest; explicit flags win")
    p.set_defaults(func=cmd_train, **(train_defaults or {}))

    p = sub.add_parser("evaluate", help="filtered link-prediction metrics")
    p.add_argument("--data", default=default_data, help=data_help)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--fn", choices=("f1", "f2", "f3", "f4"), default="f4", help="scoring function")
    p.add_argument("--split", choices=("test", "valid", "train"), default="test")
    p.add_argument("--raw", action="store_true", help="disable filtering (debug)")
    p.add_argument("--csv", help="write metric,side,value rows here")
    p.add_argument("--manifest", help="write a run manifest here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("case-study", help="forward/reverse probabilities of listed triples")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--triples", required=True, help="tab-separated h r t file")
    p.add_argument("--fn", choices=CASE_STUDY_FNS + ("all",), default="all")
    p.add_argument("--csv", help="output path (default: stdout)")
    p.add_argument("--manifest", help="write a run manifest here")
    p.set_defaults(func=cmd_case_study)

    p = sub.add_parser("bench-k", help="score+gradient time as a function of k")
    p.add_argument("--data", default=default_data, help="sample triples from this dataset (optional)")
    p.add_argument("--ks", type=_int_list, default=[1, 4, 8, 16, 20], help="comma-separated k values")
    p.add_argument("--dim", type=int, default=400)
    p.add_argument("--triples", type=_positive_int, default=2000, help="batch size")
    p.add_argument("--repeats", type=_positive_int, default=10, help="passes per timing")
    p.add_argument("--rounds", type=_positive_int, default=5, help="timings per k; the fastest is kept")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="output path (default: stdout)")
    p.add_argument("--manifest", help="write a run manifest here")
    p.set_defaults(func=cmd_bench_k)

    p = sub.add_parser("make-toy", help="write the synthetic family dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--families", type=_positive_int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_toy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    if args.command == "train" and args.from_manifest:
        try:
            defaults = _train_defaults_from_manifest(args.from_manifest)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read manifest: {exc}")
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        parser.error(str(exc))
    except RUNTIME_ERRORS as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
