"""Pipeline command-line interface.

Subcommands: validate, train, project, score, mine, report, synth, and
pipeline (all stages in order). Stages communicate only through files under
the workdir, with stable names, so an externally produced SOR file can take
the place of the training stage without code changes.

Configuration is one JSON file; defaults reproduce the reference settings
(batch 64, 900 steps, threshold 0.8, min_examples 4). Scalar fields can be
overridden by SENSEMINE_* environment variables (e.g. SENSEMINE_TRAIN_STEPS,
SENSEMINE_MIN_EXAMPLES) and --seed / --threads / --workdir flags.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
Failures print a one-line JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .corpus import (
    Corpus,
    MetaphorLabel,
    SenseInventory,
    load_corpus,
    load_sense_inventory,
    validate,
    write_corpus,
    write_sense_inventory,
)
from .embedstore import align, read_embeddings, write_embeddings
from .errors import ConfigError, DataError, NumericalError, SenseMineError
from .miner import (
    MineConfig,
    emit_dataset,
    flag_hard,
    pair_literals,
    select_hard_metaphors,
    write_unpairable_report,
)
from .overlap import read_score_table, score_all, write_score_table, write_skip_report
from .report import (
    bin_recall,
    corpus_stats,
    load_predictions,
    pca_scatter,
    phi_histogram,
    write_rows,
)
from .sortrain import TrainConfig, load_head, project, save_head, train
from .synth import SynthConfig, generate, write_ground_truth

log = logging.getLogger(__name__)

ENV_PREFIX = "SENSEMINE_"
_SECTIONS = ("train", "mine", "report", "synth", "paths")

DEFAULT_BIN_EDGES = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]


@dataclass
class ReportOptions:
    n_bins: int = 10
    format: str = "jsonl"
    bin_edges: list[float] | None = None
    predictions: str | None = None
    pca_lemma: str | None = None

    def __post_init__(self):
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"report format must be jsonl or csv, got {self.format!r}")
        if self.n_bins < 1:
            raise ConfigError(f"report n_bins must be >= 1, got {self.n_bins}")


@dataclass
class PipelineConfig:
    corpus_path: Path
    inventory_path: Path
    embeddings_path: Path
    workdir: Path
    min_examples: int = 4
    group_by_lemma: bool = True
    threads: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    mine: MineConfig = field(default_factory=MineConfig)
    report: ReportOptions = field(default_factory=ReportOptions)
    synth: SynthConfig | None = None
    raw: dict = field(default_factory=dict)


def _apply_env_overrides(raw: dict) -> dict:
    for key, value in sorted(os.environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        rest = key[len(ENV_PREFIX):].lower()
        section = next((s for s in _SECTIONS if rest.startswith(s + "_")), None)
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        if section is not None:
            raw.setdefault(section, {})[rest[len(section) + 1:]] = parsed
        elif rest == "seed":
            raw.setdefault("train", {})["seed"] = parsed
            raw.setdefault("synth", {})["seed"] = parsed
        else:
            raw[rest] = parsed
    return raw


def _build_section(cls, section: dict, name: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"config section {name!r}: {exc}") from None


def load_pipeline_config(
    path: str | Path,
    seed: int | None = None,
    threads: int | None = None,
    workdir: str | None = None,
    report_format: str | None = None,
) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    snapshot = json.loads(json.dumps(raw))
    raw = _apply_env_overrides(raw)
    if seed is not None:
        raw.setdefault("train", {})["seed"] = seed
        raw.setdefault("synth", {})["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    if workdir is not None:
        raw.setdefault("paths", {})["workdir"] = workdir
    if report_format is not None:
        raw.setdefault("report", {})["format"] = report_format

    known_top = {"paths", "min_examples", "group_by_lemma", "threads", "train", "mine", "report", "synth"}
    unknown = set(raw) - known_top
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    paths = raw.get("paths", {})
    for key in ("corpus", "inventory", "embeddings", "workdir"):
        if key not in paths:
            raise ConfigError(f"config paths section missing {key!r}")
    base = path.parent

    def resolve(p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    synth_section = raw.get("synth")
    return PipelineConfig(
        corpus_path=resolve(paths["corpus"]),
        inventory_path=resolve(paths["inventory"]),
        embeddings_path=resolve(paths["embeddings"]),
        workdir=resolve(paths["workdir"]),
        min_examples=int(raw.get("min_examples", 4)),
        group_by_lemma=bool(raw.get("group_by_lemma", True)),
        threads=int(raw.get("threads", 1)),
        train=_build_section(TrainConfig, raw.get("train", {}), "train"),
        mine=_build_section(MineConfig, raw.get("mine", {}), "mine"),
        report=_build_section(ReportOptions, raw.get("report", {}), "report"),
        synth=_build_section(SynthConfig, synth_section, "synth") if synth_section else None,
        raw=snapshot,
    )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require_file(path: Path, role: str) -> Path:
    if not path.is_file():
        raise DataError(f"missing {role} file: {path}")
    return path


def _write_manifest(cfg: PipelineConfig, command: str, inputs: list[Path]) -> None:
    manifest = {
        "artifact": {"name": "sensemine", "version": __version__},
        "command": command,
        "seed": cfg.train.seed,
        "config": cfg.raw,
        "inputs": {p.name: _sha256(p) for p in inputs if p.is_file()},
    }
    out = cfg.workdir / "manifest.json"
    out.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_inputs(cfg: PipelineConfig) -> tuple[Corpus, SenseInventory]:
    corpus = load_corpus(_require_file(cfg.corpus_path, "corpus"))
    inventory = load_sense_inventory(_require_file(cfg.inventory_path, "inventory"))
    return corpus, inventory


def cmd_validate(cfg: PipelineConfig) -> list[Path]:
    corpus, inventory = _load_inputs(cfg)
    report = validate(corpus, inventory, cfg.min_examples)
    payload = {
        "n_instances": report.n_instances,
        "n_words": report.n_words,
        "n_senses": report.n_senses,
        "unresolved_sense_ids": report.unresolved_sense_ids,
        "senses_below_min": [[s, n] for s, n in report.senses_below_min],
        "min_examples": cfg.min_examples,
        "ok": report.ok,
    }
    (cfg.workdir / "validation.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return [cfg.corpus_path, cfg.inventory_path]


def cmd_train(cfg: PipelineConfig) -> list[Path]:
    corpus, inventory = _load_inputs(cfg)
    matrix = read_embeddings(_require_file(cfg.embeddings_path, "embeddings"))
    data = align(corpus, matrix)
    head, train_log = train(data, inventory, cfg.train)
    save_head(cfg.workdir / "head.txt", head)
    log_payload = {
        "losses": train_log.losses,
        "steps": len(train_log.losses),
        "config": _jsonable(cfg.train),
    }
    (cfg.workdir / "train_log.json").write_text(
        json.dumps(log_payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return [cfg.corpus_path, cfg.inventory_path, cfg.embeddings_path]


def cmd_project(cfg: PipelineConfig) -> list[Path]:
    matrix = read_embeddings(_require_file(cfg.embeddings_path, "embeddings"))
    head = load_head(_require_file(cfg.workdir / "head.txt", "projection head"))
    write_embeddings(cfg.workdir / "sor.sore", project(head, matrix))
    return [cfg.embeddings_path, cfg.workdir / "head.txt"]


def cmd_score(cfg: PipelineConfig) -> list[Path]:
    corpus, inventory = _load_inputs(cfg)
    sor_path = _require_file(cfg.workdir / "sor.sore", "SOR embeddings")
    sor = read_embeddings(sor_path)
    table = score_all(
        sor, corpus, inventory, cfg.min_examples,
        group_by_lemma=cfg.group_by_lemma, threads=cfg.threads,
    )
    write_score_table(cfg.workdir / "scores.jsonl", table)
    write_skip_report(cfg.workdir / "score_skipped.jsonl", table)
    return [cfg.corpus_path, cfg.inventory_path, sor_path]


def cmd_mine(cfg: PipelineConfig) -> list[Path]:
    corpus, inventory = _load_inputs(cfg)
    scores_path = _require_file(cfg.workdir / "scores.jsonl", "score table")
    sor_path = _require_file(cfg.workdir / "sor.sore", "SOR embeddings")
    table = read_score_table(scores_path)
    sor = read_embeddings(sor_path)
    hard = flag_hard(table, cfg.mine.threshold)
    (cfg.workdir / "hard_ids.txt").write_text(
        "".join(iid + "\n" for iid in sorted(hard)), encoding="utf-8"
    )
    metaphors = select_hard_metaphors(hard, corpus, inventory)
    pairs, unpairable = pair_literals(metaphors, sor, corpus, inventory, table, cfg.mine)
    emit_dataset(pairs, corpus, inventory, cfg.workdir / "hmd.jsonl")
    write_unpairable_report(cfg.workdir / "unpairable.jsonl", unpairable)
    return [cfg.corpus_path, cfg.inventory_path, scores_path, sor_path]


def cmd_report(cfg: PipelineConfig) -> list[Path]:
    corpus, inventory = _load_inputs(cfg)
    inputs = [cfg.corpus_path, cfg.inventory_path]
    stats = corpus_stats(corpus, inventory)
    (cfg.workdir / "stats.json").write_text(
        json.dumps(dataclasses.asdict(stats), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    fmt = cfg.report.format
    scores_path = cfg.workdir / "scores.jsonl"
    if scores_path.is_file():
        inputs.append(scores_path)
        table = read_score_table(scores_path)
        counts = phi_histogram(table, cfg.report.n_bins)
        write_rows(
            cfg.workdir / f"phi_histogram.{fmt}",
            ("bin", "lo", "hi", "count"),
            [
                (b, b / cfg.report.n_bins, (b + 1) / cfg.report.n_bins, c)
                for b, c in enumerate(counts)
            ],
            fmt,
        )
        sor_path = cfg.workdir / "sor.sore"
        if sor_path.is_file():
            inputs.append(sor_path)
            sor = read_embeddings(sor_path)
            sense_of = {inst.instance_id: inst.sense_id for inst in corpus}
            lemma_of = {inst.instance_id: inst.lemma for inst in corpus}
            scored_by_lemma: dict[str, list[str]] = {}
            for sc in table.scores:
                scored_by_lemma.setdefault(lemma_of[sc.instance_id], []).append(sc.instance_id)
            lemma = cfg.report.pca_lemma
            if lemma is None and scored_by_lemma:
                lemma = max(scored_by_lemma, key=lambda w: (len(scored_by_lemma[w]), w))
            subset = scored_by_lemma.get(lemma, [])
            if len(subset) >= 2:
                rows = pca_scatter(sor, subset, sense_of)
                write_rows(cfg.workdir / f"pca.{fmt}", ("id", "sense", "x", "y"), rows, fmt)
        if cfg.report.predictions:
            pred_path = Path(cfg.report.predictions)
            if not pred_path.is_absolute():
                pred_path = cfg.workdir / pred_path
            inputs.append(_require_file(pred_path, "predictions"))
            predictions = load_predictions(pred_path)
            gold = {
                inst.instance_id: inventory.label_of(inst.sense_id) is MetaphorLabel.METAPHORICAL
                for inst in corpus
            }
            edges = cfg.report.bin_edges or DEFAULT_BIN_EDGES
            rep = bin_recall(table, predictions, gold, edges)
            payload = {
                "bin_edges": list(rep.bin_edges),
                "counts": list(rep.counts),
                "recalls": list(rep.recalls),
                "rank_correlation": rep.rank_correlation,
            }
            (cfg.workdir / "bin_recall.json").write_text(
                json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
    return inputs


def cmd_synth(cfg: PipelineConfig) -> list[Path]:
    if cfg.synth is None:
        raise ConfigError("config has no synth section")
    corpus, inventory, matrix, truth = generate(cfg.synth)
    write_corpus(cfg.workdir / "corpus.jsonl", corpus)
    write_sense_inventory(cfg.workdir / "inventory.jsonl", inventory)
    write_embeddings(cfg.workdir / "embeddings.sore", matrix)
    write_ground_truth(cfg.workdir / "ground_truth.txt", truth)
    return []


_STAGES = {
    "validate": cmd_validate,
    "train": cmd_train,
    "project": cmd_project,
    "score": cmd_score,
    "mine": cmd_mine,
    "report": cmd_report,
    "synth": cmd_synth,
}

_PIPELINE_ORDER = ("validate", "train", "project", "score", "mine", "report")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            out[f.name] = _jsonable(value)
        return out
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value"):
        return obj.value
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensemine",
        description="Mine hard-to-disambiguate metaphor instances from sense-annotated corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_STAGES, "pipeline"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config JSON file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=None, help="worker count for scoring")
        p.add_argument("--workdir", default=None, help="override workdir path")
        p.add_argument("--format", choices=("jsonl", "csv"), default=None,
                       help="report table format")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        cfg = load_pipeline_config(
            args.config, seed=args.seed, threads=args.threads,
            workdir=args.workdir, report_format=args.format,
        )
        cfg.workdir.mkdir(parents=True, exist_ok=True)
        inputs: list[Path] = []
        if args.command == "pipeline":
            for stage in _PIPELINE_ORDER:
                log.info("stage %s", stage)
                for p in _STAGES[stage](cfg):
                    if p not in inputs:
                        inputs.append(p)
            stage = "pipeline"
        else:
            inputs = _STAGES[args.command](cfg)
        _write_manifest(cfg, args.command, inputs)
    except SenseMineError as exc:
        code = 2 if isinstance(exc, ConfigError) else 4 if isinstance(exc, NumericalError) else 3
        print(
            json.dumps({"error": type(exc).__name__, "stage": stage, "message": str(exc)}),
            file=sys.stderr,
        )
        return code
    except FileNotFoundError as exc:
        print(
            json.dumps({"error": "FileNotFoundError", "stage": stage, "message": str(exc)}),
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
