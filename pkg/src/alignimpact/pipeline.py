"""End-to-end orchestration: diff, label, walk, embed, featurize, report.

The pipeline consumes three epoch snapshots of an aligned ontology pair.
Changes between the first two epochs become the training set and changes
between the last two become the test set. A single embedding space is
trained over the union of every snapshot so both sets share features.

All randomness is derived from one global seed, and with
``deterministic=True`` (the default) repeated runs write byte-identical
artifacts.
"""
from __future__ import annotations

import dataclasses
import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from .alignment import (
    Alignment,
    diff_alignments,
    parse_alignment,
    reify,
    statement_iris,
)
from .changes import (
    ChangeRecord,
    LabelingResult,
    Side,
    DEFAULT_RADIUS,
    diff_ontologies,
    label_changes,
    write_labeled_csv,
)
from .classify import (
    ClassifierSpec,
    DEFAULT_CLASSIFIERS,
    Dataset,
    Metrics,
    evaluate,
    featurize,
    fit,
    format_metrics_table,
    write_dataset_csv,
    write_metrics_csv,
)
from .embedding import (
    DEFAULT_DIMS,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NEGATIVES,
    DEFAULT_WINDOW,
    TrainConfig,
    build_vocab,
    train_skipgram,
    write_word2vec,
)
from .errors import AlignImpactError, InvalidConfig
from .rdf import Graph, TripleSet, build_graph, parse_ntriples
from .seeding import derive_seed
from .walks import DEFAULT_DEPTH, DEFAULT_WALKS_PER_ENTITY, WalkConfig, generate_walks, write_corpus

EPOCH_COUNT = 3
INPUT_SLOTS: tuple[str, ...] = tuple(
    f"{name}_t{t}" for t in range(EPOCH_COUNT) for name in ("o1", "o2", "align")
)


@dataclass(frozen=True, slots=True)
class EpochPaths:
    """File locations for one epoch: both ontologies plus their alignment."""

    left: Path
    right: Path
    alignment: Path


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Everything a full run needs, resolved and validated up front."""

    epochs: tuple[EpochPaths, ...]
    out_dir: Path
    seed: int = 0
    radius: int = DEFAULT_RADIUS
    walk_depth: int = DEFAULT_DEPTH
    walks_per_entity: int = DEFAULT_WALKS_PER_ENTITY
    dims: int = DEFAULT_DIMS
    window: int = DEFAULT_WINDOW
    negatives: int = DEFAULT_NEGATIVES
    embed_epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    min_count: int = 1
    classifiers: tuple[ClassifierSpec, ...] = ()
    deterministic: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        if len(self.epochs) != EPOCH_COUNT:
            raise InvalidConfig(
                f"expected {EPOCH_COUNT} epoch snapshots, got {len(self.epochs)}"
            )
        if not self.classifiers:
            raise InvalidConfig("at least one classifier is required")
        if self.workers < 1:
            raise InvalidConfig(f"workers must be >= 1, got {self.workers}")
        # remaining numeric fields are validated by the stage configs they feed


def default_specs(seed: int) -> tuple[ClassifierSpec, ...]:
    """The eight stock classifiers, each with its own derived seed."""
    return tuple(
        ClassifierSpec(kind, (), derive_seed(seed, f"classifier/{i}/{kind.value}"))
        for i, kind in enumerate(DEFAULT_CLASSIFIERS)
    )


@contextmanager
def _stage(name: str) -> Iterator[None]:
    """Tag package errors with the pipeline stage they escaped from."""
    try:
        yield
    except AlignImpactError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name  # type: ignore[attr-defined]
        raise


@dataclass(frozen=True, slots=True)
class _Snapshot:
    left: TripleSet
    right: TripleSet
    alignment: Alignment


def _load_snapshots(config: PipelineConfig) -> list[_Snapshot]:
    snapshots = []
    for epoch in config.epochs:
        for path in (epoch.left, epoch.right, epoch.alignment):
            if not path.is_file():
                raise InvalidConfig(f"input file does not exist: {path}")
        # blank node labels are scoped per ontology side, constant across
        # epochs: diffs then treat a reused label as the same node, while
        # the two ontologies can never collide in the union graph
        left = parse_ntriples(epoch.left.read_text(encoding="utf-8"), blank_scope=Side.LEFT.value)
        right = parse_ntriples(epoch.right.read_text(encoding="utf-8"), blank_scope=Side.RIGHT.value)
        alignment = parse_alignment(epoch.alignment.read_text(encoding="utf-8"))
        snapshots.append(_Snapshot(left, right, alignment))
    return snapshots


def _diff_pair(old: _Snapshot, new: _Snapshot) -> list[ChangeRecord]:
    changes = diff_ontologies(old.left, new.left, Side.LEFT)
    changes += diff_ontologies(old.right, new.right, Side.RIGHT)
    return changes


def _label_pair(
    changes: Sequence[ChangeRecord], old: _Snapshot, new: _Snapshot, radius: int
) -> LabelingResult:
    merged = build_graph([old.left, old.right, reify(old.alignment)])
    stmts = statement_iris(old.alignment)
    delta = diff_alignments(old.alignment, new.alignment)
    return label_changes(changes, merged, delta, stmts, radius)


def _union_graph(snapshots: Sequence[_Snapshot]) -> Graph:
    parts: list[TripleSet] = []
    for t, snap in enumerate(snapshots):
        parts.append(snap.left)
        parts.append(snap.right)
        # one reification namespace per epoch keeps statement nodes distinct
        parts.append(reify(snap.alignment, base_iri=f"urn:align:t{t}/"))
    return build_graph(parts)


def _split_summary(result: LabelingResult, dataset: Dataset, oov: int) -> dict:
    labeled = len(result.labeled)
    rows = len(dataset)
    positives = dataset.positives()
    return {
        "changes_labeled": labeled,
        "changes_no_anchor": result.no_anchor,
        "changes_out_of_radius": result.out_of_radius,
        "labeled_positives": result.positives,
        "oov_skipped": oov,
        "rows": rows,
        "positives": positives,
        "negatives": rows - positives,
        "positive_rate": positives / rows if rows else 0.0,
    }


def majority_accuracy(dataset: Dataset) -> float:
    """Accuracy of always predicting the dataset's larger class."""
    rows = len(dataset)
    if rows == 0:
        return 0.0
    positives = dataset.positives()
    return max(positives, rows - positives) / rows


def run_pipeline(config: PipelineConfig) -> Path:
    """Run every stage and return the metrics report path.

    Alongside the report the output directory receives the walk corpus,
    the embedding, labeled-change and feature CSVs for both splits, a
    plain-text metrics table, and a manifest with every seed, count, and
    hyperparameter needed to reproduce the numbers.
    """
    out = config.out_dir

    # build the stage configs up front so bad numbers fail before any work
    walk_seed = derive_seed(config.seed, "walks")
    walk_config = WalkConfig(
        depth=config.walk_depth,
        walks_per_entity=config.walks_per_entity,
        seed=walk_seed,
    )
    embed_seed = derive_seed(config.seed, "embedding")
    train_config = TrainConfig(
        dims=config.dims,
        window=config.window,
        negatives=config.negatives,
        epochs=config.embed_epochs,
        learning_rate=config.learning_rate,
        min_count=config.min_count,
        seed=embed_seed,
    )
    if config.radius < 0:
        raise InvalidConfig(f"radius must be >= 0, got {config.radius}")
    out.mkdir(parents=True, exist_ok=True)

    with _stage("load"):
        snapshots = _load_snapshots(config)

    with _stage("diff"):
        changes_train = _diff_pair(snapshots[0], snapshots[1])
        changes_test = _diff_pair(snapshots[1], snapshots[2])

    with _stage("label"):
        train_result = _label_pair(changes_train, snapshots[0], snapshots[1], config.radius)
        test_result = _label_pair(changes_test, snapshots[1], snapshots[2], config.radius)

    with _stage("walks"):
        graph = _union_graph(snapshots)
        walks = generate_walks(graph, walk_config)

    with _stage("embed"):
        vocab = build_vocab(walks, min_count=config.min_count)
        workers = 1 if config.deterministic else config.workers
        model = train_skipgram(walks, vocab, train_config, workers=workers)

    with _stage("featurize"):
        train_set, oov_train = featurize(train_result.labeled, model, dims=model.dims)
        test_set, oov_test = featurize(test_result.labeled, model, dims=model.dims)

    rows: list[tuple[str, Metrics]] = []
    with _stage("classify"):
        for spec in config.classifiers:
            rows.append((spec.label(), evaluate(fit(train_set, spec), test_set)))

    with _stage("report"):
        artifacts = {
            "walks": "walks.txt",
            "embedding": "embedding.vec",
            "labeled_train": "labeled_train.csv",
            "labeled_test": "labeled_test.csv",
            "features_train": "features_train.csv",
            "features_test": "features_test.csv",
            "metrics_csv": "metrics.csv",
            "metrics_table": "metrics.txt",
            "manifest": "manifest.json",
        }
        (out / artifacts["walks"]).write_text(write_corpus(walks), encoding="utf-8")
        (out / artifacts["embedding"]).write_text(write_word2vec(model), encoding="utf-8")
        (out / artifacts["labeled_train"]).write_text(
            write_labeled_csv(train_result.labeled), encoding="utf-8"
        )
        (out / artifacts["labeled_test"]).write_text(
            write_labeled_csv(test_result.labeled), encoding="utf-8"
        )
        (out / artifacts["features_train"]).write_text(
            write_dataset_csv(train_set), encoding="utf-8"
        )
        (out / artifacts["features_test"]).write_text(
            write_dataset_csv(test_set), encoding="utf-8"
        )
        report_path = out / artifacts["metrics_csv"]
        report_path.write_text(write_metrics_csv(rows), encoding="utf-8")
        (out / artifacts["metrics_table"]).write_text(
            format_metrics_table(rows), encoding="utf-8"
        )

        manifest = {
            "inputs": {
                f"{name}_t{t}": getattr(epoch, attr).name
                for t, epoch in enumerate(config.epochs)
                for name, attr in (("o1", "left"), ("o2", "right"), ("align", "alignment"))
            },
            "seed": config.seed,
            "radius": config.radius,
            "deterministic": config.deterministic,
            "workers": workers,
            "walks": {
                "depth": config.walk_depth,
                "walks_per_entity": config.walks_per_entity,
                "seed": walk_seed,
                "count": len(walks),
            },
            "embedding": {
                "dims": config.dims,
                "window": config.window,
                "negatives": config.negatives,
                "epochs": config.embed_epochs,
                "learning_rate": config.learning_rate,
                "min_count": config.min_count,
                "seed": embed_seed,
                "vocab_size": len(vocab),
            },
            "graph": {"nodes": len(graph)},
            "classifiers": [
                {
                    "kind": spec.kind.value,
                    "label": spec.label(),
                    "params": {k: list(v) if isinstance(v, tuple) else v for k, v in spec.resolved().items()},
                    "seed": spec.seed,
                }
                for spec in config.classifiers
            ],
            "train": _split_summary(train_result, train_set, oov_train),
            "test": _split_summary(test_result, test_set, oov_test),
            "baseline": {"majority_accuracy": majority_accuracy(test_set)},
            "results": [
                {
                    "classifier": label,
                    "accuracy": metrics.accuracy,
                    "affects": dataclasses.asdict(metrics.affects),
                    "no_effect": dataclasses.asdict(metrics.no_effect),
                }
                for label, metrics in rows
            ],
            "artifacts": artifacts,
        }
        (out / artifacts["manifest"]).write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return report_path
