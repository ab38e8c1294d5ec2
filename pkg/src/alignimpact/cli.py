"""Command-line entry points for every pipeline stage.

Each subcommand wraps one module so stages can run standalone, and the
``pipeline`` subcommand chains them all. Configuration comes from an
optional flat key=value file plus flags; a flag always wins over the
file. Paths read from a config file resolve relative to that file's
directory, paths given as flags resolve relative to the working
directory.

Exit codes: 0 success, 2 configuration or usage error, 3 unusable input
data, 4 internal error.
"""
from __future__ import annotations

import argparse
import pickle
import sys
import traceback
from pathlib import Path
from typing import Sequence

from .alignment import diff_alignments, parse_alignment, reify, statement_iris
from .changes import (
    Side,
    diff_ontologies,
    label_changes,
    read_changes_jsonl,
    read_labeled_csv,
    write_changes_jsonl,
    write_labeled_csv,
)
from .classify import (
    evaluate,
    featurize,
    fit,
    format_metrics_table,
    parse_classifier_spec,
    read_dataset_csv,
    write_dataset_csv,
    write_metrics_csv,
)
from .changes import DEFAULT_RADIUS
from .embedding import (
    DEFAULT_DIMS,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NEGATIVES,
    DEFAULT_WINDOW,
    TrainConfig,
    build_vocab,
    read_word2vec,
    train_skipgram,
    write_word2vec,
)
from .errors import AlignImpactError, ConfigError, DataError, InconsistentInput
from .pipeline import EpochPaths, INPUT_SLOTS, PipelineConfig, default_specs, run_pipeline
from .rdf import build_graph, parse_ntriples
from .seeding import derive_seed
from .synth import ScenarioConfig, generate_scenario, write_scenario
from .walks import (
    DEFAULT_DEPTH,
    DEFAULT_WALKS_PER_ENTITY,
    WalkConfig,
    generate_walks,
    read_corpus,
    write_corpus,
)


def read_config_file(path: Path, allowed: frozenset[str] | None = None) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments are skipped."""
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key = key.strip()
        if allowed is not None and key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
        values[key] = value.strip()
    return values


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _bool_flag(text: str) -> bool:
    # argparse only understands ArgumentTypeError from type callables
    try:
        return _parse_bool(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Settings:
    """Flag-over-config-over-default resolution for one subcommand."""

    def __init__(self, args: argparse.Namespace, allowed: frozenset[str] | None = None):
        config_path = getattr(args, "config", None)
        self.base = Path(".")
        self.values: dict[str, str] = {}
        if config_path is not None:
            path = Path(config_path)
            self.values = read_config_file(path, allowed)
            self.base = path.parent
        self.args = args

    def _convert(self, key: str, caster):
        raw = self.values[key]
        try:
            return caster(raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None

    def get(self, key: str, caster, default):
        """Flag value if given, else config value, else the default."""
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.values:
            return self._convert(key, caster)
        return default

    def path(self, key: str) -> Path | None:
        """A path-valued key; config values resolve against the config dir."""
        flag = getattr(self.args, key, None)
        if flag is not None:
            return Path(flag)
        if key in self.values:
            return self.base / self.values[key]
        return None

    def require_path(self, key: str) -> Path:
        value = self.path(key)
        if value is None:
            raise ConfigError(f"missing required setting {key!r}")
        return value


def _read_text(path: Path) -> str:
    if not path.is_file():
        raise ConfigError(f"input file does not exist: {path}")
    return path.read_text(encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ------------------------------------------------------------- subcommands

_SYNTH_KEYS = frozenset(
    {
        "concepts",
        "branching",
        "aligned_fraction",
        "volatile_fraction",
        "edits",
        "p_affect",
        "epochs",
        "seed",
        "out",
    }
)

_PIPELINE_KEYS = frozenset(INPUT_SLOTS) | frozenset(
    {
        "seed",
        "out",
        "radius",
        "dims",
        "walk_depth",
        "walks_per_entity",
        "window",
        "negatives",
        "embed_epochs",
        "learning_rate",
        "min_count",
        "classifiers",
        "deterministic",
        "workers",
    }
)


def _cmd_synth(args: argparse.Namespace) -> int:
    settings = _Settings(args, _SYNTH_KEYS)
    config = ScenarioConfig(
        concepts_per_ontology=settings.get("concepts", int, 1500),
        branching_factor=settings.get("branching", int, 3),
        aligned_fraction=settings.get("aligned_fraction", float, 0.7),
        volatile_fraction=settings.get("volatile_fraction", float, 0.24),
        edits_per_epoch=settings.get("edits", int, 500),
        p_affect=settings.get("p_affect", float, 0.97),
        epochs=settings.get("epochs", int, 3),
        seed=settings.get("seed", int, 0),
    )
    out_dir = settings.require_path("out")
    written = write_scenario(generate_scenario(config), out_dir)
    for path in written:
        print(path)
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    side = Side(args.side)
    old = parse_ntriples(_read_text(Path(args.old)), blank_scope=side.value)
    new = parse_ntriples(_read_text(Path(args.new)), blank_scope=side.value)
    changes = diff_ontologies(old, new, side)
    _write_text(Path(args.out), write_changes_jsonl(changes))
    print(f"changes={len(changes)}")
    return 0


def _cmd_label(args: argparse.Namespace) -> int:
    changes = []
    for path in args.changes:
        changes.extend(read_changes_jsonl(_read_text(Path(path))))
    left = parse_ntriples(_read_text(Path(args.o1)), blank_scope=Side.LEFT.value)
    right = parse_ntriples(_read_text(Path(args.o2)), blank_scope=Side.RIGHT.value)
    alignment_old = parse_alignment(_read_text(Path(args.align_old)))
    alignment_new = parse_alignment(_read_text(Path(args.align_new)))
    merged = build_graph([left, right, reify(alignment_old)])
    result = label_changes(
        changes,
        merged,
        diff_alignments(alignment_old, alignment_new),
        statement_iris(alignment_old),
        radius=args.radius,
    )
    _write_text(Path(args.out), write_labeled_csv(result.labeled))
    print(
        f"labeled={len(result.labeled)} positives={result.positives} "
        f"no_anchor={result.no_anchor} out_of_radius={result.out_of_radius}"
    )
    return 0


def _cmd_walks(args: argparse.Namespace) -> int:
    parts = []
    for i, path in enumerate(args.input):
        parts.append(parse_ntriples(_read_text(Path(path)), blank_scope=f"g{i}"))
    for i, path in enumerate(args.alignment or []):
        parts.append(reify(parse_alignment(_read_text(Path(path))), base_iri=f"urn:align:a{i}/"))
    graph = build_graph(parts)
    config = WalkConfig(
        depth=args.walk_depth,
        walks_per_entity=args.walks_per_entity,
        seed=derive_seed(args.seed, "walks"),
    )
    walks = generate_walks(graph, config)
    _write_text(Path(args.out), write_corpus(walks))
    print(f"walks={len(walks)}")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    corpus = read_corpus(_read_text(Path(args.corpus)))
    vocab = build_vocab(corpus, min_count=args.min_count)
    config = TrainConfig(
        dims=args.dims,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        min_count=args.min_count,
        seed=derive_seed(args.seed, "embedding"),
    )
    workers = 1 if args.deterministic else args.workers
    model = train_skipgram(corpus, vocab, config, workers=workers)
    _write_text(Path(args.out), write_word2vec(model))
    print(f"vocab={len(vocab)} dims={model.dims}")
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    labeled = read_labeled_csv(_read_text(Path(args.labeled)))
    vectors = read_word2vec(_read_text(Path(args.embedding)))
    dataset, skipped = featurize(labeled, vectors, dims=vectors.dims)
    _write_text(Path(args.out), write_dataset_csv(dataset))
    print(f"rows={len(dataset)} positives={dataset.positives()} oov_skipped={skipped}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    dataset = read_dataset_csv(_read_text(Path(args.features)))
    spec = parse_classifier_spec(args.classifier, seed=derive_seed(args.seed, f"classifier/{args.classifier}"))
    model = fit(dataset, spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("wb") as handle:
        pickle.dump({"label": spec.label(), "model": model}, handle)
    print(f"trained={spec.label()} rows={len(dataset)}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        raise ConfigError(f"input file does not exist: {model_path}")
    try:
        with model_path.open("rb") as handle:
            stored = pickle.load(handle)
    except Exception as exc:
        raise InconsistentInput(f"cannot load model file {model_path}: {exc}") from None
    if not isinstance(stored, dict) or "label" not in stored or "model" not in stored:
        raise InconsistentInput(f"not a model file written by train: {model_path}")
    dataset = read_dataset_csv(_read_text(Path(args.features)))
    rows = [(stored["label"], evaluate(stored["model"], dataset))]
    if args.out is not None:
        _write_text(Path(args.out), write_metrics_csv(rows))
    sys.stdout.write(format_metrics_table(rows))
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    settings = _Settings(args, _PIPELINE_KEYS)
    missing = [slot for slot in INPUT_SLOTS if settings.path(slot) is None]
    if missing:
        raise ConfigError(f"missing input path settings: {', '.join(missing)}")
    epochs = tuple(
        EpochPaths(
            left=settings.require_path(f"o1_t{t}"),
            right=settings.require_path(f"o2_t{t}"),
            alignment=settings.require_path(f"align_t{t}"),
        )
        for t in range(3)
    )
    seed = settings.get("seed", int, 0)
    if args.classifier:
        spec_texts = list(args.classifier)
    elif "classifiers" in settings.values:
        spec_texts = settings.values["classifiers"].split()
    else:
        spec_texts = []
    if spec_texts:
        specs = tuple(
            parse_classifier_spec(text, seed=derive_seed(seed, f"classifier/{i}/{text}"))
            for i, text in enumerate(spec_texts)
        )
    else:
        specs = default_specs(seed)
    config = PipelineConfig(
        epochs=epochs,
        out_dir=settings.require_path("out"),
        seed=seed,
        radius=settings.get("radius", int, DEFAULT_RADIUS),
        walk_depth=settings.get("walk_depth", int, DEFAULT_DEPTH),
        walks_per_entity=settings.get("walks_per_entity", int, DEFAULT_WALKS_PER_ENTITY),
        dims=settings.get("dims", int, DEFAULT_DIMS),
        window=settings.get("window", int, DEFAULT_WINDOW),
        negatives=settings.get("negatives", int, DEFAULT_NEGATIVES),
        embed_epochs=settings.get("embed_epochs", int, DEFAULT_EPOCHS),
        learning_rate=settings.get("learning_rate", float, DEFAULT_LEARNING_RATE),
        min_count=settings.get("min_count", int, 1),
        classifiers=specs,
        deterministic=settings.get("deterministic", _parse_bool, True),
        workers=settings.get("workers", int, 1),
    )
    report = run_pipeline(config)
    print(report)
    return 0


# ------------------------------------------------------------------ parser


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="global random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alignimpact",
        description="Predict which ontology changes affect alignment statements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic evolving ontology pair")
    p.add_argument("--config", default=None, help="key=value settings file")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--concepts", type=int, default=None, help="concepts per ontology")
    p.add_argument("--branching", type=int, default=None, help="maximum children per concept")
    p.add_argument("--aligned-fraction", dest="aligned_fraction", type=float, default=None)
    p.add_argument("--volatile-fraction", dest="volatile_fraction", type=float, default=None)
    p.add_argument("--edits", type=int, default=None, help="edits per epoch transition")
    p.add_argument("--p-affect", dest="p_affect", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None, help="number of snapshots")
    _add_seed(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("diff", help="diff two versions of one ontology")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--side", choices=[s.value for s in Side], required=True)
    p.add_argument("--out", required=True, help="changes JSONL output")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("label", help="label changes by alignment impact")
    p.add_argument("--changes", action="append", required=True, help="changes JSONL (repeatable)")
    p.add_argument("--o1", required=True, help="left ontology, old epoch")
    p.add_argument("--o2", required=True, help="right ontology, old epoch")
    p.add_argument("--align-old", dest="align_old", required=True)
    p.add_argument("--align-new", dest="align_new", required=True)
    p.add_argument("--radius", type=int, default=DEFAULT_RADIUS)
    p.add_argument("--out", required=True, help="labeled changes CSV output")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("walks", help="random walk corpus over a merged graph")
    p.add_argument("--input", action="append", required=True, help="ontology .nt file (repeatable)")
    p.add_argument("--alignment", action="append", default=None, help="alignment .tsv to reify (repeatable)")
    p.add_argument("--walk-depth", dest="walk_depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--walks-per-entity", dest="walks_per_entity", type=int, default=DEFAULT_WALKS_PER_ENTITY)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="walk corpus output")
    p.set_defaults(func=_cmd_walks)

    p = sub.add_parser("embed", help="train embeddings on a walk corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dims", type=int, default=DEFAULT_DIMS)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--negatives", type=int, default=DEFAULT_NEGATIVES)
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--min-count", dest="min_count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", type=_bool_flag, default=True, metavar="BOOL")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="vector file output")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("featurize", help="turn labeled changes into feature rows")
    p.add_argument("--labeled", required=True, help="labeled changes CSV")
    p.add_argument("--embedding", required=True, help="vector file")
    p.add_argument("--out", required=True, help="feature dataset CSV output")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="fit one classifier on a feature dataset")
    p.add_argument("--features", required=True, help="feature dataset CSV")
    p.add_argument("--classifier", required=True, help="KIND[:hyper=value,...]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file output")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a trained classifier on a dataset")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--features", required=True, help="feature dataset CSV")
    p.add_argument("--out", default=None, help="metrics CSV output")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--config", default=None, help="key=value settings file")
    _add_seed(p)
    p.add_argument("--dims", type=int, default=None)
    p.add_argument("--walk-depth", dest="walk_depth", type=int, default=None)
    p.add_argument("--walks-per-entity", dest="walks_per_entity", type=int, default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument(
        "--classifier",
        action="append",
        default=None,
        help="KIND[:hyper=value,...]; repeatable, overrides configured list",
    )
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--deterministic", type=_bool_flag, default=None, metavar="BOOL")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AlignImpactError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"[{stage}] " if stage else ""
        print(f"error: {prefix}{exc}", file=sys.stderr)
        if isinstance(exc, ConfigError):
            return 2
        if isinstance(exc, DataError):
            return 3
        return 4
    except Exception:  # pragma: no cover - safety net for unexpected bugs
        traceback.print_exc()
        return 4


if __name__ == "__main__":
    sys.exit(main())
