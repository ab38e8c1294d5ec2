"""Skip-gram embeddings with negative sampling over the walk corpus.

Training follows the classic word2vec recipe: float32 vectors, a full
symmetric context window, per-token linear learning-rate decay down to
1e-4 of the initial rate, negatives drawn proportional to count^0.75,
and an exact sigmoid (no lookup table). Dot products and gradient terms
accumulate in float64; vector stores round to float32.

The hot loop is a compiled kernel driven by an explicit 64-bit LCG so a
single-worker run is bit-for-bit reproducible. With several workers the
kernel runs lock-free on shared matrices, which is faster but not
deterministic; single worker is the default.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import EmptyCorpus, EmptyVocab, InvalidConfig, MalformedLine, OutOfVocabulary
from .seeding import derive_seed
from .walks import Walk, _decode_token, _encode_token

DEFAULT_DIMS = 500
DEFAULT_WINDOW = 5
DEFAULT_NEGATIVES = 5
DEFAULT_EPOCHS = 5
DEFAULT_LEARNING_RATE = 0.025
LR_FLOOR_FACTOR = 1e-4
NEGATIVE_POWER = 0.75

_LCG_MULT = np.uint64(2862933555777941757)
_LCG_ADD = np.uint64(3037000493)
_TO_DOUBLE = 2.0 ** -53


@dataclass(frozen=True, slots=True)
class TrainConfig:
    dims: int = DEFAULT_DIMS
    window: int = DEFAULT_WINDOW
    negatives: int = DEFAULT_NEGATIVES
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    min_count: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise InvalidConfig(f"dims must be >= 1, got {self.dims}")
        if self.window < 1:
            raise InvalidConfig(f"window must be >= 1, got {self.window}")
        if self.negatives < 0:
            raise InvalidConfig(f"negatives must be >= 0, got {self.negatives}")
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise InvalidConfig(f"learning rate must be > 0, got {self.learning_rate}")
        if self.min_count < 1:
            raise InvalidConfig(f"min count must be >= 1, got {self.min_count}")


class Vocab:
    """Corpus tokens ordered by (count desc, token), with sampling weights."""

    __slots__ = ("tokens", "index", "counts", "neg_cum")

    def __init__(self, tokens: Sequence[str], counts: Sequence[int]):
        if not tokens:
            raise EmptyVocab("vocabulary is empty")
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.index: dict[str, int] = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise InvalidConfig("vocabulary tokens must be unique")
        self.counts: np.ndarray = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (len(self.tokens),) or (self.counts < 1).any():
            raise InvalidConfig("each vocabulary token needs a positive count")
        weights = self.counts.astype(np.float64) ** NEGATIVE_POWER
        self.neg_cum: np.ndarray = np.cumsum(weights)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocab(corpus: Iterable[Walk], min_count: int = 1) -> Vocab:
    """Count tokens and keep those seen at least ``min_count`` times."""
    counts: dict[str, int] = {}
    for walk in corpus:
        for token in walk:
            counts[token] = counts.get(token, 0) + 1
    kept = sorted(
        ((tok, n) for tok, n in counts.items() if n >= min_count),
        key=lambda kv: (-kv[1], kv[0]),
    )
    if not kept:
        raise EmptyVocab(
            f"no token reaches min count {min_count}"
            if counts
            else "corpus contains no tokens"
        )
    return Vocab([tok for tok, _ in kept], [n for _, n in kept])


class EmbeddingModel:
    """Trained vectors: ``input_vectors`` are the embeddings proper."""

    __slots__ = ("vocab", "input_vectors", "output_vectors", "config")

    def __init__(
        self,
        vocab: Vocab,
        input_vectors: np.ndarray,
        output_vectors: np.ndarray,
        config: TrainConfig,
    ):
        expect = (len(vocab), config.dims)
        for name, mat in (("input", input_vectors), ("output", output_vectors)):
            if mat.shape != expect or mat.dtype != np.float32:
                raise InvalidConfig(f"{name} matrix must be float32 with shape {expect}")
        self.vocab = vocab
        self.input_vectors = input_vectors
        self.output_vectors = output_vectors
        self.config = config

    @property
    def dims(self) -> int:
        return self.config.dims

    def vector(self, token: str) -> np.ndarray:
        try:
            row = self.vocab.index[token]
        except KeyError:
            raise OutOfVocabulary(token) from None
        return self.input_vectors[row].copy()


def vector(model: "EmbeddingModel | WordVectors", token: str) -> np.ndarray:
    return model.vector(token)


def sgns_loss_and_grad(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss and exact gradients for one positive pair plus its negatives.

    loss = -ln sigmoid(context . center) - sum_n ln sigmoid(-neg_n . center)

    Returns (loss, d/d center, d/d context, d/d negatives). All math in
    float64; inputs may be any float dtype.
    """
    v = np.asarray(center, dtype=np.float64)
    u = np.asarray(context, dtype=np.float64)
    negs = np.asarray(negatives, dtype=np.float64)
    if negs.ndim == 1:
        negs = negs.reshape(0, v.size) if negs.size == 0 else negs.reshape(1, -1)
    s_pos = _sigmoid(u @ v)
    s_negs = _sigmoid(negs @ v)
    loss = -_log_sigmoid(u @ v) - np.sum(_log_sigmoid(-(negs @ v)))
    grad_center = (s_pos - 1.0) * u + s_negs @ negs
    grad_context = (s_pos - 1.0) * v
    grad_negatives = s_negs[:, None] * v[None, :]
    return float(loss), grad_center, grad_context, grad_negatives


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _log_sigmoid(x):
    # stable: -log(1 + exp(-x)) for x >= 0, x - log(1 + exp(x)) otherwise
    return -np.logaddexp(0.0, -x)


@njit(cache=True, nogil=True, fastmath=False)
def _sgns_epoch(
    tokens,
    offsets,
    input_vecs,
    output_vecs,
    neg_cum,
    window,
    negatives,
    initial_lr,
    lr_floor,
    total_train_tokens,
    processed_before,
    state,
):  # pragma: no cover - exercised via train_skipgram
    dims = input_vecs.shape[1]
    vocab_size = neg_cum.shape[0]
    total_weight = neg_cum[vocab_size - 1]
    neu1e = np.zeros(dims, dtype=np.float64)
    processed = processed_before
    min_lr = initial_lr * lr_floor
    for w in range(offsets.shape[0] - 1):
        start = offsets[w]
        end = offsets[w + 1]
        for ci in range(start, end):
            lr = initial_lr * (1.0 - processed / total_train_tokens)
            if lr < min_lr:
                lr = min_lr
            processed += 1
            center = tokens[ci]
            lo = ci - window
            if lo < start:
                lo = start
            hi = ci + window
            if hi > end - 1:
                hi = end - 1
            for cj in range(lo, hi + 1):
                if cj == ci:
                    continue
                for j in range(dims):
                    neu1e[j] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        target = tokens[cj]
                        label = 1.0
                    else:
                        state = state * _LCG_MULT + _LCG_ADD
                        r = np.float64(state >> np.uint64(11)) * _TO_DOUBLE
                        x = r * total_weight
                        a = 0
                        b = vocab_size - 1
                        while a < b:
                            mid = (a + b) // 2
                            if neg_cum[mid] > x:
                                b = mid
                            else:
                                a = mid + 1
                        target = a
                        label = 0.0
                    f = 0.0
                    for j in range(dims):
                        f += np.float64(input_vecs[center, j]) * np.float64(
                            output_vecs[target, j]
                        )
                    g = (label - 1.0 / (1.0 + np.exp(-f))) * lr
                    for j in range(dims):
                        u_old = np.float64(output_vecs[target, j])
                        neu1e[j] += g * u_old
                        output_vecs[target, j] = np.float32(
                            u_old + g * np.float64(input_vecs[center, j])
                        )
                for j in range(dims):
                    input_vecs[center, j] = np.float32(
                        np.float64(input_vecs[center, j]) + neu1e[j]
                    )
    return processed


def encode_corpus(corpus: Iterable[Walk], vocab: Vocab) -> tuple[np.ndarray, np.ndarray]:
    """Map walks to vocabulary rows, dropping unknown tokens.

    Returns (flat token ids, walk offsets); walk ``w`` spans
    ``tokens[offsets[w]:offsets[w+1]]``. Walks that lose all their tokens
    vanish entirely.
    """
    flat: list[int] = []
    offsets: list[int] = [0]
    index = vocab.index
    for walk in corpus:
        ids = [index[tok] for tok in walk if tok in index]
        if ids:
            flat.extend(ids)
            offsets.append(len(flat))
    return np.asarray(flat, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def initial_vectors(vocab_size: int, config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(derive_seed(config.seed, "sgns-init"))
    bound = 0.5 / config.dims
    input_vecs = rng.uniform(-bound, bound, size=(vocab_size, config.dims)).astype(np.float32)
    output_vecs = np.zeros((vocab_size, config.dims), dtype=np.float32)
    return input_vecs, output_vecs


def train_skipgram(
    corpus: Sequence[Walk],
    vocab: Vocab,
    config: TrainConfig,
    workers: int = 1,
) -> EmbeddingModel:
    """Train embeddings over the corpus.

    ``workers=1`` (the default) is deterministic for a given corpus,
    vocabulary, and config. More workers update the shared matrices
    concurrently without locks; throughput scales but exact float results
    vary run to run.
    """
    if workers < 1:
        raise InvalidConfig(f"workers must be >= 1, got {workers}")
    tokens, offsets = encode_corpus(corpus, vocab)
    if tokens.size == 0:
        raise EmptyCorpus("no walk tokens are in the vocabulary")
    input_vecs, output_vecs = initial_vectors(len(vocab), config)
    total_train_tokens = np.float64(tokens.size) * config.epochs + 1.0

    n_walks = offsets.shape[0] - 1
    chunk_count = min(workers, n_walks)
    bounds = np.linspace(0, n_walks, chunk_count + 1).astype(np.int64)
    for epoch in range(config.epochs):
        jobs = []
        for chunk in range(chunk_count):
            w_lo, w_hi = bounds[chunk], bounds[chunk + 1]
            if w_lo == w_hi:
                continue
            chunk_offsets = offsets[w_lo : w_hi + 1]
            processed_before = np.int64(epoch) * tokens.size + int(offsets[w_lo])
            state = np.uint64(derive_seed(config.seed, "sgns-epoch", epoch, chunk) | 1)
            jobs.append((chunk_offsets, processed_before, state))
        if len(jobs) == 1:
            chunk_offsets, processed_before, state = jobs[0]
            _sgns_epoch(
                tokens, chunk_offsets, input_vecs, output_vecs, vocab.neg_cum,
                config.window, config.negatives, config.learning_rate,
                LR_FLOOR_FACTOR, total_train_tokens, processed_before, state,
            )
        else:
            threads = [
                threading.Thread(
                    target=_sgns_epoch,
                    args=(
                        tokens, chunk_offsets, input_vecs, output_vecs, vocab.neg_cum,
                        config.window, config.negatives, config.learning_rate,
                        LR_FLOOR_FACTOR, total_train_tokens, processed_before, state,
                    ),
                )
                for chunk_offsets, processed_before, state in jobs
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
    return EmbeddingModel(vocab, input_vecs, output_vecs, config)


# ------------------------------------------------------------ persistence

_MODEL_HEADER = "embedding-model 1"


def _fmt(x: float) -> str:
    # %.17g round-trips float64; float32 data is exact under it too
    return "%.17g" % x


def save_model(model: EmbeddingModel) -> str:
    cfg = model.config
    lines = [
        _MODEL_HEADER,
        f"{cfg.dims} {cfg.window} {cfg.negatives} {cfg.epochs} {_fmt(cfg.learning_rate)} {cfg.min_count} {cfg.seed}",
        str(len(model.vocab)),
    ]
    for tok, count in zip(model.vocab.tokens, model.vocab.counts):
        lines.append(f"{_encode_token(tok)} {count}")
    for mat in (model.input_vectors, model.output_vectors):
        for row in mat:
            lines.append(" ".join(_fmt(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def load_model(text: str) -> EmbeddingModel:
    lines = text.split("\n")
    if not lines or lines[0] != _MODEL_HEADER:
        raise MalformedLine(1, f"expected header {_MODEL_HEADER!r}")
    try:
        d, w, k, e, lr, mc, seed = lines[1].split(" ")
        config = TrainConfig(
            dims=int(d), window=int(w), negatives=int(k), epochs=int(e),
            learning_rate=float(lr), min_count=int(mc), seed=int(seed),
        )
        vocab_size = int(lines[2])
    except (ValueError, IndexError):
        raise MalformedLine(2, "bad config or vocabulary size line") from None
    tokens: list[str] = []
    counts: list[int] = []
    row = 3
    try:
        for _ in range(vocab_size):
            tok, cnt = lines[row].rsplit(" ", 1)
            tokens.append(_decode_token(tok))
            counts.append(int(cnt))
            row += 1
        mats = []
        for _ in range(2):
            mat = np.empty((vocab_size, config.dims), dtype=np.float32)
            for i in range(vocab_size):
                vals = lines[row].split(" ")
                if len(vals) != config.dims:
                    raise ValueError(f"expected {config.dims} values, got {len(vals)}")
                mat[i] = np.asarray([float(v) for v in vals], dtype=np.float32)
                row += 1
            mats.append(mat)
    except (ValueError, IndexError) as exc:
        raise MalformedLine(row + 1, str(exc)) from None
    return EmbeddingModel(Vocab(tokens, counts), mats[0], mats[1], config)


class WordVectors:
    """Token-to-vector lookup loaded from the plain text vector format."""

    __slots__ = ("tokens", "index", "matrix")

    def __init__(self, tokens: Sequence[str], matrix: np.ndarray):
        self.tokens = tuple(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        self.matrix = matrix

    @property
    def dims(self) -> int:
        return self.matrix.shape[1]

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.matrix[self.index[token]].copy()
        except KeyError:
            raise OutOfVocabulary(token) from None


def write_word2vec(model: EmbeddingModel) -> str:
    """Plain text vectors: a count header, then one token row per line."""
    lines = [f"{len(model.vocab)} {model.dims}"]
    for i, tok in enumerate(model.vocab.tokens):
        row = " ".join(_fmt(float(x)) for x in model.input_vectors[i])
        lines.append(f"{_encode_token(tok)} {row}")
    return "\n".join(lines) + "\n"


def read_word2vec(text: str) -> WordVectors:
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise MalformedLine(1, "empty vector file")
    try:
        vocab_size, dims = (int(x) for x in lines[0].split(" "))
    except ValueError:
        raise MalformedLine(1, "expected '<count> <dims>' header") from None
    if len(lines) - 1 != vocab_size:
        raise MalformedLine(1, f"expected {vocab_size} rows, found {len(lines) - 1}")
    tokens: list[str] = []
    matrix = np.empty((vocab_size, dims), dtype=np.float32)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) != dims + 1:
            raise MalformedLine(i, f"expected token plus {dims} values")
        tokens.append(_decode_token(parts[0]))
        try:
            matrix[i - 2] = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
        except ValueError as exc:
            raise MalformedLine(i, str(exc)) from None
    return WordVectors(tokens, matrix)
