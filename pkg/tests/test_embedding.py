"""Vocabulary, the skip-gram objective, training, and persistence."""
import math

import numpy as np
import pytest

from alignimpact.embedding import (
    EmbeddingModel,
    TrainConfig,
    Vocab,
    WordVectors,
    build_vocab,
    encode_corpus,
    initial_vectors,
    load_model,
    read_word2vec,
    save_model,
    sgns_loss_and_grad,
    train_skipgram,
    vector,
    write_word2vec,
    _sgns_epoch,
)
from alignimpact.errors import (
    EmptyCorpus,
    EmptyVocab,
    InvalidConfig,
    MalformedLine,
    OutOfVocabulary,
)
from alignimpact.rdf import Graph, Term, Triple
from alignimpact.walks import WalkConfig, generate_walks

EX = "http://example.org/"


# ------------------------------------------------------------------ vocab

def test_build_vocab_orders_by_count_then_token():
    corpus = [("b", "a", "b"), ("c", "b", "a")]
    vocab = build_vocab(corpus)
    assert vocab.tokens == ("b", "a", "c")
    assert list(vocab.counts) == [3, 2, 1]
    assert vocab.index == {"b": 0, "a": 1, "c": 2}


def test_build_vocab_min_count():
    corpus = [("a", "a", "b")]
    vocab = build_vocab(corpus, min_count=2)
    assert vocab.tokens == ("a",)
    with pytest.raises(EmptyVocab):
        build_vocab(corpus, min_count=5)
    with pytest.raises(EmptyVocab):
        build_vocab([])


def test_negative_table_follows_three_quarter_power():
    vocab = Vocab(["a", "b"], [16, 1])
    weights = np.diff(np.concatenate([[0.0], vocab.neg_cum]))
    assert weights == pytest.approx([16 ** 0.75, 1.0])
    assert np.all(np.diff(vocab.neg_cum) > 0)


def test_config_defaults_and_validation():
    cfg = TrainConfig()
    assert (cfg.dims, cfg.window, cfg.negatives, cfg.epochs) == (500, 5, 5, 5)
    assert cfg.learning_rate == pytest.approx(0.025)
    assert cfg.min_count == 1
    for bad in (
        dict(dims=0), dict(window=0), dict(negatives=-1), dict(epochs=0),
        dict(learning_rate=0.0), dict(min_count=0),
    ):
        with pytest.raises(InvalidConfig):
            TrainConfig(**bad)


def test_encode_corpus_drops_unknown_and_compacts():
    vocab = build_vocab([("a", "b"), ("a",)])
    tokens, offsets = encode_corpus([("a", "zzz", "b"), ("zzz",), ("b",)], vocab)
    assert list(tokens) == [vocab.index["a"], vocab.index["b"], vocab.index["b"]]
    # the all-unknown walk disappears
    assert list(offsets) == [0, 2, 3]


# -------------------------------------------------------------- objective

def test_loss_at_zero_vectors():
    d = 6
    loss, *_ = sgns_loss_and_grad(np.zeros(d), np.zeros(d), np.zeros((3, d)))
    assert loss == pytest.approx(4 * math.log(2))
    loss1, *_ = sgns_loss_and_grad(np.zeros(d), np.zeros(d), np.zeros((1, d)))
    assert loss1 == pytest.approx(2 * math.log(2))


def test_loss_saturates_when_separated():
    v = np.array([10.0, 0.0])
    u = np.array([10.0, 0.0])       # strongly aligned positive
    negs = np.array([[-10.0, 0.0]])  # strongly repelled negative
    loss, gc, gx, gn = sgns_loss_and_grad(v, u, negs)
    assert loss < 1e-8
    assert np.abs(gc).max() < 1e-8


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    eps = 1e-6
    for _ in range(100):
        d = rng.integers(2, 8)
        k = rng.integers(0, 4)
        v = rng.normal(0, 1, d)
        u = rng.normal(0, 1, d)
        negs = rng.normal(0, 1, (k, d))
        loss, gc, gx, gn = sgns_loss_and_grad(v, u, negs)

        def numeric(arr, idx):
            plus = arr.copy()
            plus[idx] += eps
            minus = arr.copy()
            minus[idx] -= eps
            args = {
                "v": (plus if arr is v else v, minus if arr is v else v),
                "u": (plus if arr is u else u, minus if arr is u else u),
            }
            if arr is v:
                lp = sgns_loss_and_grad(plus, u, negs)[0]
                lm = sgns_loss_and_grad(minus, u, negs)[0]
            elif arr is u:
                lp = sgns_loss_and_grad(v, plus, negs)[0]
                lm = sgns_loss_and_grad(v, minus, negs)[0]
            return (lp - lm) / (2 * eps)

        for i in range(d):
            assert numeric(v, i) == pytest.approx(gc[i], rel=1e-5, abs=1e-7)
            assert numeric(u, i) == pytest.approx(gx[i], rel=1e-5, abs=1e-7)
        for n in range(k):
            for i in range(d):
                plus = negs.copy()
                plus[n, i] += eps
                minus = negs.copy()
                minus[n, i] -= eps
                lp = sgns_loss_and_grad(v, u, plus)[0]
                lm = sgns_loss_and_grad(v, u, minus)[0]
                numeric_g = (lp - lm) / (2 * eps)
                assert numeric_g == pytest.approx(gn[n, i], rel=1e-5, abs=1e-7)


def test_gradient_descent_reduces_loss():
    rng = np.random.default_rng(3)
    v = rng.normal(0, 0.5, 8)
    u = rng.normal(0, 0.5, 8)
    negs = rng.normal(0, 0.5, (3, 8))
    losses = []
    for _ in range(50):
        loss, gc, gx, gn = sgns_loss_and_grad(v, u, negs)
        losses.append(loss)
        v -= 0.1 * gc
        u -= 0.1 * gx
        negs -= 0.1 * gn
    assert losses[-1] < losses[0]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


# --------------------------------------------------------------- training

def small_corpus():
    return [("a", "b", "c", "d"), ("b", "c", "a", "e"), ("c", "d", "e", "a")] * 40


def test_training_deterministic_single_worker():
    corpus = small_corpus()
    vocab = build_vocab(corpus)
    cfg = TrainConfig(dims=12, window=2, negatives=3, epochs=2, seed=9)
    m1 = train_skipgram(corpus, vocab, cfg)
    m2 = train_skipgram(corpus, vocab, cfg)
    assert np.array_equal(m1.input_vectors, m2.input_vectors)
    assert np.array_equal(m1.output_vectors, m2.output_vectors)


def test_training_seed_changes_result():
    corpus = small_corpus()
    vocab = build_vocab(corpus)
    m1 = train_skipgram(corpus, vocab, TrainConfig(dims=12, window=2, epochs=1, seed=1))
    m2 = train_skipgram(corpus, vocab, TrainConfig(dims=12, window=2, epochs=1, seed=2))
    assert not np.array_equal(m1.input_vectors, m2.input_vectors)


def test_training_multi_worker_runs():
    corpus = small_corpus()
    vocab = build_vocab(corpus)
    model = train_skipgram(corpus, vocab, TrainConfig(dims=8, window=2, epochs=1, seed=4), workers=3)
    assert model.input_vectors.shape == (len(vocab), 8)
    assert np.isfinite(model.input_vectors).all()


def test_training_empty_cases():
    vocab = build_vocab([("a", "b")])
    with pytest.raises(EmptyCorpus):
        train_skipgram([("zzz", "qqq")], vocab, TrainConfig(dims=4))
    with pytest.raises(InvalidConfig):
        train_skipgram([("a", "b")], vocab, TrainConfig(dims=4), workers=0)


def _lcg_next(state: int) -> int:
    return (state * 2862933555777941757 + 3037000493) % (1 << 64)


def _reference_epoch(tokens, offsets, inp, out, neg_cum, window, negatives,
                     initial_lr, lr_floor, total_train_tokens, processed_before, state):
    """Pure Python mirror of the compiled kernel, float32 stores included."""
    dims = inp.shape[1]
    vocab_size = neg_cum.shape[0]
    total_weight = float(neg_cum[vocab_size - 1])
    processed = int(processed_before)
    min_lr = initial_lr * lr_floor
    state = int(state)
    for w in range(len(offsets) - 1):
        start, end = int(offsets[w]), int(offsets[w + 1])
        for ci in range(start, end):
            lr = initial_lr * (1.0 - processed / total_train_tokens)
            if lr < min_lr:
                lr = min_lr
            processed += 1
            center = int(tokens[ci])
            lo = max(ci - window, start)
            hi = min(ci + window, end - 1)
            for cj in range(lo, hi + 1):
                if cj == ci:
                    continue
                neu1e = np.zeros(dims, dtype=np.float64)
                for k in range(negatives + 1):
                    if k == 0:
                        target = int(tokens[cj])
                        label = 1.0
                    else:
                        state = _lcg_next(state)
                        r = float(state >> 11) * 2.0 ** -53
                        x = r * total_weight
                        a, b = 0, vocab_size - 1
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
                        f += float(inp[center, j]) * float(out[target, j])
                    g = (label - 1.0 / (1.0 + np.exp(-np.float64(f)))) * lr
                    for j in range(dims):
                        u_old = float(out[target, j])
                        neu1e[j] += g * u_old
                        out[target, j] = np.float32(u_old + g * float(inp[center, j]))
                for j in range(dims):
                    inp[center, j] = np.float32(float(inp[center, j]) + neu1e[j])
    return processed


def test_kernel_matches_python_reference_bitwise():
    corpus = [("a", "b", "c", "d", "b"), ("c", "a", "e"), ("e", "d", "a", "b")]
    vocab = build_vocab(corpus)
    cfg = TrainConfig(dims=5, window=2, negatives=3, epochs=1, seed=31)
    tokens, offsets = encode_corpus(corpus, vocab)
    inp0, out0 = initial_vectors(len(vocab), cfg)
    total = np.float64(tokens.size) * cfg.epochs + 1.0
    state = np.uint64(12345679)

    inp_k, out_k = inp0.copy(), out0.copy()
    _sgns_epoch(tokens, offsets, inp_k, out_k, vocab.neg_cum, cfg.window,
                cfg.negatives, cfg.learning_rate, 1e-4, total, np.int64(0), state)

    inp_r, out_r = inp0.copy(), out0.copy()
    _reference_epoch(tokens, offsets, inp_r, out_r, vocab.neg_cum, cfg.window,
                     cfg.negatives, cfg.learning_rate, 1e-4, total, 0, int(state))

    assert np.array_equal(inp_k, inp_r)
    assert np.array_equal(out_k, out_r)


def test_embedding_separates_graph_communities():
    """Two cliques joined by one bridge: within-clique vectors end up closer."""
    triples = []
    groups = {0: [f"x{i}" for i in range(6)], 1: [f"y{i}" for i in range(6)]}
    for names in groups.values():
        for a in names:
            for b in names:
                if a != b:
                    triples.append(
                        Triple(Term.iri(EX + a), Term.iri(EX + "p"), Term.iri(EX + b))
                    )
    triples.append(Triple(Term.iri(EX + "x0"), Term.iri(EX + "p"), Term.iri(EX + "y0")))
    g = Graph(triples)
    walks = generate_walks(g, WalkConfig(depth=4, walks_per_entity=40, seed=5))
    vocab = build_vocab(walks)
    model = train_skipgram(walks, vocab, TrainConfig(dims=16, window=4, epochs=3, seed=5))

    def emb(name):
        w = model.vector(EX + name)
        return w / np.linalg.norm(w)

    intra, inter = [], []
    for i in range(6):
        for j in range(i + 1, 6):
            intra.append(float(emb(f"x{i}") @ emb(f"x{j}")))
            intra.append(float(emb(f"y{i}") @ emb(f"y{j}")))
    for i in range(6):
        for j in range(6):
            inter.append(float(emb(f"x{i}") @ emb(f"y{j}")))
    assert np.mean(intra) > np.mean(inter)


# ------------------------------------------------------------ persistence

def test_model_vector_lookup():
    corpus = small_corpus()
    vocab = build_vocab(corpus)
    model = train_skipgram(corpus, vocab, TrainConfig(dims=6, window=2, epochs=1, seed=0))
    va = model.vector("a")
    assert va.shape == (6,)
    assert np.array_equal(va, vector(model, "a"))
    with pytest.raises(OutOfVocabulary):
        model.vector("missing")


def test_save_load_roundtrip_exact():
    corpus = [("tok with space", "b"), ("b", "tok with space", "c%25")] * 10
    vocab = build_vocab(corpus)
    model = train_skipgram(corpus, vocab, TrainConfig(dims=7, window=2, epochs=1, seed=13))
    text = save_model(model)
    back = load_model(text)
    assert back.vocab.tokens == model.vocab.tokens
    assert np.array_equal(back.vocab.counts, model.vocab.counts)
    assert np.array_equal(back.input_vectors, model.input_vectors)
    assert np.array_equal(back.output_vectors, model.output_vectors)
    assert back.config == model.config
    # serialization is canonical
    assert save_model(back) == text


def test_load_model_rejects_garbage():
    with pytest.raises(MalformedLine):
        load_model("not a model\n")
    corpus = small_corpus()
    model = train_skipgram(corpus, build_vocab(corpus),
                           TrainConfig(dims=4, window=2, epochs=1))
    text = save_model(model)
    with pytest.raises(MalformedLine):
        load_model(text.replace("embedding-model 1", "embedding-model 9", 1))


def test_word2vec_roundtrip_exact():
    corpus = [("a b", "c"), ("c", "a b")] * 5
    vocab = build_vocab(corpus)
    model = train_skipgram(corpus, vocab, TrainConfig(dims=5, window=1, epochs=1, seed=2))
    text = write_word2vec(model)
    first = text.split("\n", 1)[0]
    assert first == f"{len(vocab)} 5"
    wv = read_word2vec(text)
    assert wv.tokens == vocab.tokens
    assert np.array_equal(wv.matrix, model.input_vectors)
    assert np.array_equal(wv.vector("a b"), model.vector("a b"))
    with pytest.raises(OutOfVocabulary):
        wv.vector("nope")


def test_read_word2vec_rejects_bad_shapes():
    with pytest.raises(MalformedLine):
        read_word2vec("")
    with pytest.raises(MalformedLine):
        read_word2vec("2 3\ntok 1 2 3\n")  # missing one row
    with pytest.raises(MalformedLine):
        read_word2vec("1 3\ntok 1 2\n")  # short row
