"""Random walk generation and the corpus text format."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignimpact.errors import InvalidConfig
from alignimpact.rdf import Graph, Term, Triple
from alignimpact.walks import (
    WalkConfig,
    generate_walks,
    read_corpus,
    token_of,
    write_corpus,
)

EX = "http://example.org/"


def iri(name: str) -> Term:
    return Term.iri(EX + name)


def t(s: str, p: str, o: str) -> Triple:
    return Triple(iri(s), iri(p), iri(o))


def test_config_validation():
    with pytest.raises(InvalidConfig):
        WalkConfig(depth=0)
    with pytest.raises(InvalidConfig):
        WalkConfig(walks_per_entity=0)
    WalkConfig()  # defaults are valid


def test_defaults():
    cfg = WalkConfig()
    assert cfg.depth == 8
    assert cfg.walks_per_entity == 100
    assert cfg.include_literals


def test_tokens():
    assert token_of(iri("a")) == EX + "a"
    assert token_of(Term.literal("hi")) == '"hi"'
    assert token_of(Term.iri("_:b0")) == "_:b0"


def test_singleton_walks_from_sink():
    g = Graph([t("a", "p", "b")])
    b = g.node_id(iri("b"))
    walks = generate_walks(g, WalkConfig(walks_per_entity=5, seed=1), starts=[b])
    assert walks == [(EX + "b",)] * 5


def test_chain_walk_shape():
    g = Graph([t("a", "p", "b"), t("b", "p", "c")])
    a = g.node_id(iri("a"))
    walks = generate_walks(g, WalkConfig(depth=8, walks_per_entity=3, seed=1), starts=[a])
    for w in walks:
        assert w == (EX + "a", EX + "p", EX + "b", EX + "p", EX + "c")


def test_walk_length_bounded_by_depth():
    triples = [t(f"n{i}", "p", f"n{j}") for i in range(5) for j in range(5) if i != j]
    g = Graph(triples)
    depth = 3
    walks = generate_walks(g, WalkConfig(depth=depth, walks_per_entity=10, seed=2))
    assert all(len(w) <= 1 + 2 * depth for w in walks)
    assert any(len(w) == 1 + 2 * depth for w in walks)


def test_walk_steps_are_real_edges():
    triples = [t("a", "p", "b"), t("a", "q", "c"), t("b", "p", "c"), t("c", "q", "a")]
    g = Graph(triples)
    edge_tokens = {
        (g.terms[s].lexical, g.terms[p].lexical, token_of(g.terms[o]))
        for s, p, o in g.edges
    }
    walks = generate_walks(g, WalkConfig(depth=5, walks_per_entity=20, seed=3))
    for w in walks:
        for i in range(0, len(w) - 2, 2):
            assert (w[i], w[i + 1], w[i + 2]) in edge_tokens


def test_literals_terminate_walks():
    lit = Term.literal("leaf")
    g = Graph([t("a", "p", "b"), Triple(iri("b"), iri("label"), lit), t("b", "p", "a")])
    walks = generate_walks(g, WalkConfig(depth=6, walks_per_entity=50, seed=4))
    for w in walks:
        for i, tok in enumerate(w):
            if tok == '"leaf"':
                assert i == len(w) - 1


def test_include_literals_false_skips_literal_edges():
    lit = Term.literal("leaf")
    g = Graph([t("a", "p", "b"), Triple(iri("b"), iri("label"), lit)])
    cfg = WalkConfig(depth=6, walks_per_entity=30, seed=5, include_literals=False)
    walks = generate_walks(g, cfg)
    assert all('"leaf"' not in w for w in walks)


def test_corpus_size_and_order():
    g = Graph([t("a", "p", "b")])
    cfg = WalkConfig(walks_per_entity=7, seed=6)
    walks = generate_walks(g, cfg)
    # three IRI nodes: a, b, and the predicate p
    assert len(walks) == 3 * 7
    firsts = [w[0] for w in walks]
    # grouped into 7 replicas per start, starts in node id order
    groups = [firsts[i * 7 : (i + 1) * 7] for i in range(3)]
    assert all(len(set(grp)) == 1 for grp in groups)
    assert [grp[0] for grp in groups] == sorted(grp[0] for grp in groups)


def test_same_seed_same_corpus_different_seed_differs():
    triples = [t(f"n{i}", "p", f"n{j}") for i in range(4) for j in range(4) if i != j]
    g = Graph(triples)
    w1 = generate_walks(g, WalkConfig(depth=4, walks_per_entity=20, seed=11))
    w2 = generate_walks(g, WalkConfig(depth=4, walks_per_entity=20, seed=11))
    w3 = generate_walks(g, WalkConfig(depth=4, walks_per_entity=20, seed=12))
    assert w1 == w2
    assert w1 != w3


def test_walks_independent_of_other_starts():
    triples = [t(f"n{i}", "p", f"n{j}") for i in range(4) for j in range(4) if i != j]
    g = Graph(triples)
    cfg = WalkConfig(depth=4, walks_per_entity=10, seed=13)
    a, b = g.node_id(iri("n0")), g.node_id(iri("n2"))
    both = generate_walks(g, cfg, starts=[a, b])
    only_b = generate_walks(g, cfg, starts=[b])
    assert both[cfg.walks_per_entity :] == only_b


def test_invalid_start():
    g = Graph([t("a", "p", "b")])
    with pytest.raises(InvalidConfig):
        generate_walks(g, WalkConfig(), starts=[99])


def test_branch_choice_is_uniform_within_5_sigma():
    branches = 4
    triples = [t("hub", f"p{i}", f"leaf{i}") for i in range(branches)]
    g = Graph(triples)
    hub = g.node_id(iri("hub"))
    n = 2000
    walks = generate_walks(g, WalkConfig(depth=1, walks_per_entity=n, seed=17), starts=[hub])
    counts = {}
    for w in walks:
        counts[w[2]] = counts.get(w[2], 0) + 1
    p = 1 / branches
    sigma = math.sqrt(n * p * (1 - p))
    for leaf in range(branches):
        c = counts.get(EX + f"leaf{leaf}", 0)
        assert abs(c - n * p) < 5 * sigma


# ------------------------------------------------------------------ corpus

def test_corpus_text_format():
    walks = [(EX + "a", EX + "p", '"two words"'), (EX + "b",)]
    text = write_corpus(walks)
    assert text == f'{EX}a {EX}p "two%20words"\n{EX}b\n'
    assert read_corpus(text) == walks


tokens = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)),
    min_size=1,
    max_size=10,
)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(tokens, min_size=1, max_size=6).map(tuple), max_size=8))
def test_corpus_roundtrip_property(walks):
    assert read_corpus(write_corpus(walks)) == walks
