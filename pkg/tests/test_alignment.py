"""Alignment parsing, reification, and diffs."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignimpact.alignment import (
    Alignment,
    Correspondence,
    Relation,
    diff_alignments,
    parse_alignment,
    reify,
    serialize_alignment,
    statement_iris,
)
from alignimpact.errors import DuplicatePair, MalformedLine
from alignimpact.rdf import Graph, Term, bfs_within

L = "http://example.org/left/"
R = "http://example.org/right/"


def corr(a: str, b: str, rel: Relation = Relation.EQUIVALENT) -> Correspondence:
    return Correspondence(Term.iri(L + a), Term.iri(R + b), rel)


def test_correspondence_validation():
    with pytest.raises(ValueError):
        Correspondence(Term.iri(L + "x"), Term.iri(L + "x"))
    with pytest.raises(ValueError):
        Correspondence(Term.literal("x"), Term.iri(R + "y"))


def test_alignment_rejects_duplicate_pairs():
    with pytest.raises(DuplicatePair):
        Alignment([corr("a", "b"), corr("a", "b", Relation.LESS_GENERAL)])


def test_alignment_sorted_iteration():
    a = Alignment([corr("b", "y"), corr("a", "z"), corr("a", "x")])
    lefts = [(c.left.lexical, c.right.lexical) for c in a]
    assert lefts == sorted(lefts)


def test_parse_alignment():
    text = (
        "# comment\n"
        "\n"
        f"{L}a\t{R}b\t=\n"
        f"{L}c\t{R}d\t<\n"
        f"{L}e\t{R}f\t>\n"
    )
    a = parse_alignment(text)
    assert len(a) == 3
    rels = {c.relation for c in a}
    assert rels == {Relation.EQUIVALENT, Relation.LESS_GENERAL, Relation.MORE_GENERAL}


@pytest.mark.parametrize(
    "bad",
    [
        f"{L}a\t{R}b",
        f"{L}a\t{R}b\t~",
        f"{L}a\t{R}b\t=\textra",
        f"{L}a\t{L}a\t=",
    ],
)
def test_parse_alignment_malformed(bad):
    with pytest.raises(MalformedLine):
        parse_alignment(bad + "\n")


def test_parse_duplicate_pair():
    text = f"{L}a\t{R}b\t=\n{L}a\t{R}b\t<\n"
    with pytest.raises(DuplicatePair):
        parse_alignment(text)


def test_serialize_roundtrip():
    a = Alignment([corr("b", "y", Relation.MORE_GENERAL), corr("a", "x")])
    assert parse_alignment(serialize_alignment(a)) == a


def test_reify_three_triples_per_correspondence():
    a = Alignment([corr("a", "x"), corr("b", "y", Relation.LESS_GENERAL)])
    triples = reify(a)
    assert len(triples) == 3 * len(a)
    subjects = {t.subject.lexical for t in triples}
    assert subjects == {"urn:align:stmt/0", "urn:align:stmt/1"}


def test_reify_deterministic_statement_numbering():
    items = [corr("b", "y"), corr("a", "x"), corr("c", "z")]
    t1 = reify(Alignment(items))
    t2 = reify(Alignment(items[::-1]))
    assert t1 == t2
    # stmt/0 belongs to the canonically first pair
    stmts = statement_iris(Alignment(items))
    first = min(stmts, key=Correspondence.sort_key)
    assert stmts[first].lexical == "urn:align:stmt/0"


def test_reify_custom_base():
    a = Alignment([corr("a", "x")])
    triples = reify(a, base_iri="urn:t0:")
    assert all(t.subject.lexical.startswith("urn:t0:stmt/") for t in triples)
    preds = {t.predicate.lexical for t in triples}
    assert preds == {"urn:t0:left", "urn:t0:right", "urn:t0:relation"}


def test_reified_statement_distance_one_from_endpoints():
    a = Alignment([corr("a", "x")])
    g = Graph(reify(a))
    stmt = g.node_id(Term.iri("urn:align:stmt/0"))
    d = bfs_within(g, stmt)
    assert d[g.node_id(Term.iri(L + "a"))] == 1
    assert d[g.node_id(Term.iri(R + "x"))] == 1


def test_relation_iri_suffixes_distinct():
    suffixes = {r.iri_suffix for r in Relation}
    assert suffixes == {"equivalent", "less-general", "more-general"}


def test_diff_alignments_basics():
    old = Alignment([corr("a", "x"), corr("b", "y")])
    new = Alignment([corr("b", "y"), corr("c", "z")])
    delta = diff_alignments(old, new)
    assert delta.removed == {corr("a", "x")}
    assert delta.added == {corr("c", "z")}
    assert delta.changed_pairs == {
        (Term.iri(L + "a"), Term.iri(R + "x")),
        (Term.iri(L + "c"), Term.iri(R + "z")),
    }


def test_diff_relation_change_is_remove_plus_add():
    old = Alignment([corr("a", "x", Relation.EQUIVALENT)])
    new = Alignment([corr("a", "x", Relation.LESS_GENERAL)])
    delta = diff_alignments(old, new)
    assert len(delta.removed) == 1 and len(delta.added) == 1
    assert delta.changed_pairs == {(Term.iri(L + "a"), Term.iri(R + "x"))}


names = st.integers(0, 8).map(lambda i: f"c{i}")
corrs = st.builds(
    corr,
    names,
    names,
    st.sampled_from(list(Relation)),
)


def dedupe(cs):
    seen = {}
    for c in cs:
        seen.setdefault(c.pair(), c)
    return Alignment(seen.values())


@settings(max_examples=100, deadline=None)
@given(st.lists(corrs, max_size=12), st.lists(corrs, max_size=12))
def test_diff_mirror_property(old_items, new_items):
    """diff(a, b) is diff(b, a) with removed/added swapped; self-diff empty."""
    a, b = dedupe(old_items), dedupe(new_items)
    fwd = diff_alignments(a, b)
    rev = diff_alignments(b, a)
    assert fwd.removed == rev.added
    assert fwd.added == rev.removed
    assert diff_alignments(a, a).is_empty()
