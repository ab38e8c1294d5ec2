"""Alignments between two ontologies and their graph reification.

An alignment is a set of correspondences (left IRI, right IRI, relation),
at most one per (left, right) pair. Reification turns each correspondence
into a statement node with three outgoing edges, so that alignment
statements sit at undirected distance 1 from both endpoints in the merged
graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import DuplicatePair, MalformedLine
from .rdf import Term, Triple, TripleSet

DEFAULT_BASE_IRI = "urn:align:"


class Relation(str, Enum):
    """How the left concept relates to the right one."""

    EQUIVALENT = "="
    LESS_GENERAL = "<"
    MORE_GENERAL = ">"

    @property
    def iri_suffix(self) -> str:
        return _REL_SUFFIX[self]

    @classmethod
    def parse(cls, text: str) -> "Relation":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown relation {text!r}; expected one of =, <, >") from None


_REL_SUFFIX = {
    Relation.EQUIVALENT: "equivalent",
    Relation.LESS_GENERAL: "less-general",
    Relation.MORE_GENERAL: "more-general",
}


@dataclass(frozen=True, slots=True)
class Correspondence:
    left: Term
    right: Term
    relation: Relation = Relation.EQUIVALENT

    def __post_init__(self) -> None:
        if not self.left.is_iri or not self.right.is_iri:
            raise ValueError("correspondence endpoints must be IRIs")
        if self.left == self.right:
            raise ValueError(f"correspondence endpoints must differ: {self.left.lexical!r}")

    def pair(self) -> tuple[Term, Term]:
        return (self.left, self.right)

    def sort_key(self):
        return (self.left.sort_key(), self.right.sort_key())


class Alignment:
    """An ordered, duplicate-free collection of correspondences."""

    __slots__ = ("_items",)

    def __init__(self, correspondences: Iterable[Correspondence] = ()):
        seen: dict[tuple[Term, Term], Correspondence] = {}
        for c in correspondences:
            key = c.pair()
            if key in seen:
                raise DuplicatePair(c.left.lexical, c.right.lexical)
            seen[key] = c
        self._items: tuple[Correspondence, ...] = tuple(
            sorted(seen.values(), key=Correspondence.sort_key)
        )

    def __iter__(self) -> Iterator[Correspondence]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, c: Correspondence) -> bool:
        return c in set(self._items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Alignment):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def pairs(self) -> frozenset[tuple[Term, Term]]:
        return frozenset(c.pair() for c in self._items)

    def endpoints(self) -> frozenset[Term]:
        out: set[Term] = set()
        for c in self._items:
            out.add(c.left)
            out.add(c.right)
        return frozenset(out)


def parse_alignment(text: str) -> Alignment:
    """Read a tab-separated alignment: left IRI, right IRI, relation.

    Blank lines and ``#`` comments are skipped. Raises on malformed rows
    and on repeated (left, right) pairs.
    """
    items: list[Correspondence] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedLine(lineno, f"expected 3 tab-separated fields, got {len(fields)}")
        left_s, right_s, rel_s = (f.strip() for f in fields)
        try:
            items.append(
                Correspondence(Term.iri(left_s), Term.iri(right_s), Relation.parse(rel_s))
            )
        except ValueError as exc:
            raise MalformedLine(lineno, str(exc)) from None
    return Alignment(items)


def serialize_alignment(alignment: Alignment) -> str:
    """Canonical tab-separated form, sorted by (left, right)."""
    return "".join(
        f"{c.left.lexical}\t{c.right.lexical}\t{c.relation.value}\n" for c in alignment
    )


def statement_iris(alignment: Alignment, base_iri: str = DEFAULT_BASE_IRI) -> dict[Correspondence, Term]:
    """Statement node IRI for each correspondence, in canonical order."""
    return {c: Term.iri(f"{base_iri}stmt/{i}") for i, c in enumerate(alignment)}


def reify(alignment: Alignment, base_iri: str = DEFAULT_BASE_IRI) -> TripleSet:
    """Emit three triples per correspondence around a fresh statement node.

    Statement IRIs are ``{base_iri}stmt/{i}`` with ``i`` following the
    canonical (left, right) order, so reification is deterministic.
    """
    left_pred = Term.iri(base_iri + "left")
    right_pred = Term.iri(base_iri + "right")
    rel_pred = Term.iri(base_iri + "relation")
    triples: set[Triple] = set()
    for c, stmt in statement_iris(alignment, base_iri).items():
        triples.add(Triple(stmt, left_pred, c.left))
        triples.add(Triple(stmt, right_pred, c.right))
        triples.add(Triple(stmt, rel_pred, Term.iri(base_iri + "rel/" + c.relation.iri_suffix)))
    return frozenset(triples)


@dataclass(frozen=True, slots=True)
class AlignmentDelta:
    """Correspondences removed from the old alignment and added in the new."""

    removed: frozenset[Correspondence]
    added: frozenset[Correspondence]

    @property
    def changed_pairs(self) -> frozenset[tuple[Term, Term]]:
        return frozenset(c.pair() for c in self.removed | self.added)

    def is_empty(self) -> bool:
        return not self.removed and not self.added


def diff_alignments(old: Alignment, new: Alignment) -> AlignmentDelta:
    old_set = frozenset(old)
    new_set = frozenset(new)
    return AlignmentDelta(removed=old_set - new_set, added=new_set - old_set)
