"""RDF terms, an N-Triples reader/writer, and the merged traversal graph.

The parser covers the line-oriented N-Triples subset this pipeline needs:
IRIs, blank nodes, plain/tagged/typed literals, ``#`` comments, and the
usual backslash escapes. Graphs intern every distinct term (subjects,
predicates, and objects alike) into dense node ids; predicates are kept as
edge labels and never count as hops when measuring distance.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .errors import MalformedLine, UnknownNode


class TermKind(str, Enum):
    IRI = "iri"
    LITERAL = "literal"


@dataclass(frozen=True, slots=True)
class Term:
    """One RDF term: an IRI (blank nodes included) or a literal."""

    lexical: str
    kind: TermKind = TermKind.IRI
    language: str | None = None
    datatype: str | None = None

    def __post_init__(self) -> None:
        if self.kind is TermKind.IRI:
            if not self.lexical or any(ord(c) <= 0x20 for c in self.lexical):
                raise ValueError(f"IRI must be non-empty without whitespace: {self.lexical!r}")
            if self.lexical == "_:":
                raise ValueError("blank node label must be non-empty")
            if self.language is not None or self.datatype is not None:
                raise ValueError("an IRI carries no language tag or datatype")
        elif self.language is not None and self.datatype is not None:
            raise ValueError("a literal takes a language tag or a datatype, not both")

    @classmethod
    def iri(cls, lexical: str) -> "Term":
        return cls(lexical, TermKind.IRI)

    @classmethod
    def literal(cls, lexical: str, language: str | None = None, datatype: str | None = None) -> "Term":
        return cls(lexical, TermKind.LITERAL, language, datatype)

    @property
    def is_iri(self) -> bool:
        return self.kind is TermKind.IRI

    @property
    def is_literal(self) -> bool:
        return self.kind is TermKind.LITERAL

    @property
    def is_blank(self) -> bool:
        return self.kind is TermKind.IRI and self.lexical.startswith("_:")

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.kind.value, self.lexical, self.language or "", self.datatype or "")

    def ntriples(self) -> str:
        """Serialized N-Triples form of this term."""
        if self.is_blank:
            return self.lexical
        if self.is_iri:
            return f"<{_escape_iri(self.lexical)}>"
        body = f'"{_escape_literal(self.lexical)}"'
        if self.language is not None:
            return f"{body}@{self.language}"
        if self.datatype is not None:
            return f"{body}^^<{_escape_iri(self.datatype)}>"
        return body


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if not self.subject.is_iri:
            raise ValueError("triple subject must be an IRI")
        if not self.predicate.is_iri:
            raise ValueError("triple predicate must be an IRI")

    def sort_key(self):
        return (self.subject.sort_key(), self.predicate.sort_key(), self.object.sort_key())

    def ntriples(self) -> str:
        return f"{self.subject.ntriples()} {self.predicate.ntriples()} {self.object.ntriples()} ."

    def mentions(self, term: Term) -> bool:
        return term in (self.subject, self.predicate, self.object)


# A triple set is plain set semantics; frozenset gives that directly.
TripleSet = frozenset


_LITERAL_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


def _unescape(raw: str, lineno: int) -> str:
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise MalformedLine(lineno, "dangling backslash escape")
        e = raw[i + 1]
        if e in _LITERAL_ESCAPES:
            out.append(_LITERAL_ESCAPES[e])
            i += 2
        elif e in ("u", "U"):
            width = 4 if e == "u" else 8
            hexpart = raw[i + 2 : i + 2 + width]
            if len(hexpart) != width:
                raise MalformedLine(lineno, f"truncated \\{e} escape")
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise MalformedLine(lineno, f"invalid \\{e} escape: {hexpart!r}") from None
            i += 2 + width
        else:
            raise MalformedLine(lineno, f"unknown escape \\{e}")
    return "".join(out)


def _escape_literal(text: str) -> str:
    out: list[str] = []
    for c in text:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\r":
            out.append("\\r")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20 or ord(c) == 0x7F:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def _escape_iri(text: str) -> str:
    # Only the two characters that would break re-parsing need escaping.
    if "\\" not in text and ">" not in text:
        return text
    return text.replace("\\", "\\u005C").replace(">", "\\u003E")


def _skip_ws(line: str, pos: int) -> int:
    while pos < len(line) and line[pos] in " \t":
        pos += 1
    return pos


def _parse_iri(line: str, pos: int, lineno: int) -> tuple[Term, int]:
    end = line.find(">", pos + 1)
    if end < 0:
        raise MalformedLine(lineno, "unterminated IRI")
    lexical = _unescape(line[pos + 1 : end], lineno)
    try:
        return Term.iri(lexical), end + 1
    except ValueError as exc:
        raise MalformedLine(lineno, str(exc)) from None


def _parse_blank(line: str, pos: int, lineno: int, scope: str | None) -> tuple[Term, int]:
    if not line.startswith("_:", pos):
        raise MalformedLine(lineno, "expected blank node label")
    end = pos + 2
    while end < len(line) and line[end] not in " \t":
        end += 1
    label = line[pos + 2 : end]
    if not label:
        raise MalformedLine(lineno, "empty blank node label")
    if scope is not None:
        label = f"{scope}.{label}"
    return Term.iri(f"_:{label}"), end


def _parse_literal(line: str, pos: int, lineno: int) -> tuple[Term, int]:
    i = pos + 1
    chars: list[str] = []
    n = len(line)
    while True:
        if i >= n:
            raise MalformedLine(lineno, "unterminated literal")
        c = line[i]
        if c == '"':
            break
        if c == "\\":
            if i + 1 >= n:
                raise MalformedLine(lineno, "dangling backslash escape")
            e = line[i + 1]
            if e in _LITERAL_ESCAPES:
                chars.append(_LITERAL_ESCAPES[e])
                i += 2
                continue
            if e in ("u", "U"):
                width = 4 if e == "u" else 8
                hexpart = line[i + 2 : i + 2 + width]
                if len(hexpart) != width:
                    raise MalformedLine(lineno, f"truncated \\{e} escape")
                try:
                    chars.append(chr(int(hexpart, 16)))
                except ValueError:
                    raise MalformedLine(lineno, f"invalid \\{e} escape: {hexpart!r}") from None
                i += 2 + width
                continue
            raise MalformedLine(lineno, f"unknown escape \\{e}")
        chars.append(c)
        i += 1
    i += 1  # past closing quote
    lexical = "".join(chars)
    if i < n and line[i] == "@":
        end = i + 1
        while end < n and (line[end].isalnum() or line[end] == "-"):
            end += 1
        tag = line[i + 1 : end]
        if not tag:
            raise MalformedLine(lineno, "empty language tag")
        return Term.literal(lexical, language=tag), end
    if line.startswith("^^", i):
        if i + 2 >= n or line[i + 2] != "<":
            raise MalformedLine(lineno, "datatype must be an IRI")
        dt, end = _parse_iri(line, i + 2, lineno)
        return Term.literal(lexical, datatype=dt.lexical), end
    return Term.literal(lexical), i


def _parse_term(
    line: str, pos: int, lineno: int, scope: str | None, what: str, allow_literal: bool
) -> tuple[Term, int]:
    if pos >= len(line):
        raise MalformedLine(lineno, f"missing {what}")
    c = line[pos]
    if c == "<":
        return _parse_iri(line, pos, lineno)
    if c == "_":
        if what == "predicate":
            raise MalformedLine(lineno, "predicate must be an IRI")
        return _parse_blank(line, pos, lineno, scope)
    if c == '"':
        if not allow_literal:
            raise MalformedLine(lineno, f"{what} must be an IRI")
        return _parse_literal(line, pos, lineno)
    raise MalformedLine(lineno, f"expected IRI, blank node, or literal for {what}")


def parse_ntriples(text: str, blank_scope: str | None = None) -> TripleSet:
    """Parse N-Triples text into a set of triples.

    Duplicate statements collapse. Parsing stops at the first malformed
    line. ``blank_scope``, when given, prefixes blank node labels so
    identically named blanks from different files stay distinct.
    """
    triples: set[Triple] = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        pos = 0
        subject, pos = _parse_term(line, pos, lineno, blank_scope, "subject", allow_literal=False)
        pos = _skip_ws(line, pos)
        predicate, pos = _parse_term(line, pos, lineno, blank_scope, "predicate", allow_literal=False)
        pos = _skip_ws(line, pos)
        obj, pos = _parse_term(line, pos, lineno, blank_scope, "object", allow_literal=True)
        pos = _skip_ws(line, pos)
        if pos >= len(line) or line[pos] != ".":
            raise MalformedLine(lineno, "missing terminal '.'")
        tail = line[pos + 1 :].strip()
        if tail and not tail.startswith("#"):
            raise MalformedLine(lineno, f"unexpected trailing content: {tail!r}")
        triples.add(Triple(subject, predicate, obj))
    return frozenset(triples)


def serialize_ntriples(triples: Iterable[Triple]) -> str:
    """Canonical N-Triples serialization: sorted, one statement per line."""
    return "".join(t.ntriples() + "\n" for t in sorted(triples, key=Triple.sort_key))


class Graph:
    """Immutable labeled multigraph over interned terms.

    ``terms[i]`` is the term for node id ``i``; ids are dense and assigned
    in term sort order, so identical triple sets always intern identically.
    ``out`` holds directed (predicate, object) successor lists for walks,
    ``undirected`` the predicate-free neighbor lists used for distances.
    """

    __slots__ = ("terms", "ids", "edges", "out", "undirected")

    def __init__(self, triples: Iterable[Triple]):
        ordered = sorted(set(triples), key=Triple.sort_key)
        term_set: set[Term] = set()
        for t in ordered:
            term_set.add(t.subject)
            term_set.add(t.predicate)
            term_set.add(t.object)
        self.terms: tuple[Term, ...] = tuple(sorted(term_set, key=Term.sort_key))
        self.ids: Mapping[Term, int] = {term: i for i, term in enumerate(self.terms)}
        ids = self.ids
        self.edges: tuple[tuple[int, int, int], ...] = tuple(
            (ids[t.subject], ids[t.predicate], ids[t.object]) for t in ordered
        )
        out: list[list[tuple[int, int]]] = [[] for _ in self.terms]
        und: list[set[int]] = [set() for _ in self.terms]
        for s, p, o in self.edges:
            out[s].append((p, o))
            und[s].add(o)
            und[o].add(s)
        self.out: tuple[tuple[tuple[int, int], ...], ...] = tuple(tuple(lst) for lst in out)
        self.undirected: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in und)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: Term) -> bool:
        return term in self.ids

    def node_id(self, term: Term) -> int:
        try:
            return self.ids[term]
        except KeyError:
            raise UnknownNode(f"term not in graph: {term.lexical!r}") from None

    def iri_nodes(self) -> Iterator[int]:
        """Node ids of all IRI terms, ascending."""
        for i, term in enumerate(self.terms):
            if term.is_iri:
                yield i


def build_graph(sets: Iterable[TripleSet]) -> Graph:
    """Union the given triple sets into one graph."""
    union: set[Triple] = set()
    for s in sets:
        union.update(s)
    return Graph(union)


def _check_node(graph: Graph, node: int) -> None:
    if not 0 <= node < len(graph):
        raise UnknownNode(f"node id {node} outside graph of {len(graph)} nodes")


def bfs_within(graph: Graph, source: int, max_depth: int | None = None) -> dict[int, int]:
    """Undirected hop distances from ``source`` for all nodes within ``max_depth``.

    Predicates are edge labels, not hops. ``max_depth=None`` means unbounded.
    """
    _check_node(graph, source)
    return _bfs(graph, (source,), max_depth)


def bfs_multi_within(graph: Graph, sources: Iterable[int], max_depth: int | None = None) -> dict[int, int]:
    """Distance to the nearest of several sources, for nodes within ``max_depth``."""
    srcs = tuple(dict.fromkeys(sources))
    for s in srcs:
        _check_node(graph, s)
    return _bfs(graph, srcs, max_depth)


def _bfs(graph: Graph, sources: tuple[int, ...], max_depth: int | None) -> dict[int, int]:
    dist: dict[int, int] = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth is not None and du >= max_depth:
            continue
        for v in graph.undirected[u]:
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    return dist
