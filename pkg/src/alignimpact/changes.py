"""Ontology version diffs and impact labels for the resulting changes.

A diff between two versions of one ontology is grouped per resource: every
IRI that appears as subject or object of an added or removed statement
gets one change record. Labeling then measures, in the merged graph of the
old snapshot (both ontologies plus the reified alignment), how far each
changed resource sits from the alignment statement nodes. Changes within
``radius`` hops of a statement whose correspondence was removed or added
are labeled as affecting the alignment; changes near only untouched
statements are labeled as having no effect; changes farther than
``radius`` from every statement are dropped as out of scope.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .alignment import AlignmentDelta, Correspondence
from .errors import InconsistentInput, InvalidConfig, MalformedLine
from .rdf import Graph, Term, Triple, TripleSet, bfs_multi_within, parse_ntriples

DEFAULT_RADIUS = 2


class Side(str, Enum):
    """Which of the two aligned ontologies a change belongs to."""

    LEFT = "left"
    RIGHT = "right"


class ChangeKind(str, Enum):
    ADDED = "added"
    REMOVED = "removed"
    MODIFIED = "modified"


class ImpactLabel(str, Enum):
    AFFECTS = "affects-alignment"
    NO_EFFECT = "no-effect"


@dataclass(frozen=True, slots=True)
class ChangeRecord:
    """All added/removed statements touching one resource in one diff."""

    resource: Term
    side: Side
    kind: ChangeKind
    added: frozenset[Triple]
    removed: frozenset[Triple]

    def sort_key(self):
        return (self.resource.sort_key(), self.side.value)


@dataclass(frozen=True, slots=True)
class LabeledChange:
    resource: Term
    side: Side
    kind: ChangeKind
    distance: int
    label: ImpactLabel
    num_added: int
    num_removed: int

    def sort_key(self):
        return (self.resource.sort_key(), self.side.value)


@dataclass(frozen=True, slots=True)
class LabelingResult:
    labeled: tuple[LabeledChange, ...]
    no_anchor: int
    out_of_radius: int

    @property
    def positives(self) -> int:
        return sum(1 for c in self.labeled if c.label is ImpactLabel.AFFECTS)


def _mentioned_terms(triples: Iterable[Triple]) -> set[Term]:
    out: set[Term] = set()
    for t in triples:
        out.add(t.subject)
        out.add(t.predicate)
        out.add(t.object)
    return out


def diff_ontologies(old: TripleSet, new: TripleSet, side: Side) -> list[ChangeRecord]:
    """Group the statement-level diff of one ontology by resource.

    A resource is any IRI in subject or object position of a changed
    statement; predicates and literals carry change but get no record of
    their own. The kind reflects whether the resource is mentioned
    anywhere in the old version, the new one, or both.
    """
    d_plus = frozenset(new) - frozenset(old)
    d_minus = frozenset(old) - frozenset(new)
    added_by: dict[Term, set[Triple]] = {}
    removed_by: dict[Term, set[Triple]] = {}
    for delta, by in ((d_plus, added_by), (d_minus, removed_by)):
        for t in delta:
            for term in (t.subject, t.object):
                if term.is_iri:
                    by.setdefault(term, set()).add(t)
    in_old = _mentioned_terms(old)
    in_new = _mentioned_terms(new)
    records: list[ChangeRecord] = []
    for resource in added_by.keys() | removed_by.keys():
        if resource in in_old and resource in in_new:
            kind = ChangeKind.MODIFIED
        elif resource in in_new:
            kind = ChangeKind.ADDED
        else:
            kind = ChangeKind.REMOVED
        records.append(
            ChangeRecord(
                resource=resource,
                side=side,
                kind=kind,
                added=frozenset(added_by.get(resource, ())),
                removed=frozenset(removed_by.get(resource, ())),
            )
        )
    records.sort(key=ChangeRecord.sort_key)
    return records


def _anchors(change: ChangeRecord, graph: Graph) -> list[tuple[int, int]]:
    """(node id, hop offset) pairs locating the change in the old graph.

    A resource still present anchors at itself. A resource absent from
    the old graph anchors at the in-graph endpoints of its changed
    statements, one hop away.
    """
    if change.resource in graph:
        return [(graph.ids[change.resource], 0)]
    anchors: set[int] = set()
    for t in change.added | change.removed:
        for term in (t.subject, t.object):
            if term != change.resource and term in graph:
                anchors.add(graph.ids[term])
    return [(a, 1) for a in sorted(anchors)]


def label_changes(
    changes: Sequence[ChangeRecord],
    merged_old: Graph,
    delta: AlignmentDelta,
    statement_nodes: Mapping[Correspondence, Term],
    radius: int = DEFAULT_RADIUS,
) -> LabelingResult:
    """Label each change by whether a changed alignment statement is nearby.

    ``merged_old`` must contain the reified alignment whose statement
    nodes are given in ``statement_nodes``. Changes without any anchor in
    the merged graph, and changes farther than ``radius`` hops from every
    statement node, are dropped and counted.
    """
    if radius < 0:
        raise InvalidConfig(f"radius must be >= 0, got {radius}")
    stmt_ids: list[int] = []
    changed_ids: list[int] = []
    changed_pairs = delta.changed_pairs
    for corr, stmt in statement_nodes.items():
        if stmt not in merged_old:
            raise InconsistentInput(
                f"statement node {stmt.lexical!r} missing from the merged graph"
            )
        node = merged_old.ids[stmt]
        stmt_ids.append(node)
        if corr.pair() in changed_pairs:
            changed_ids.append(node)
    d_all = bfs_multi_within(merged_old, stmt_ids, max_depth=radius) if stmt_ids else {}
    d_changed = bfs_multi_within(merged_old, changed_ids, max_depth=radius) if changed_ids else {}

    labeled: list[LabeledChange] = []
    no_anchor = 0
    out_of_radius = 0
    for change in changes:
        anchors = _anchors(change, merged_old)
        if not anchors:
            no_anchor += 1
            continue
        dist = min((d_all[a] + off for a, off in anchors if a in d_all), default=None)
        if dist is None or dist > radius:
            out_of_radius += 1
            continue
        dist_changed = min(
            (d_changed[a] + off for a, off in anchors if a in d_changed), default=None
        )
        label = (
            ImpactLabel.AFFECTS
            if dist_changed is not None and dist_changed <= radius
            else ImpactLabel.NO_EFFECT
        )
        labeled.append(
            LabeledChange(
                resource=change.resource,
                side=change.side,
                kind=change.kind,
                distance=dist,
                label=label,
                num_added=len(change.added),
                num_removed=len(change.removed),
            )
        )
    labeled.sort(key=LabeledChange.sort_key)
    return LabelingResult(tuple(labeled), no_anchor, out_of_radius)


_CSV_HEADER = ["resource", "side", "kind", "distance", "label", "num_added", "num_removed"]


def write_labeled_csv(labeled: Iterable[LabeledChange]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    for c in sorted(labeled, key=LabeledChange.sort_key):
        writer.writerow(
            [
                c.resource.lexical,
                c.side.value,
                c.kind.value,
                c.distance,
                c.label.value,
                c.num_added,
                c.num_removed,
            ]
        )
    return buf.getvalue()


def read_labeled_csv(text: str) -> list[LabeledChange]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != _CSV_HEADER:
        raise MalformedLine(1, f"expected header {','.join(_CSV_HEADER)!r}")
    out: list[LabeledChange] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            raise MalformedLine(lineno, f"expected {len(_CSV_HEADER)} fields, got {len(row)}")
        try:
            out.append(
                LabeledChange(
                    resource=Term.iri(row[0]),
                    side=Side(row[1]),
                    kind=ChangeKind(row[2]),
                    distance=int(row[3]),
                    label=ImpactLabel(row[4]),
                    num_added=int(row[5]),
                    num_removed=int(row[6]),
                )
            )
        except ValueError as exc:
            raise MalformedLine(lineno, str(exc)) from None
    return out


def write_changes_jsonl(changes: Iterable[ChangeRecord]) -> str:
    """One JSON object per line, added/removed statements as N-Triples."""
    lines = []
    for change in sorted(changes, key=ChangeRecord.sort_key):
        lines.append(
            json.dumps(
                {
                    "resource": change.resource.lexical,
                    "side": change.side.value,
                    "kind": change.kind.value,
                    "added": [t.ntriples() for t in sorted(change.added, key=Triple.sort_key)],
                    "removed": [t.ntriples() for t in sorted(change.removed, key=Triple.sort_key)],
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def _triples_from_lines(lines: Iterable[str], lineno: int) -> frozenset[Triple]:
    collected: set[Triple] = set()
    for text in lines:
        parsed = parse_ntriples(text)
        if len(parsed) != 1:
            raise MalformedLine(lineno, f"expected exactly one statement, got {text!r}")
        collected.update(parsed)
    return frozenset(collected)


def read_changes_jsonl(text: str) -> list[ChangeRecord]:
    out: list[ChangeRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            record = ChangeRecord(
                resource=Term.iri(obj["resource"]),
                side=Side(obj["side"]),
                kind=ChangeKind(obj["kind"]),
                added=_triples_from_lines(obj["added"], lineno),
                removed=_triples_from_lines(obj["removed"], lineno),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedLine(lineno, str(exc)) from None
        out.append(record)
    return out
