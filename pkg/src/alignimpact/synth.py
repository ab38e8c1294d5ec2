"""Synthetic two-ontology evolution scenarios with ground-truth impact.

Each scenario holds two random subclass trees with label literals, an
equivalence alignment over tree-matched concept pairs, and a sequence of
epoch snapshots produced by seeded edits:

* concepts in a connected volatile region receive structural edits
  (subtree move, leaf delete, sibling insert); when such an edit falls
  within two hops of a correspondence endpoint it removes or retargets
  that correspondence with probability ``p_affect``;
* concepts outside the region receive cosmetic label rewrites that never
  touch the alignment.

Pairing follows the tree structure (children of paired concepts are
paired), so corresponding concepts occupy corresponding neighborhoods and
the two volatile regions can cover matching subdomains. Every random
choice draws from one seeded generator over sorted candidate lists, so a
config and seed fix the scenario byte for byte.
"""
from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import random

from .alignment import Alignment, Correspondence, Relation, serialize_alignment
from .errors import InvalidConfig
from .rdf import Term, Triple, TripleSet, serialize_ntriples
from .seeding import derive_seed

RDFS_SUBCLASS = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
ONTOLOGY_BASE = "http://example.org/"


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    concepts_per_ontology: int = 1500
    branching_factor: int = 3
    aligned_fraction: float = 0.7
    volatile_fraction: float = 0.24
    edits_per_epoch: int = 500
    p_affect: float = 0.97
    epochs: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.concepts_per_ontology < 2:
            raise InvalidConfig(
                f"concepts per ontology must be >= 2, got {self.concepts_per_ontology}"
            )
        if self.branching_factor < 1:
            raise InvalidConfig(f"branching factor must be >= 1, got {self.branching_factor}")
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.edits_per_epoch < 0:
            raise InvalidConfig(f"edits per epoch must be >= 0, got {self.edits_per_epoch}")
        for name in ("aligned_fraction", "volatile_fraction", "p_affect"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True, slots=True)
class EpochSnapshot:
    left: TripleSet
    right: TripleSet
    alignment: Alignment


@dataclass(frozen=True, slots=True)
class EditRecord:
    """One applied edit with its exact statement and alignment deltas."""

    transition: int
    seq: int
    side: int  # 1 = left ontology, 2 = right
    action: str  # move | delete | insert | relabel
    focus: str  # IRI of the edited concept
    resources: tuple[str, ...]  # IRIs whose statements changed
    impact: bool
    corr_removed: tuple[str, str] | None
    corr_added: tuple[str, str] | None
    triples_added: TripleSet
    triples_removed: TripleSet


@dataclass(frozen=True, slots=True)
class Scenario:
    config: ScenarioConfig
    snapshots: tuple[EpochSnapshot, ...]
    transitions: tuple[tuple[EditRecord, ...], ...]
    volatile_left: frozenset[str]
    volatile_right: frozenset[str]


def _sample_tree_shape(size: int, branching: int, rng: random.Random) -> list[int | None]:
    """Random tree as a parent list, at most ``branching`` children each."""
    parents: list[int | None] = [None]
    child_count = [0]
    capacity = [0]
    for cid in range(1, size):
        parent = capacity[rng.randrange(len(capacity))]
        parents.append(parent)
        child_count[parent] += 1
        child_count.append(0)
        if child_count[parent] >= branching:
            capacity.remove(parent)
        capacity.append(cid)
    return parents


class _Ontology:
    """Mutable tree state for one side during generation.

    Both sides start from one sampled shape: two ontologies modeling the
    same domain share their hierarchy, which gives every concept a
    depth-matched counterpart on the other side.
    """

    def __init__(self, side: int, shape: Sequence[int | None]):
        self.side = side
        self.parent: dict[int, int | None] = {}
        self.children: dict[int, set[int]] = {cid: set() for cid in range(len(shape))}
        self.labels: dict[int, str] = {}
        self.alive: set[int] = set(range(len(shape)))
        self.next_id = len(shape)
        for cid, parent in enumerate(shape):
            self.parent[cid] = parent
            if parent is not None:
                self.children[parent].add(cid)
            self.labels[cid] = f"concept {side}.{cid}"

    def attach(self, cid: int, parent: int) -> None:
        self.parent[cid] = parent
        self.children.setdefault(parent, set()).add(cid)
        self.children.setdefault(cid, set())
        self.alive.add(cid)

    def iri(self, cid: int) -> str:
        return f"{ONTOLOGY_BASE}o{self.side}/c{cid}"

    def depth(self, cid: int) -> int:
        d = 0
        node = cid
        while self.parent[node] is not None:
            node = self.parent[node]
            d += 1
        return d

    def in_subtree(self, cid: int, root: int) -> bool:
        node: int | None = cid
        while node is not None:
            if node == root:
                return True
            node = self.parent[node]
        return False

    def neighbors(self, cid: int) -> list[int]:
        out: list[int] = []
        p = self.parent[cid]
        if p is not None and p in self.alive:
            out.append(p)
        out.extend(c for c in self.children[cid] if c in self.alive)
        return sorted(out)

    def within_two_hops(self, cid: int) -> list[tuple[int, int]]:
        """(distance, concept) pairs for the tree ball of radius 2."""
        dist = {cid: 0}
        queue = deque([cid])
        while queue:
            u = queue.popleft()
            if dist[u] >= 2:
                continue
            for v in self.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return sorted((d, c) for c, d in dist.items())

    def triples(self) -> TripleSet:
        sub = Term.iri(RDFS_SUBCLASS)
        label = Term.iri(RDFS_LABEL)
        out: set[Triple] = set()
        for cid in sorted(self.alive):
            me = Term.iri(self.iri(cid))
            p = self.parent[cid]
            if p is not None:
                out.add(Triple(me, sub, Term.iri(self.iri(p))))
            out.add(Triple(me, label, Term.literal(self.labels[cid])))
        return frozenset(out)


def _grow_region(
    onto: _Ontology, start: int, target: int, prefer: frozenset[int] | None
) -> set[int]:
    """Connected region of ``target`` concepts grown from ``start``.

    With ``prefer`` given, frontier concepts in that set are taken first,
    which lets the second region track the partners of the first.
    """
    region = {start}
    frontier: set[int] = set(onto.neighbors(start))
    while len(region) < target and frontier:
        if prefer is None:
            nxt = min(frontier)
        else:
            nxt = min(frontier, key=lambda c: (0 if c in prefer else 1, c))
        frontier.remove(nxt)
        region.add(nxt)
        for nb in onto.neighbors(nxt):
            if nb not in region:
                frontier.add(nb)
    return region


def generate_scenario(config: ScenarioConfig) -> Scenario:
    rng = random.Random(derive_seed(config.seed, "scenario"))
    n = config.concepts_per_ontology
    shape = _sample_tree_shape(n, config.branching_factor, rng)
    o1 = _Ontology(1, shape)
    o2 = _Ontology(2, shape)

    # concepts at the same tree position are depth-matched counterparts;
    # a seeded sample of those positions becomes the alignment
    candidates = [(cid, cid) for cid in range(n)]
    k = round(config.aligned_fraction * len(candidates))
    aligned_pairs = set(rng.sample(candidates, k)) if k else set()
    # endpoint-unique maps, cid -> partner cid
    left_of: dict[int, int] = {a: b for a, b in aligned_pairs}
    right_of: dict[int, int] = {b: a for a, b in aligned_pairs}

    target = max(1, round(config.volatile_fraction * n))
    aligned_left = sorted(left_of)
    seed_left = aligned_left[rng.randrange(len(aligned_left))] if aligned_left else 0
    volatile1 = _grow_region(o1, seed_left, target, None)
    partners = frozenset(left_of[c] for c in volatile1 if c in left_of)
    seed_right = left_of.get(seed_left, 0)
    volatile2 = _grow_region(o2, seed_right, target, partners)

    ontos = {1: o1, 2: o2}
    volatile = {1: volatile1, 2: volatile2}
    label_serial = 0

    def alignment_now() -> Alignment:
        return Alignment(
            Correspondence(Term.iri(o1.iri(a)), Term.iri(o2.iri(b)), Relation.EQUIVALENT)
            for a, b in sorted(left_of.items())
        )

    def endpoint_maps(side: int) -> dict[int, int]:
        return left_of if side == 1 else right_of

    def snapshot() -> EpochSnapshot:
        return EpochSnapshot(o1.triples(), o2.triples(), alignment_now())

    def delta_resources(added: Iterable[Triple], removed: Iterable[Triple]) -> tuple[str, ...]:
        out: set[str] = set()
        for t in list(added) + list(removed):
            for term in (t.subject, t.object):
                if term.is_iri:
                    out.add(term.lexical)
        return tuple(sorted(out))

    def remove_pair(side: int, cid: int) -> tuple[str, str]:
        if side == 1:
            partner = left_of.pop(cid)
            right_of.pop(partner)
            return (o1.iri(cid), o2.iri(partner))
        partner = right_of.pop(cid)
        left_of.pop(partner)
        return (o1.iri(partner), o2.iri(cid))

    def add_pair(side: int, cid: int, partner: int) -> tuple[str, str]:
        if side == 1:
            left_of[cid] = partner
            right_of[partner] = cid
            return (o1.iri(cid), o2.iri(partner))
        right_of[cid] = partner
        left_of[partner] = cid
        return (o1.iri(partner), o2.iri(cid))

    snapshots = [snapshot()]
    transitions: list[tuple[EditRecord, ...]] = []

    sub_pred = Term.iri(RDFS_SUBCLASS)
    label_pred = Term.iri(RDFS_LABEL)

    for transition in range(config.epochs - 1):
        edits: list[EditRecord] = []
        edited: dict[int, set[int]] = {1: set(), 2: set()}
        # concepts one hop outside the volatile region form a quiet ring:
        # left unedited, they separate cosmetic edits from the statements
        # the structural edits are about to disturb. Inside the region,
        # structural edits land on concepts with a correspondence at stake
        # (their own or their parent's), where the impact draw is live.
        allowed: dict[int, set[int]] = {}
        for side, onto in ontos.items():
            vol = volatile[side]
            ends = endpoint_maps(side)
            ring = {
                nb
                for c in vol
                if c in onto.alive
                for nb in onto.neighbors(c)
                if nb not in vol
            }
            editable = set()
            for c in vol:
                if c not in onto.alive or c == 0:
                    continue
                par = onto.parent[c]
                if c in ends or (par is not None and par in ends and par in vol):
                    editable.add(c)
            allowed[side] = (onto.alive - {0} - ring - vol) | editable
        for seq in range(config.edits_per_epoch):
            side = 1 + rng.randrange(2)
            onto = ontos[side]
            eligible = sorted((onto.alive & allowed[side]) - edited[side])
            if not eligible:
                side = 3 - side
                onto = ontos[side]
                eligible = sorted((onto.alive & allowed[side]) - edited[side])
                if not eligible:
                    break
            v = eligible[rng.randrange(len(eligible))]
            edited[side].add(v)
            ends = endpoint_maps(side)

            if v not in volatile[side]:
                # stable region: cosmetic relabel, never touches the alignment
                old = onto.labels[v]
                label_serial += 1
                new = f"label {transition}.{label_serial}"
                onto.labels[v] = new
                me = Term.iri(onto.iri(v))
                added = frozenset({Triple(me, label_pred, Term.literal(new))})
                removed = frozenset({Triple(me, label_pred, Term.literal(old))})
                edits.append(
                    EditRecord(
                        transition, seq, side, "relabel", onto.iri(v),
                        delta_resources(added, removed), False, None, None,
                        added, removed,
                    )
                )
                continue

            # structural edit in the volatile region
            p = onto.parent[v]
            assert p is not None  # root is never edited
            is_leaf = not any(c in onto.alive for c in onto.children[v])
            vol = volatile[side]

            # the correspondence at stake, if any: the parent's when the
            # parent is a volatile endpoint, otherwise the concept's own
            if p in ends and p in vol:
                trigger: int | None = p
            elif v in ends:
                trigger = v
            else:
                trigger = None

            # moves reattach within the immediate family (grandparent or a
            # sibling), keeping the rewired statements local; they are only
            # drawn when the edited concept itself is not the endpoint at
            # stake, so every touched resource stays near that statement
            family = set(onto.neighbors(p))
            move_candidates = sorted(
                c for c in family if c != v and not onto.in_subtree(c, v)
            )
            kinds = ["insert"]
            if move_candidates and trigger != v:
                kinds.append("move")
            if is_leaf:
                kinds.append("delete")
            kinds.sort()
            kind = kinds[rng.randrange(len(kinds))]
            if kind == "delete" and v in ends:
                # deleting an aligned leaf puts its own correspondence at
                # stake no matter what the parent is
                trigger = v

            affects = trigger is not None and rng.random() < config.p_affect
            if kind == "delete" and v in ends and not affects:
                # the correspondence survives, so the concept must too
                kind = "insert"

            corr_removed = None
            corr_added = None
            new_cid: int | None = None
            added: set[Triple] = set()
            removed: set[Triple] = set()
            me = Term.iri(onto.iri(v))

            if kind == "move":
                q = move_candidates[rng.randrange(len(move_candidates))]
                removed.add(Triple(me, sub_pred, Term.iri(onto.iri(p))))
                added.add(Triple(me, sub_pred, Term.iri(onto.iri(q))))
                onto.children[p].discard(v)
                onto.parent[v] = q
                onto.children[q].add(v)
            elif kind == "insert":
                new_cid = onto.next_id
                onto.next_id += 1
                onto.attach(new_cid, p)
                label_serial += 1
                onto.labels[new_cid] = f"concept {side}.{new_cid}"
                if v in volatile[side]:
                    volatile[side].add(new_cid)
                newt = Term.iri(onto.iri(new_cid))
                added.add(Triple(newt, sub_pred, Term.iri(onto.iri(p))))
                added.add(Triple(newt, label_pred, Term.literal(onto.labels[new_cid])))
                edited[side].add(new_cid)
            else:  # delete of a leaf
                removed.add(Triple(me, sub_pred, Term.iri(onto.iri(p))))
                removed.add(Triple(me, label_pred, Term.literal(onto.labels[v])))
                onto.alive.discard(v)
                onto.children[p].discard(v)

            if affects and trigger is not None:
                forced_remove = kind == "delete" and trigger == v
                retarget_to: int | None = None
                if not forced_remove and rng.random() < 0.9:
                    candidates_rt: list[int] = []
                    if kind == "move":
                        candidates_rt.append(onto.parent[v])  # the new parent q
                    elif kind == "insert":
                        candidates_rt.append(new_cid)
                    candidates_rt.extend(
                        c for _, c in onto.within_two_hops(trigger) if c != trigger
                    )
                    retarget_to = next(
                        (
                            c
                            for c in candidates_rt
                            if c is not None
                            and c in onto.alive
                            and c in volatile[side]
                            and c not in ends
                        ),
                        None,
                    )
                partner = ends[trigger]
                corr_removed = remove_pair(side, trigger)
                if retarget_to is not None:
                    corr_added = add_pair(side, retarget_to, partner)

            edits.append(
                EditRecord(
                    transition, seq, side, kind, onto.iri(v),
                    delta_resources(added, removed), affects,
                    corr_removed, corr_added,
                    frozenset(added), frozenset(removed),
                )
            )
        transitions.append(tuple(edits))
        snapshots.append(snapshot())

    return Scenario(
        config=config,
        snapshots=tuple(snapshots),
        transitions=tuple(transitions),
        volatile_left=frozenset(o1.iri(c) for c in volatile1),
        volatile_right=frozenset(o2.iri(c) for c in volatile2),
    )


def replay_transition(
    snapshot: EpochSnapshot, edits: Sequence[EditRecord]
) -> EpochSnapshot:
    """Apply logged edits to a snapshot; reproduces the next epoch exactly."""
    left = set(snapshot.left)
    right = set(snapshot.right)
    pairs = {
        (c.left.lexical, c.right.lexical): c.relation for c in snapshot.alignment
    }
    for edit in edits:
        target = left if edit.side == 1 else right
        target -= edit.triples_removed
        target |= edit.triples_added
        if edit.corr_removed is not None:
            del pairs[edit.corr_removed]
        if edit.corr_added is not None:
            pairs[edit.corr_added] = Relation.EQUIVALENT
    alignment = Alignment(
        Correspondence(Term.iri(a), Term.iri(b), rel) for (a, b), rel in sorted(pairs.items())
    )
    return EpochSnapshot(frozenset(left), frozenset(right), alignment)


_EDITLOG_HEADER = [
    "transition", "seq", "side", "action", "focus", "impact",
    "resources", "corr_removed", "corr_added",
]


def write_editlog_csv(scenario: Scenario) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_EDITLOG_HEADER)
    for edits in scenario.transitions:
        for e in edits:
            writer.writerow(
                [
                    e.transition, e.seq, e.side, e.action, e.focus,
                    "true" if e.impact else "false",
                    ";".join(e.resources),
                    " ".join(e.corr_removed) if e.corr_removed else "",
                    " ".join(e.corr_added) if e.corr_added else "",
                ]
            )
    return buf.getvalue()


def write_scenario(scenario: Scenario, out_dir: str | Path) -> list[Path]:
    """Write per-epoch .nt/.tsv files, the edit log, and a pipeline config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for i, snap in enumerate(scenario.snapshots):
        emit(f"o1_t{i}.nt", serialize_ntriples(snap.left))
        emit(f"o2_t{i}.nt", serialize_ntriples(snap.right))
        emit(f"align_t{i}.tsv", serialize_alignment(snap.alignment))
    emit("editlog.csv", write_editlog_csv(scenario))
    if len(scenario.snapshots) >= 3:
        # paths are file names, resolved relative to the config's directory
        cfg_lines = [
            "o1_t0=o1_t0.nt",
            "o2_t0=o2_t0.nt",
            "align_t0=align_t0.tsv",
            "o1_t1=o1_t1.nt",
            "o2_t1=o2_t1.nt",
            "align_t1=align_t1.tsv",
            "o1_t2=o1_t2.nt",
            "o2_t2=o2_t2.nt",
            "align_t2=align_t2.tsv",
            f"seed={scenario.config.seed}",
        ]
        emit("pipeline.cfg", "\n".join(cfg_lines) + "\n")
    return written
