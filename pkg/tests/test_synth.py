"""Scenario generator tests: determinism, invariants, and label agreement."""
import dataclasses

import pytest

from alignimpact.alignment import (
    diff_alignments,
    parse_alignment,
    reify,
    statement_iris,
)
from alignimpact.changes import ImpactLabel, Side, diff_ontologies, label_changes
from alignimpact.errors import InvalidConfig
from alignimpact.rdf import build_graph, parse_ntriples
from alignimpact.synth import (
    RDFS_LABEL,
    RDFS_SUBCLASS,
    EpochSnapshot,
    ScenarioConfig,
    generate_scenario,
    replay_transition,
    write_editlog_csv,
    write_scenario,
)

SMALL = ScenarioConfig(
    concepts_per_ontology=300,
    branching_factor=3,
    aligned_fraction=0.7,
    volatile_fraction=0.3,
    edits_per_epoch=120,
    p_affect=0.95,
    epochs=3,
    seed=11,
)


def label_transition(scenario, t, radius=2):
    s0, s1 = scenario.snapshots[t], scenario.snapshots[t + 1]
    changes = diff_ontologies(s0.left, s1.left, Side.LEFT) + diff_ontologies(
        s0.right, s1.right, Side.RIGHT
    )
    merged = build_graph([s0.left, s0.right, reify(s0.alignment)])
    delta = diff_alignments(s0.alignment, s1.alignment)
    stmts = statement_iris(s0.alignment)
    return label_changes(changes, merged, delta, stmts, radius=radius)


def parents_from(triples):
    return {
        t.subject.lexical: t.object.lexical
        for t in triples
        if t.predicate.lexical == RDFS_SUBCLASS
    }


@pytest.mark.parametrize(
    "kwargs",
    [
        {"concepts_per_ontology": 1},
        {"branching_factor": 0},
        {"epochs": 0},
        {"edits_per_epoch": -1},
        {"aligned_fraction": 1.5},
        {"volatile_fraction": -0.1},
        {"p_affect": 2.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        ScenarioConfig(**kwargs)


def test_initial_trees_well_formed():
    cfg = ScenarioConfig(
        concepts_per_ontology=200, branching_factor=3, epochs=1, seed=3
    )
    scenario = generate_scenario(cfg)
    assert len(scenario.snapshots) == 1
    assert scenario.transitions == ()
    for triples in (scenario.snapshots[0].left, scenario.snapshots[0].right):
        parents = parents_from(triples)
        labels = [t for t in triples if t.predicate.lexical == RDFS_LABEL]
        subjects = {t.subject.lexical for t in triples}
        assert len(labels) == 200
        assert len(parents) == 199  # every concept except the root
        child_counts: dict[str, int] = {}
        for child, parent in parents.items():
            assert parent in subjects
            child_counts[parent] = child_counts.get(parent, 0) + 1
        assert max(child_counts.values()) <= 3
        # one connected tree: walking up from any concept reaches the root
        root = subjects - set(parents)
        assert len(root) == 1


def test_same_seed_reproduces_scenario_exactly():
    a = generate_scenario(SMALL)
    b = generate_scenario(SMALL)
    assert a.snapshots == b.snapshots
    assert a.transitions == b.transitions
    assert write_editlog_csv(a) == write_editlog_csv(b)


def test_different_seed_differs():
    a = generate_scenario(SMALL)
    b = generate_scenario(dataclasses.replace(SMALL, seed=12))
    assert write_editlog_csv(a) != write_editlog_csv(b)


def test_zero_edits_keeps_snapshots_identical():
    cfg = ScenarioConfig(
        concepts_per_ontology=120, edits_per_epoch=0, epochs=4, seed=5
    )
    scenario = generate_scenario(cfg)
    assert len(scenario.snapshots) == 4
    for snap in scenario.snapshots[1:]:
        assert snap == scenario.snapshots[0]
        assert snap.alignment == scenario.snapshots[0].alignment


def test_alignment_is_depth_matched_and_sized():
    cfg = ScenarioConfig(
        concepts_per_ontology=250, aligned_fraction=0.4, epochs=1, seed=7
    )
    scenario = generate_scenario(cfg)
    snap = scenario.snapshots[0]
    assert len(list(snap.alignment)) == round(0.4 * 250)
    pl = parents_from(snap.left)
    pr = parents_from(snap.right)

    def depth(parents, node):
        d = 0
        while node in parents:
            node = parents[node]
            d += 1
        return d

    for corr in snap.alignment:
        assert depth(pl, corr.left.lexical) == depth(pr, corr.right.lexical)


def test_volatile_region_connected_and_sized():
    cfg = ScenarioConfig(
        concepts_per_ontology=400, volatile_fraction=0.25, epochs=1, seed=9
    )
    scenario = generate_scenario(cfg)
    assert len(scenario.volatile_left) == round(0.25 * 400)
    parents = parents_from(scenario.snapshots[0].left)
    adjacency: dict[str, set[str]] = {}
    for child, parent in parents.items():
        adjacency.setdefault(child, set()).add(parent)
        adjacency.setdefault(parent, set()).add(child)
    region = set(scenario.volatile_left)
    start = next(iter(sorted(region)))
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nb in adjacency.get(node, ()):
            if nb in region and nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    assert seen == region


def test_correspondences_reference_living_concepts():
    scenario = generate_scenario(SMALL)
    for snap in scenario.snapshots:
        left_subjects = {t.subject.lexical for t in snap.left}
        right_subjects = {t.subject.lexical for t in snap.right}
        for corr in snap.alignment:
            assert corr.left.lexical in left_subjects
            assert corr.right.lexical in right_subjects


def test_replay_reproduces_every_snapshot():
    scenario = generate_scenario(SMALL)
    current = scenario.snapshots[0]
    for t, edits in enumerate(scenario.transitions):
        current = replay_transition(current, edits)
        assert current.left == scenario.snapshots[t + 1].left
        assert current.right == scenario.snapshots[t + 1].right
        assert current.alignment == scenario.snapshots[t + 1].alignment


def test_structural_and_cosmetic_edits_stay_in_their_regions():
    scenario = generate_scenario(SMALL)
    volatile = {1: scenario.volatile_left, 2: scenario.volatile_right}
    for edits in scenario.transitions:
        for e in edits:
            if e.action == "relabel":
                assert e.focus not in volatile[e.side]
                assert e.corr_removed is None and e.corr_added is None
                assert not e.impact
            else:
                assert e.focus in volatile[e.side]


def test_p_affect_zero_produces_no_positives():
    cfg = dataclasses.replace(SMALL, p_affect=0.0)
    scenario = generate_scenario(cfg)
    for snap in scenario.snapshots[1:]:
        assert snap.alignment == scenario.snapshots[0].alignment
    for t, edits in enumerate(scenario.transitions):
        assert not any(e.impact for e in edits)
        assert label_transition(scenario, t).positives == 0


def test_p_affect_one_produces_positives():
    cfg = dataclasses.replace(SMALL, p_affect=1.0)
    scenario = generate_scenario(cfg)
    for t in range(cfg.epochs - 1):
        assert label_transition(scenario, t).positives > 0


def test_deleting_aligned_concept_drops_its_correspondence():
    cfg = ScenarioConfig(
        concepts_per_ontology=200,
        aligned_fraction=0.9,
        volatile_fraction=1.0,
        edits_per_epoch=150,
        p_affect=1.0,
        epochs=3,
        seed=2,
    )
    scenario = generate_scenario(cfg)
    checked = 0
    for t, edits in enumerate(scenario.transitions):
        next_align = {
            (c.left.lexical, c.right.lexical) for c in scenario.snapshots[t + 1].alignment
        }
        for e in edits:
            if e.action != "delete":
                continue
            if e.corr_removed is not None and e.focus in e.corr_removed:
                assert e.impact
                assert e.corr_removed not in next_align
                checked += 1
    assert checked > 0  # the scenario actually exercised aligned deletes


def test_editlog_agrees_with_recomputed_labels():
    for seed in (0, 1, 2):
        scenario = generate_scenario(ScenarioConfig(seed=seed))
        for t, edits in enumerate(scenario.transitions):
            result = label_transition(scenario, t)
            expected: dict[tuple[int, str], bool] = {}
            for e in edits:
                for r in e.resources:
                    key = (e.side, r)
                    expected[key] = expected.get(key, False) or e.impact
            agree = 0
            for c in result.labeled:
                side = 1 if c.side is Side.LEFT else 2
                want = expected.get((side, c.resource.lexical), False)
                if (c.label is ImpactLabel.AFFECTS) == want:
                    agree += 1
            total = len(result.labeled)
            assert total > 0
            assert agree / total >= 0.95


def test_default_config_hits_target_volume_and_balance():
    scenario = generate_scenario(ScenarioConfig(seed=0))
    for t in range(len(scenario.transitions)):
        result = label_transition(scenario, t)
        n = len(result.labeled)
        assert 500 <= n <= 1000
        assert 0.35 <= result.positives / n <= 0.50


def test_editlog_csv_shape():
    scenario = generate_scenario(SMALL)
    text = write_editlog_csv(scenario)
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    assert header[:6] == ["transition", "seq", "side", "action", "focus", "impact"]
    assert len(lines) - 1 == sum(len(e) for e in scenario.transitions)
    assert all(",true," in line or ",false," in line for line in lines[1:])


def test_write_scenario_roundtrip(tmp_path):
    scenario = generate_scenario(SMALL)
    paths = write_scenario(scenario, tmp_path)
    names = {p.name for p in paths}
    for i in range(3):
        assert {f"o1_t{i}.nt", f"o2_t{i}.nt", f"align_t{i}.tsv"} <= names
    assert "editlog.csv" in names and "pipeline.cfg" in names
    left1 = parse_ntriples((tmp_path / "o1_t1.nt").read_text())
    assert left1 == scenario.snapshots[1].left
    align2 = parse_alignment((tmp_path / "align_t2.tsv").read_text())
    assert align2 == scenario.snapshots[2].alignment
    # a second write produces byte-identical files
    other = tmp_path / "again"
    write_scenario(scenario, other)
    for p in paths:
        assert (other / p.name).read_bytes() == p.read_bytes()


def test_snapshot_is_frozen_value_object():
    scenario = generate_scenario(
        ScenarioConfig(concepts_per_ontology=50, epochs=2, edits_per_epoch=10, seed=1)
    )
    snap = scenario.snapshots[0]
    assert isinstance(snap, EpochSnapshot)
    with pytest.raises(AttributeError):
        snap.left = frozenset()
