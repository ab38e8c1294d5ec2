"""Random outgoing walks over the merged graph, and the walk corpus format.

Each walk starts at an entity node and follows up to ``depth`` outgoing
edges, recording the predicate and target of every step. Literal targets
end a walk. Every (entity, replica) pair draws from its own derived seed,
so the corpus is reproducible no matter how the work is split up or which
other entities are walked alongside.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidConfig
from .rdf import Graph, Term
from .seeding import derive_seed

Walk = tuple[str, ...]

DEFAULT_DEPTH = 8
DEFAULT_WALKS_PER_ENTITY = 100


@dataclass(frozen=True, slots=True)
class WalkConfig:
    depth: int = DEFAULT_DEPTH
    walks_per_entity: int = DEFAULT_WALKS_PER_ENTITY
    include_literals: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise InvalidConfig(f"walk depth must be >= 1, got {self.depth}")
        if self.walks_per_entity < 1:
            raise InvalidConfig(
                f"walks per entity must be >= 1, got {self.walks_per_entity}"
            )


def token_of(term: Term) -> str:
    """Corpus token for a term: bare IRI, or the literal text in quotes."""
    if term.is_iri:
        return term.lexical
    return f'"{term.lexical}"'


def generate_walks(
    graph: Graph, config: WalkConfig, starts: Sequence[int] | None = None
) -> list[Walk]:
    """Walk ``walks_per_entity`` times from each start node.

    ``starts`` defaults to every IRI node. Output is ordered by
    (start node id, replica). Walks from a given entity depend only on
    the seed, the entity, and the replica index.
    """
    if starts is None:
        start_ids = list(graph.iri_nodes())
    else:
        start_ids = sorted(set(starts))
        for node in start_ids:
            if not 0 <= node < len(graph):
                raise InvalidConfig(f"walk start {node} outside graph of {len(graph)} nodes")
    tokens = [token_of(term) for term in graph.terms]
    if config.include_literals:
        adjacency = graph.out
    else:
        adjacency = tuple(
            tuple(e for e in edges if graph.terms[e[1]].is_iri) for edges in graph.out
        )
    is_literal = tuple(term.is_literal for term in graph.terms)

    walks: list[Walk] = []
    depth = config.depth
    for node in start_ids:
        entity = graph.terms[node].lexical
        for replica in range(config.walks_per_entity):
            rng = random.Random(derive_seed(config.seed, "walk", entity, replica))
            trail = [tokens[node]]
            current = node
            for _ in range(depth):
                edges = adjacency[current]
                if not edges:
                    break
                pred, dst = edges[rng.randrange(len(edges))]
                trail.append(tokens[pred])
                trail.append(tokens[dst])
                if is_literal[dst]:
                    break
                current = dst
            walks.append(tuple(trail))
    return walks


_ENCODE = {"%": "%25", " ": "%20", "\t": "%09", "\n": "%0A", "\r": "%0D"}
_DECODE = {"25": "%", "20": " ", "09": "\t", "0A": "\n", "0D": "\r"}
_DECODE_RE = re.compile("%(25|20|09|0A|0D)")


def _encode_token(token: str) -> str:
    if not any(c in token for c in _ENCODE):
        return token
    token = token.replace("%", "%25")
    for raw, enc in _ENCODE.items():
        if raw != "%":
            token = token.replace(raw, enc)
    return token


def _decode_token(token: str) -> str:
    return _DECODE_RE.sub(lambda m: _DECODE[m.group(1)], token)


def write_corpus(walks: Iterable[Walk]) -> str:
    """One walk per line, space-separated, whitespace and % escaped."""
    return "".join(
        " ".join(_encode_token(tok) for tok in walk) + "\n" for walk in walks
    )


def read_corpus(text: str) -> list[Walk]:
    walks: list[Walk] = []
    for line in text.split("\n"):
        if not line:
            continue
        walks.append(tuple(_decode_token(tok) for tok in line.split(" ")))
    return walks
