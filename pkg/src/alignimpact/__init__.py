"""Predict whether ontology changes affect nearby alignment statements.

The package covers the full workflow: parse N-Triples ontology snapshots
and tab-separated alignments, diff consecutive versions, label each
changed resource by its graph distance to added or removed alignment
statements, embed the merged graph with random walks and skip-gram
training, and score a suite of classifiers on the resulting feature
rows. A synthetic scenario generator provides evolving test corpora, and
``alignimpact pipeline`` chains every stage.
"""

__version__ = "0.1.0"
