"""Shared builders for the test suite."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from semepred import EmbeddingTable, NodeId, RelationId
from semepred.graph import EQUIVALENCE_RELATION


def build_table(
    dimension: int,
    node_vecs: Mapping[NodeId, Sequence[float]],
    rel_vecs: Mapping[RelationId, Sequence[float]],
    include_equivalence: bool = True,
) -> EmbeddingTable:
    """Hand-built embedding table; adds a zero equivalence vector unless
    the caller supplies one."""
    rels = dict(rel_vecs)
    if include_equivalence and EQUIVALENCE_RELATION not in rels:
        rels[EQUIVALENCE_RELATION] = [0.0] * dimension
    node_ids = tuple(sorted(node_vecs, key=lambda n: n.name))
    relation_ids = tuple(sorted(rels, key=lambda r: r.sort_key))
    return EmbeddingTable(
        dimension=dimension,
        node_ids=node_ids,
        relation_ids=relation_ids,
        node_matrix=np.array([node_vecs[n] for n in node_ids], dtype=np.float64).reshape(
            len(node_ids), dimension
        ),
        relation_matrix=np.array([rels[r] for r in relation_ids], dtype=np.float64).reshape(
            len(relation_ids), dimension
        ),
    )
