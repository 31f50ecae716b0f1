"""Multiplex edge lists: parsing, writing, layer selection and node merging.

Edge files hold one edge per line::

    layer_id source_id target_id [weight]

Lines starting with ``#`` are comments. Any positive (or absent) weight
becomes an unweighted directed edge, and repeated lines collapse to one
edge. Label files map ids to names, one ``id label`` pair per line; the
label may contain spaces.

Ids written by :func:`write_multiplex_edges` are 1-based positions;
matrices are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .model import AdjacencyStack

_HEADER_TOKENS = {"nodeid", "layerid", "id"}


class ParseError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class MergeError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledStack:
    stack: AdjacencyStack
    node_labels: tuple
    layer_labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "node_labels", tuple(str(x) for x in self.node_labels))
        object.__setattr__(self, "layer_labels", tuple(str(x) for x in self.layer_labels))
        if len(self.node_labels) != self.stack.n:
            raise ValueError(f"{len(self.node_labels)} node labels for {self.stack.n} nodes")
        if len(self.layer_labels) != self.stack.L:
            raise ValueError(f"{len(self.layer_labels)} layer labels for {self.stack.L} layers")
        for axis, labels in (("node", self.node_labels), ("layer", self.layer_labels)):
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate {axis} labels")

    @property
    def n(self) -> int:
        return self.stack.n

    @property
    def L(self) -> int:
        return self.stack.L


def read_label_file(stream: TextIO) -> dict:
    """``{id: label}`` in file order."""
    labels = {}
    first = True
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if first and parts[0].lower() in _HEADER_TOKENS:
            first = False
            continue
        first = False
        if len(parts) != 2:
            raise ParseError(f"expected 'id label', got {line!r}", lineno)
        key, label = parts[0], parts[1].strip()
        if key in labels:
            raise ParseError(f"duplicate id {key!r}", lineno)
        labels[key] = label
    return labels


def write_label_file(labels: Sequence[str], stream: TextIO, header: str = "id label") -> None:
    stream.write(f"# {header}\n")
    for i, label in enumerate(labels, 1):
        stream.write(f"{i} {label}\n")


def _order(ids: Iterable[str]) -> list:
    ids = list(dict.fromkeys(ids))
    try:
        return sorted(ids, key=int)
    except ValueError:
        return ids


def parse_multiplex_edges(
    stream: TextIO,
    node_labels: Optional[Mapping[str, str]] = None,
    layer_labels: Optional[Mapping[str, str]] = None,
) -> LabeledStack:
    """Read a multiplex edge list into a :class:`LabeledStack`.

    Without label maps the node set is the union of edge endpoints over all
    layers, ordered numerically when every id is an integer and by first
    appearance otherwise; the same holds for layers. With a label map every
    listed id is kept in map order, including ids with no edges, and ids
    missing from the map are rejected.
    """
    edges = []
    node_seen, layer_seen = [], []
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 'layer source target [weight]', got {line!r}", lineno)
        layer, src, dst = parts[:3]
        if len(parts) == 4:
            try:
                w = float(parts[3])
            except ValueError:
                raise ParseError(f"weight {parts[3]!r} is not a number", lineno) from None
            if not np.isfinite(w):
                raise ParseError(f"weight {parts[3]!r} is not finite", lineno)
            if w < 0:
                raise ParseError(f"negative weight {w}", lineno)
            if w == 0:
                continue
        for key, table, kind in ((src, node_labels, "node"), (dst, node_labels, "node"), (layer, layer_labels, "layer")):
            if table is not None and key not in table:
                raise ParseError(f"unknown {kind} label {key!r}", lineno)
        edges.append((layer, src, dst))
        layer_seen.append(layer)
        node_seen.extend((src, dst))
    if not edges:
        raise ParseError("no edges")

    node_ids = list(node_labels) if node_labels is not None else _order(node_seen)
    layer_ids = list(layer_labels) if layer_labels is not None else _order(layer_seen)
    node_pos = {k: i for i, k in enumerate(node_ids)}
    layer_pos = {k: i for i, k in enumerate(layer_ids)}
    n, L = len(node_ids), len(layer_ids)

    arr = np.array([(layer_pos[l], node_pos[s], node_pos[t]) for l, s, t in edges], dtype=np.int64)
    mats = []
    for l in range(L):
        sel = arr[arr[:, 0] == l]
        A = sp.csr_matrix((np.ones(len(sel), dtype=np.int8), (sel[:, 1], sel[:, 2])), shape=(n, n))
        A.sum_duplicates()
        A.data[:] = 1
        mats.append(A)

    nl = [node_labels[k] for k in node_ids] if node_labels is not None else node_ids
    ll = [layer_labels[k] for k in layer_ids] if layer_labels is not None else layer_ids
    return LabeledStack(AdjacencyStack(tuple(mats)), tuple(nl), tuple(ll))


def write_multiplex_edges(ls: LabeledStack, stream: TextIO) -> None:
    """Write edges as 1-based ``layer source target`` lines."""
    stream.write("# layer source target (1-based)\n")
    for l, A in enumerate(ls.stack.layers, 1):
        coo = A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for i, j in zip(coo.row[order].tolist(), coo.col[order].tolist()):
            stream.write(f"{l} {i + 1} {j + 1}\n")


def select_top_layers(ls: LabeledStack, L_target: int) -> LabeledStack:
    """Keep the ``L_target`` layers with the most edges, densest first.

    Ties keep the original layer order.
    """
    if not (1 <= L_target <= ls.L):
        raise ValueError(f"cannot select {L_target} of {ls.L} layers")
    counts = ls.stack.edge_counts()
    order = sorted(range(ls.L), key=lambda l: (-counts[l], l))[:L_target]
    return LabeledStack(
        AdjacencyStack(tuple(ls.stack.layers[l] for l in order)),
        ls.node_labels,
        tuple(ls.layer_labels[l] for l in order),
    )


def read_merge_spec(stream: TextIO) -> list:
    """Pairs ``(kept_label, absorbed_label)``, one tab- or comma-separated pair per line."""
    pairs = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sep = "\t" if "\t" in line else ","
        parts = [p.strip() for p in line.split(sep)]
        if len(parts) != 2 or not all(parts):
            raise ParseError(f"expected 'kept<TAB>absorbed' or 'kept,absorbed', got {line!r}", lineno)
        pairs.append((parts[0], parts[1]))
    return pairs


def merge_nodes(ls: LabeledStack, merge_spec: Sequence[tuple]) -> LabeledStack:
    """Fold absorbed nodes into their keepers with a per-layer boolean OR.

    Edges between a keeper and its absorbed node become self-loops and are
    kept.
    """
    pos = {label: i for i, label in enumerate(ls.node_labels)}
    target = {}
    keepers = set()
    for kept, absorbed in merge_spec:
        for label in (kept, absorbed):
            if label not in pos:
                raise MergeError(f"unknown label {label!r}")
        if kept == absorbed:
            raise MergeError(f"cyclic merge spec: {kept!r} absorbs itself")
        if absorbed in target:
            raise MergeError(f"{absorbed!r} is absorbed more than once")
        target[absorbed] = kept
        keepers.add(kept)
    chained = keepers & set(target)
    if chained:
        raise MergeError(f"cyclic merge spec: {sorted(chained)} both absorb and are absorbed")

    kept_idx = [i for i, label in enumerate(ls.node_labels) if label not in target]
    new_pos = {old: new for new, old in enumerate(kept_idx)}
    mapping = np.array(
        [new_pos[i] if label not in target else new_pos[pos[target[label]]] for i, label in enumerate(ls.node_labels)]
    )
    n_old, n_new = ls.n, len(kept_idx)
    P = sp.csr_matrix((np.ones(n_old, dtype=np.int64), (mapping, np.arange(n_old))), shape=(n_new, n_old))
    layers = []
    for A in ls.stack.layers:
        M = (P @ A.astype(np.int64) @ P.T).tocsr()
        M.eliminate_zeros()
        M.data[:] = 1
        layers.append(M)
    return LabeledStack(
        AdjacencyStack(tuple(layers)),
        tuple(ls.node_labels[i] for i in kept_idx),
        ls.layer_labels,
    )
