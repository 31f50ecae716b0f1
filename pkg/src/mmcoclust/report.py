"""Membership analysis and on-disk formats for instances and detection results.

Community numbers in files are 1-based. Membership CSVs have the columns
``node_id, w1..wK`` and, for detection output, ``home_base, mixed_flag``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np

from .edgelist import LabeledStack, parse_multiplex_edges, read_label_file, write_label_file, write_multiplex_edges
from .model import GroundTruth, Membership, MixingSequence
from .pipeline import DetectionResult
from .spectral import EigenBasis
from .vertex_hunting import VertexSet

FORMAT_VERSION = 1


@dataclass(frozen=True)
class MembershipReport:
    """Home-base communities (0-based) and highly-mixed flags per node and side."""

    threshold: float
    home_r: np.ndarray
    home_c: np.ndarray
    mixed_export: np.ndarray
    mixed_import: np.ndarray
    pi_r: np.ndarray
    pi_c: np.ndarray
    node_labels: tuple

    def flagged(self, side: str) -> list:
        """``(label, membership row)`` for every highly mixed node on ``side``."""
        mask, W = (self.mixed_export, self.pi_r) if side == "row" else (self.mixed_import, self.pi_c)
        return [(self.node_labels[i], W[i].tolist()) for i in np.flatnonzero(mask)]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "highly_mixed_export": [{"node": lab, "membership": row} for lab, row in self.flagged("row")],
            "highly_mixed_import": [{"node": lab, "membership": row} for lab, row in self.flagged("col")],
            "home_base_row": {lab: int(k) + 1 for lab, k in zip(self.node_labels, self.home_r)},
            "home_base_col": {lab: int(k) + 1 for lab, k in zip(self.node_labels, self.home_c)},
        }


def analyze_memberships(result: DetectionResult, threshold: float = 0.5,
                        node_labels: Optional[Sequence[str]] = None) -> MembershipReport:
    """Home-base communities and highly-mixed flags.

    A node is highly mixed on a side when its largest membership weight is
    at most ``threshold``. The home base is the argmax, first community on
    ties.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    W_r, W_c = result.pi_r_hat.W, result.pi_c_hat.W
    labels = tuple(node_labels) if node_labels is not None else tuple(str(i + 1) for i in range(result.n))
    if len(labels) != result.n:
        raise ValueError(f"{len(labels)} labels for {result.n} nodes")
    return MembershipReport(
        threshold=float(threshold),
        home_r=np.argmax(W_r, axis=1),
        home_c=np.argmax(W_c, axis=1),
        mixed_export=W_r.max(axis=1) <= threshold,
        mixed_import=W_c.max(axis=1) <= threshold,
        pi_r=W_r,
        pi_c=W_c,
        node_labels=labels,
    )


def write_membership_csv(W, stream: TextIO, node_labels: Sequence[str], home=None, mixed=None) -> None:
    W = np.asarray(getattr(W, "W", W))
    K = W.shape[1]
    header = ["node_id"] + [f"w{k + 1}" for k in range(K)]
    if home is not None:
        header += ["home_base", "mixed_flag"]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for i, label in enumerate(node_labels):
        row = [label] + [repr(float(x)) for x in W[i]]
        if home is not None:
            row += [int(home[i]) + 1, int(bool(mixed[i]))]
        writer.writerow(row)


def read_membership_csv(stream: TextIO):
    """``(node_labels, W)`` from a membership CSV; extra columns are ignored."""
    reader = csv.reader(stream)
    header = next(reader)
    wcols = [i for i, h in enumerate(header) if h.startswith("w") and h[1:].isdigit()]
    labels, rows = [], []
    for rec in reader:
        if not rec:
            continue
        labels.append(rec[0])
        rows.append([float(rec[i]) for i in wcols])
    return tuple(labels), np.array(rows, dtype=float)


def save_result(result: DetectionResult, out_dir, node_labels: Sequence[str], threshold: float = 0.5) -> MembershipReport:
    """Write memberships as CSV and vertices, spectra and diagnostics as JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = analyze_memberships(result, threshold, node_labels)
    with open(out / "memberships_row.csv", "w", newline="") as fh:
        write_membership_csv(result.pi_r_hat, fh, rep.node_labels, rep.home_r, rep.mixed_export)
    with open(out / "memberships_col.csv", "w", newline="") as fh:
        write_membership_csv(result.pi_c_hat, fh, rep.node_labels, rep.home_c, rep.mixed_import)
    payload = {
        "format_version": FORMAT_VERSION,
        "method": result.method,
        "n": result.n,
        "K": result.K,
        "threshold": threshold,
        "node_labels": list(rep.node_labels),
        "vertices_row": [int(i) for i in result.vertices_r.indices],
        "vertices_col": [int(i) for i in result.vertices_c.indices],
        "pick_norms_row": list(result.vertices_r.pick_norms),
        "pick_norms_col": list(result.vertices_c.pick_norms),
        "eigenvalues_row": result.spectrum_r.lam.tolist(),
        "eigenvalues_col": result.spectrum_c.lam.tolist(),
        "eigenvectors_row": result.spectrum_r.U.tolist(),
        "eigenvectors_col": result.spectrum_c.U.tolist(),
        "diagnostics": {k: (v.item() if hasattr(v, "item") else v) for k, v in result.diagnostics.items()},
    }
    with open(out / "result.json", "w") as fh:
        json.dump(payload, fh, indent=1)
    return rep


def load_result(in_dir):
    """``(DetectionResult, node_labels)`` from a directory written by :func:`save_result`.

    Vertex indices in ``result.json`` are 0-based.
    """
    d = Path(in_dir)
    with open(d / "result.json") as fh:
        meta = json.load(fh)
    with open(d / "memberships_row.csv", newline="") as fh:
        labels, W_r = read_membership_csv(fh)
    with open(d / "memberships_col.csv", newline="") as fh:
        _, W_c = read_membership_csv(fh)
    res = DetectionResult(
        Membership(W_r),
        Membership(W_c),
        VertexSet(tuple(meta["vertices_row"]), tuple(meta["pick_norms_row"])),
        VertexSet(tuple(meta["vertices_col"]), tuple(meta["pick_norms_col"])),
        EigenBasis(np.array(meta["eigenvectors_row"]), np.array(meta["eigenvalues_row"])),
        EigenBasis(np.array(meta["eigenvectors_col"]), np.array(meta["eigenvalues_col"])),
        meta["method"],
        dict(meta["diagnostics"]),
    )
    return res, labels


def save_instance(out_dir, truth: GroundTruth, B: MixingSequence, ls: LabeledStack, rho: float, seed: int) -> None:
    """Write a synthetic instance: memberships, mixing matrices, edge list and manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "pi_r.csv", "w", newline="") as fh:
        write_membership_csv(truth.pi_r, fh, ls.node_labels)
    with open(out / "pi_c.csv", "w", newline="") as fh:
        write_membership_csv(truth.pi_c, fh, ls.node_labels)
    with open(out / "edges.txt", "w") as fh:
        write_multiplex_edges(ls, fh)
    with open(out / "nodes.txt", "w") as fh:
        write_label_file(ls.node_labels, fh, "nodeID nodeLabel")
    with open(out / "layers.txt", "w") as fh:
        write_label_file(ls.layer_labels, fh, "layerID layerLabel")
    with open(out / "mixing.json", "w") as fh:
        json.dump({"B": B.B.tolist()}, fh)
    manifest = {
        "format_version": FORMAT_VERSION,
        "n": truth.pi_r.n,
        "K": truth.pi_r.K,
        "L": B.L,
        "rho": rho,
        "seed": seed,
        "pure_r": list(truth.pure_r),
        "pure_c": list(truth.pure_c),
        "files": {
            "pi_r": "pi_r.csv",
            "pi_c": "pi_c.csv",
            "edges": "edges.txt",
            "nodes": "nodes.txt",
            "layers": "layers.txt",
            "mixing": "mixing.json",
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)


def load_labeled_stack(edges_path, nodes_path=None, layers_path=None) -> LabeledStack:
    node_map = layer_map = None
    if nodes_path is not None:
        with open(nodes_path) as fh:
            node_map = read_label_file(fh)
    if layers_path is not None:
        with open(layers_path) as fh:
            layer_map = read_label_file(fh)
    with open(edges_path) as fh:
        return parse_multiplex_edges(fh, node_map, layer_map)


def load_instance(in_dir):
    """``(manifest, GroundTruth, MixingSequence, LabeledStack)``."""
    d = Path(in_dir)
    with open(d / "manifest.json") as fh:
        manifest = json.load(fh)
    files = manifest["files"]
    with open(d / files["pi_r"], newline="") as fh:
        _, W_r = read_membership_csv(fh)
    with open(d / files["pi_c"], newline="") as fh:
        _, W_c = read_membership_csv(fh)
    truth = GroundTruth(Membership(W_r), Membership(W_c), tuple(manifest["pure_r"]), tuple(manifest["pure_c"]))
    with open(d / files["mixing"]) as fh:
        B = MixingSequence(np.array(json.load(fh)["B"]))
    ls = load_labeled_stack(d / files["edges"], d / files["nodes"], d / files["layers"])
    return manifest, truth, B, ls
