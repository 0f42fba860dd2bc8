"""Bipartite instance encoding and a deterministic forward-only message passer.

The graph carries all instance data losslessly: variable nodes hold c,
constraint nodes hold b, cross edges hold A's nonzeros and variable-variable
edges hold Q's nonzeros (diagonal entries become self-loops).  The network is
a reference forward pass, not a trainable model: fixed tanh updates with a
constraint half-step feeding the variable update, then sum pooling per side
and an affine readout.  Everything is reproducible from integer seeds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import InputError, LcqpInstance
from .rng import derive_rng


@dataclass(frozen=True)
class BipartiteGraph:
    n_var_nodes: int
    n_con_nodes: int
    var_features: np.ndarray
    con_features: np.ndarray
    ca_edges: tuple  # (con, var, weight), one per nonzero of A
    vv_edges: tuple  # (u, v, weight), one per nonzero of Q, mirrored pairs

    def __post_init__(self):
        vf = np.asarray(self.var_features, dtype=np.float64)
        cf = np.asarray(self.con_features, dtype=np.float64)
        if vf.shape != (self.n_var_nodes,) or cf.shape != (self.n_con_nodes,):
            raise InputError("node feature lengths must match node counts")
        object.__setattr__(self, "var_features", vf)
        object.__setattr__(self, "con_features", cf)
        ca = tuple((int(c), int(v), float(w)) for c, v, w in self.ca_edges)
        vv = tuple((int(u), int(v), float(w)) for u, v, w in self.vv_edges)
        for c, v, _ in ca:
            if not (0 <= c < self.n_con_nodes and 0 <= v < self.n_var_nodes):
                raise InputError(f"ca edge ({c}, {v}) out of range")
        seen = {}
        for u, v, w in vv:
            if not (0 <= u < self.n_var_nodes and 0 <= v < self.n_var_nodes):
                raise InputError(f"vv edge ({u}, {v}) out of range")
            seen[(u, v)] = w
        for (u, v), w in seen.items():
            if seen.get((v, u)) != w:
                raise InputError(f"vv edge ({u}, {v}) lacks a mirrored partner")
        object.__setattr__(self, "ca_edges", ca)
        object.__setattr__(self, "vv_edges", vv)


def to_bipartite_graph(inst: LcqpInstance) -> BipartiteGraph:
    ca = tuple(
        (int(r), int(c), float(w))
        for r, c, w in zip(inst.a.rows, inst.a.cols, inst.a.vals)
    )
    vv = tuple(
        (int(u), int(v), float(w))
        for u, v, w in zip(inst.q.rows, inst.q.cols, inst.q.vals)
    )
    return BipartiteGraph(
        n_var_nodes=inst.n, n_con_nodes=inst.m,
        var_features=inst.c.copy(), con_features=inst.b.copy(),
        ca_edges=ca, vv_edges=vv,
    )


@dataclass(frozen=True)
class MpnnWeights:
    """All parameter blocks of the reference network, reproducible from seed.

    Lifts map each scalar node feature to width d; per layer, the constraint
    update consumes (h_c, A-aggregate) and the variable update consumes
    (h_v, Q-aggregate, A-aggregate of fresh h_c); the readout maps the two
    pooled sums to the final vector.
    """

    seed: int
    width: int
    layers: int
    var_lift: tuple  # (w: (d,), b: (d,))
    con_lift: tuple
    con_updates: tuple  # per layer (W: (d, 2d), b: (d,))
    var_updates: tuple  # per layer (W: (d, 3d), b: (d,))
    readout: tuple  # (W: (d, 2d), b: (d,))

    def __post_init__(self):
        if self.layers < 1:
            raise InputError("layer count must be at least 1")
        for arr in self._all_arrays():
            if not np.all(np.isfinite(arr)):
                raise InputError("weights must be finite")

    def _all_arrays(self):
        out = [*self.var_lift, *self.con_lift, *self.readout]
        for w, b in (*self.con_updates, *self.var_updates):
            out += [w, b]
        return out

    def scaled(self, factor: float) -> "MpnnWeights":
        f = float(factor)
        pair = lambda p: (p[0] * f, p[1] * f)
        return MpnnWeights(
            seed=self.seed, width=self.width, layers=self.layers,
            var_lift=pair(self.var_lift), con_lift=pair(self.con_lift),
            con_updates=tuple(pair(p) for p in self.con_updates),
            var_updates=tuple(pair(p) for p in self.var_updates),
            readout=pair(self.readout),
        )


def init_mpnn_weights(seed: int, width: int = 16, layers: int = 2) -> MpnnWeights:
    if width < 1 or layers < 1:
        raise InputError("width and layers must be at least 1")
    rng = derive_rng(seed, "mpnn-init")

    def block(rows, cols):
        return rng.standard_normal((rows, cols)) / np.sqrt(cols)

    def bias():
        return rng.standard_normal(width) / np.sqrt(width)

    return MpnnWeights(
        seed=seed, width=width, layers=layers,
        var_lift=(rng.standard_normal(width), bias()),
        con_lift=(rng.standard_normal(width), bias()),
        con_updates=tuple((block(width, 2 * width), bias()) for _ in range(layers)),
        var_updates=tuple((block(width, 3 * width), bias()) for _ in range(layers)),
        readout=(block(width, 2 * width), bias()),
    )


def _edge_arrays(edges):
    if not edges:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.float64))
    arr = np.asarray(edges, dtype=np.float64)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]


def mpnn_forward(graph: BipartiteGraph, weights: MpnnWeights):
    """Run the fixed-depth forward pass; returns (h_var, h_con)."""
    d = weights.width
    wv, bv = weights.var_lift
    wc, bc = weights.con_lift
    hv = graph.var_features[:, None] * wv + bv
    hc = graph.con_features[:, None] * wc + bc
    e_con, e_var, e_w = _edge_arrays(graph.ca_edges)
    q_u, q_v, q_w = _edge_arrays(graph.vv_edges)
    for (cw, cb), (vw, vb) in zip(weights.con_updates, weights.var_updates):
        agg_a = np.zeros((graph.n_con_nodes, d))
        np.add.at(agg_a, e_con, e_w[:, None] * hv[e_var])
        hc = np.tanh(np.concatenate([hc, agg_a], axis=1) @ cw.T + cb)
        agg_q = np.zeros((graph.n_var_nodes, d))
        np.add.at(agg_q, q_v, q_w[:, None] * hv[q_u])
        agg_c = np.zeros((graph.n_var_nodes, d))
        np.add.at(agg_c, e_var, e_w[:, None] * hc[e_con])
        hv = np.tanh(np.concatenate([hv, agg_q, agg_c], axis=1) @ vw.T + vb)
    return hv, hc


def pooled_embedding(h_var, h_con, weights: MpnnWeights) -> np.ndarray:
    """Sum per side, concatenate, apply the affine readout."""
    h_var = np.asarray(h_var, dtype=np.float64)
    h_con = np.asarray(h_con, dtype=np.float64)
    if h_var.ndim != 2 or h_con.ndim != 2 or h_var.shape[1] != weights.width:
        raise InputError("embeddings must be (nodes, width) arrays")
    rw, rb = weights.readout
    return rw @ np.concatenate([h_var.sum(axis=0), h_con.sum(axis=0)]) + rb


def encode_instance(inst: LcqpInstance, weights: MpnnWeights) -> np.ndarray:
    h_var, h_con = mpnn_forward(to_bipartite_graph(inst), weights)
    return pooled_embedding(h_var, h_con, weights)


def nt_xent_loss(embeddings, positive_pairs: Sequence, tau: float) -> float:
    """Contrastive loss over pooled vectors: for each anchor i with positive
    j, -log of exp(cos(z_i, z_j)/tau) against all exp(cos(z_i, z_k)/tau),
    k != i, averaged over the anchors.  Evaluated via shifted logsumexp."""
    z = np.asarray(embeddings, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 2:
        raise InputError("embeddings must be a (count >= 2, dim) array")
    if not np.all(np.isfinite(z)):
        raise InputError("embeddings must be finite")
    if not tau > 0:
        raise InputError("tau must be positive")
    pairs = [(int(i), int(j)) for i, j in positive_pairs]
    if not pairs:
        raise InputError("need at least one positive pair")
    count = z.shape[0]
    for i, j in pairs:
        if not (0 <= i < count and 0 <= j < count) or i == j:
            raise InputError(f"bad positive pair ({i}, {j})")
    norms = np.linalg.norm(z, axis=1)
    if norms.min() <= 0.0:
        raise InputError("zero-norm embedding has no cosine similarity")
    zn = z / norms[:, None]
    logits = (zn @ zn.T) / tau
    total = 0.0
    for i, j in pairs:
        row = np.delete(logits[i], i)
        peak = row.max()
        denom = peak + np.log(np.exp(row - peak).sum())
        total += logits[i, j] - denom
    return float(-total / len(pairs))
