"""Simplified face-graph encoder producing per-face and whole-shape features."""

from __future__ import annotations

import numpy as np

from .nn import Linear, Module, collect
from .tensor import ShapeMismatchError, Tensor, concat, gelu

N_ROUNDS = 2   # message-passing depth


def neighbor_means(x: Tensor, edge_index: np.ndarray) -> Tensor:
    """Mean over graph neighbors per node; isolated nodes get zeros."""
    n = x.shape[0]
    mix = np.zeros((n, n), dtype=np.float64)
    for i, j in edge_index:
        mix[i, j] = 1.0
        mix[j, i] = 1.0
    deg = mix.sum(axis=1, keepdims=True)
    np.divide(mix, deg, out=mix, where=deg > 0)
    return Tensor(mix) @ x


class BrepEncoder(Module):
    """Grid MLP + mean-neighbor message passing + pooled shape feature.

    encode() returns z_brep of shape (N, 2 * d_node): per-face embeddings
    E_node concatenated with the broadcast shape embedding E_shape.
    """

    def __init__(self, rng, resolution: int, d_node: int):
        self.resolution = resolution
        self.d_node = d_node
        d_in = resolution * resolution * 7
        self.grid1 = Linear(rng, d_in, d_node)
        self.grid2 = Linear(rng, d_node, d_node)
        self.rounds = [Linear(rng, d_node, d_node) for _ in range(N_ROUNDS)]
        self.shape_proj = Linear(rng, d_node, d_node)

    def _check(self, face_grids: np.ndarray, edge_index: np.ndarray):
        grids = np.asarray(face_grids, dtype=np.float64)
        r = self.resolution
        if grids.ndim != 4 or grids.shape[1:] != (r, r, 7):
            raise ShapeMismatchError(
                f"face grids must be (N, {r}, {r}, 7), got {grids.shape}")
        if grids.shape[0] < 1:
            raise ShapeMismatchError("need at least one face")
        return grids, np.asarray(edge_index, dtype=np.int64).reshape(-1, 2)

    def _face_features(self, grids: np.ndarray, edges: np.ndarray) -> Tensor:
        x = Tensor(grids.reshape(grids.shape[0], -1))
        x = self.grid2(gelu(self.grid1(x)))
        for lin in self.rounds:
            x = x + lin(neighbor_means(x, edges))
        return x

    def encode(self, face_grids: np.ndarray, edge_index: np.ndarray) -> Tensor:
        grids, edges = self._check(face_grids, edge_index)
        x = self._face_features(grids, edges)
        e_shape = self.shape_proj(x.mean(axis=0, keepdims=True))
        n = x.shape[0]
        ones = Tensor(np.ones((n, 1)))
        return concat([x, ones @ e_shape], axis=1)

    def params(self):
        out = collect(grid1=self.grid1, grid2=self.grid2, shape=self.shape_proj)
        for i, lin in enumerate(self.rounds):
            for k, v in lin.params().items():
                out[f"round.{i}.{k}"] = v
        return out


def encode_brep(encoder: BrepEncoder, tensors: dict) -> Tensor:
    """Encode a brepgraph tensor dict (face_grids + edge_index) to z_brep."""
    return encoder.encode(tensors["face_grids"], tensors["edge_index"])


def encode_brep_batch(encoder: BrepEncoder, tensors_list):
    """(stacked z_brep (sum N_i, d_brep), per-item face counts).

    The items are fused into one block-diagonal graph: message passing
    cannot leak between them, and the shape feature pools per segment, so
    each row equals its encode_brep value up to float reassociation.
    """
    grids_list, edge_parts, sizes = [], [], []
    offset = 0
    for tensors in tensors_list:
        grids, edges = encoder._check(tensors["face_grids"],
                                      tensors["edge_index"])
        grids_list.append(grids)
        edge_parts.append(edges + offset)
        sizes.append(grids.shape[0])
        offset += grids.shape[0]
    if not sizes:
        raise ShapeMismatchError("need at least one graph")
    grids = np.concatenate(grids_list, axis=0)
    edges = np.concatenate(edge_parts, axis=0)
    x = encoder._face_features(grids, edges)
    seg = np.zeros((len(sizes), offset), dtype=np.float64)
    start = 0
    for i, n in enumerate(sizes):
        seg[i, start:start + n] = 1.0 / n
        start += n
    e_shape = encoder.shape_proj(Tensor(seg) @ x)       # (B, d_node)
    bcast = (seg > 0).astype(np.float64).T              # (sum N_i, B)
    return concat([x, Tensor(bcast) @ e_shape], axis=1), sizes
