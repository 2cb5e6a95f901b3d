"""Neural building blocks on the autodiff tape.

Modules are tiny classes exposing an ordered name -> Tensor parameter dict;
names are stable, so checkpoints, the optimizer, and freezing sets all key
off them.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import ShapeMismatchError, Tensor, concat, gelu, layer_norm, softmax

NEG_INF = -1e9


def _init(rng, *shape, scale: float = 0.02) -> Tensor:
    return Tensor(rng.normal(0.0, scale, shape), requires_grad=True)


class Module:
    def params(self) -> dict[str, Tensor]:
        raise NotImplementedError


def collect(**named: Module | Tensor) -> dict[str, Tensor]:
    """Flatten modules/tensors into one prefixed parameter dict."""
    out: dict[str, Tensor] = {}
    for prefix, item in named.items():
        if isinstance(item, Tensor):
            out[prefix] = item
        else:
            for k, v in item.params().items():
                out[f"{prefix}.{k}"] = v
    return out


class Linear(Module):
    def __init__(self, rng, d_in: int, d_out: int):
        self.w = _init(rng, d_in, d_out)
        self.b = Tensor(np.zeros(d_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.w.shape[0]:
            raise ShapeMismatchError(
                f"linear expects width {self.w.shape[0]}, got {x.shape[-1]}")
        return x @ self.w + self.b

    def params(self):
        return {"w": self.w, "b": self.b}


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-5):
        self.gamma = Tensor(np.ones(d), requires_grad=True)
        self.beta = Tensor(np.zeros(d), requires_grad=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}


class MultiHeadAttention(Module):
    """Standard multi-head attention with output projection.

    Queries (n_q, d) against keys/values (n_k, d); an optional additive mask
    broadcastable to (heads, n_q, n_k) carries NEG_INF at blocked positions.
    """

    def __init__(self, rng, d: int, heads: int):
        if d % heads != 0:
            raise ShapeMismatchError(f"width {d} not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.d_head = d // heads
        self.wq = Linear(rng, d, d)
        self.wk = Linear(rng, d, d)
        self.wv = Linear(rng, d, d)
        self.wo = Linear(rng, d, d)

    def _split(self, x: Tensor) -> Tensor:
        # (..., n, d) -> (..., heads, n, d_head)
        shape = x.shape[:-1] + (self.heads, self.d_head)
        nd = len(shape)
        perm = tuple(range(nd - 3)) + (nd - 2, nd - 3, nd - 1)
        return x.reshape(shape).transpose(perm)

    def __call__(self, q: Tensor, k: Tensor, v: Tensor,
                 mask: np.ndarray | None = None) -> Tensor:
        if q.shape[-1] != self.d or k.shape[-1] != self.d or v.shape[-1] != self.d:
            raise ShapeMismatchError(
                f"attention width mismatch: {q.shape}, {k.shape}, {v.shape}")
        if k.shape[-2] != v.shape[-2]:
            raise ShapeMismatchError("keys and values disagree on length")
        qh = self._split(self.wq(q))
        kh = self._split(self.wk(k))
        vh = self._split(self.wv(v))
        scores = (qh @ kh.swap_last()) * (1.0 / math.sqrt(self.d_head))
        if mask is not None:
            scores = scores + Tensor(mask)
        attn = softmax(scores, axis=-1)
        pooled = attn @ vh                   # (..., heads, n_q, d_head)
        nd = pooled.ndim
        perm = tuple(range(nd - 3)) + (nd - 2, nd - 3, nd - 1)
        # output leading dims come from pooled, not q: queries may broadcast
        # against batched keys
        merged = pooled.transpose(perm).reshape(
            pooled.shape[:-3] + (pooled.shape[-2], self.d))
        return self.wo(merged)

    def params(self):
        return collect(wq=self.wq, wk=self.wk, wv=self.wv, wo=self.wo)


class FeedForward(Module):
    def __init__(self, rng, d: int, hidden: int | None = None):
        hidden = hidden or 4 * d
        self.fc1 = Linear(rng, d, hidden)
        self.fc2 = Linear(rng, hidden, d)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))

    def params(self):
        return collect(fc1=self.fc1, fc2=self.fc2)


class SelfAttnBlock(Module):
    """Pre-LN transformer block: x + attn(LN x), then x + ff(LN x)."""

    def __init__(self, rng, d: int, heads: int):
        self.ln1 = LayerNorm(d)
        self.attn = MultiHeadAttention(rng, d, heads)
        self.ln2 = LayerNorm(d)
        self.ff = FeedForward(rng, d)

    def __call__(self, x: Tensor, mask: np.ndarray | None = None) -> Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h, h, mask)
        return x + self.ff(self.ln2(x))

    def params(self):
        return collect(ln1=self.ln1, attn=self.attn, ln2=self.ln2, ff=self.ff)


class CrossAttnBlock(Module):
    """Decoder block: causal self-attention, cross-attention, feed-forward."""

    def __init__(self, rng, d: int, heads: int):
        self.ln1 = LayerNorm(d)
        self.self_attn = MultiHeadAttention(rng, d, heads)
        self.ln2 = LayerNorm(d)
        self.cross_attn = MultiHeadAttention(rng, d, heads)
        self.ln3 = LayerNorm(d)
        self.ff = FeedForward(rng, d)

    def __call__(self, x: Tensor, memory: Tensor,
                 self_mask: np.ndarray | None = None) -> Tensor:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, h, self_mask)
        x = x + self.cross_attn(self.ln2(x), memory, memory)
        return x + self.ff(self.ln3(x))

    def params(self):
        return collect(ln1=self.ln1, self_attn=self.self_attn, ln2=self.ln2,
                       cross_attn=self.cross_attn, ln3=self.ln3, ff=self.ff)


def causal_mask(n: int) -> np.ndarray:
    """(n, n) additive mask blocking attention to later positions."""
    return np.triu(np.full((n, n), NEG_INF), k=1)


def stack_params(blocks, prefix: str) -> dict[str, Tensor]:
    out = {}
    for i, blk in enumerate(blocks):
        for k, v in blk.params().items():
            out[f"{prefix}.{i}.{k}"] = v
    return out
