"""Minimal reverse-mode autodiff over double-precision numpy arrays.

Every differentiable op records a backward closure on a tape node; backward()
walks the graph in reverse topological order. Ops return detached tensors
when no input requires grad, so inference builds no graph.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf as _erf

from ..errors import CadkitError


class ShapeMismatchError(CadkitError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to shape, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._backward = None
        self._parents = ()

    # --- plumbing ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            # copy: g may alias an upstream grad buffer
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar loss")
        topo: list[Tensor] = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # --- op construction ----------------------------------------------------

    @staticmethod
    def _wrap(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    @staticmethod
    def _make(data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(p for p in parents if p.requires_grad)
            out._backward = backward
        return out

    # --- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        a, b = self, Tensor._wrap(other)
        data = a.data + b.data

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.data.shape))
        return Tensor._make(data, (a, b), back)

    __radd__ = __add__

    def __mul__(self, other):
        a, b = self, Tensor._wrap(other)
        data = a.data * b.data

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.data.shape))
        return Tensor._make(data, (a, b), back)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-Tensor._wrap(other))

    def __rsub__(self, other):
        return Tensor._wrap(other) + (-self)

    def __truediv__(self, other):
        a, b = self, Tensor._wrap(other)
        data = a.data / b.data

        def back(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g / b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data),
                                           b.data.shape))
        return Tensor._make(data, (a, b), back)

    def __rtruediv__(self, other):
        return Tensor._wrap(other) / self

    def __pow__(self, exponent: float):
        if isinstance(exponent, Tensor):
            raise TypeError("tensor exponents not supported")
        a = self
        data = a.data ** exponent

        def back(g):
            a._accumulate(g * exponent * a.data ** (exponent - 1))
        return Tensor._make(data, (a,), back)

    def __matmul__(self, other):
        a, b = self, Tensor._wrap(other)
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeMismatchError("matmul needs >= 2-d operands")
        data = a.data @ b.data

        def back(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                a._accumulate(_unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ g
                b._accumulate(_unbroadcast(gb, b.data.shape))
        return Tensor._make(data, (a, b), back)

    # --- shape ops ------------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        data = a.data.reshape(shape)
        src = a.data.shape

        def back(g):
            a._accumulate(g.reshape(src))
        return Tensor._make(data, (a,), back)

    def transpose(self, *perm):
        if len(perm) == 1 and isinstance(perm[0], (tuple, list)):
            perm = tuple(perm[0])
        a = self
        data = a.data.transpose(perm)
        inv = tuple(np.argsort(perm))

        def back(g):
            a._accumulate(g.transpose(inv))
        return Tensor._make(data, (a,), back)

    def swap_last(self):
        perm = tuple(range(self.ndim - 2)) + (self.ndim - 1, self.ndim - 2)
        return self.transpose(perm)

    def __getitem__(self, idx):
        a = self
        data = a.data[idx]
        src = a.data.shape

        def back(g):
            full = np.zeros(src, dtype=np.float64)
            full[idx] = g
            a._accumulate(full)
        return Tensor._make(data, (a,), back)

    # --- reductions -------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self
        data = a.data.sum(axis=axis, keepdims=keepdims)

        def back(g):
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
                return
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axis)
            a._accumulate(np.broadcast_to(gg, a.data.shape).copy())
        return Tensor._make(data, (a,), back)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # --- elementwise functions -----------------------------------------------

    def exp(self):
        a = self
        data = np.exp(a.data)

        def back(g):
            a._accumulate(g * data)
        return Tensor._make(data, (a,), back)

    def log(self):
        a = self
        data = np.log(a.data)

        def back(g):
            a._accumulate(g / a.data)
        return Tensor._make(data, (a,), back)

    def tanh(self):
        a = self
        data = np.tanh(a.data)

        def back(g):
            a._accumulate(g * (1.0 - data * data))
        return Tensor._make(data, (a,), back)

    def erf(self):
        a = self
        data = _erf(a.data)

        def back(g):
            a._accumulate(g * (2.0 / math.sqrt(math.pi)) * np.exp(-a.data ** 2))
        return Tensor._make(data, (a,), back)


# --- free functions ------------------------------------------------------------

def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [Tensor._wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])
    return Tensor._make(data, tuple(tensors), back)


def embedding(table: Tensor, ids) -> Tensor:
    """Row gather table[ids]; scatter-add on the way back."""
    ids = np.asarray(ids, dtype=np.int64)
    data = table.data[ids]

    def back(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        table._accumulate(full)
    return Tensor._make(data, (table,), back)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        # ds_i = s_i (g_i - sum_j g_j s_j)
        x._accumulate(data * (g - (g * data).sum(axis=axis, keepdims=True)))
    return Tensor._make(data, (x,), back)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    data = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def back(g):
        x._accumulate(g - np.exp(data) * g.sum(axis=axis, keepdims=True))
    return Tensor._make(data, (x,), back)


def gelu(x: Tensor) -> Tensor:
    phi = 0.5 * (1.0 + _erf(x.data * (1.0 / math.sqrt(2.0))))
    data = x.data * phi

    def back(g):
        pdf = np.exp(-0.5 * x.data * x.data) * (1.0 / math.sqrt(2.0 * math.pi))
        x._accumulate(g * (phi + x.data * pdf))
    return Tensor._make(data, (x,), back)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor,
               eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    data = xhat * gamma.data + beta.data

    def back(g):
        if beta.requires_grad:
            beta._accumulate(_unbroadcast(g, beta.data.shape))
        if gamma.requires_grad:
            gamma._accumulate(_unbroadcast(g * xhat, gamma.data.shape))
        if x.requires_grad:
            gy = g * gamma.data
            x._accumulate(inv * (
                gy - gy.mean(axis=-1, keepdims=True)
                - xhat * (gy * xhat).mean(axis=-1, keepdims=True)))
    return Tensor._make(data, (x, gamma, beta), back)


def mean_rows(x: Tensor) -> Tensor:
    return x.mean(axis=0, keepdims=True)
