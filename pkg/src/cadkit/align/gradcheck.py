"""Central finite-difference gradient verification.

grad_check runs one scalar-valued function against numeric derivatives for
every (sampled) parameter element; check_suite bundles the standard cases
used by tests and `cadkit align check`.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

H = 1e-4
MAX_ELEMENTS = 32   # per-tensor cap on numerically probed elements


def grad_check(fn, params: dict[str, Tensor], h: float = H,
               seed: int = 0, max_elements: int = MAX_ELEMENTS) -> float:
    """Max relative error between analytic and central-difference gradients.

    fn() recomputes the scalar loss from the current parameter values; it is
    called fresh for every probe so the tape never carries stale state.
    """
    for p in params.values():
        p.grad = None
    loss = fn()
    loss.backward()
    analytic = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for k, p in params.items()}

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= max_elements:
            picks = np.arange(n)
        else:
            picks = rng.choice(n, size=max_elements, replace=False)
        ga = analytic[name].reshape(-1)
        for i in picks:
            keep = flat[i]
            flat[i] = keep + h
            up = float(fn().data)
            flat[i] = keep - h
            dn = float(fn().data)
            flat[i] = keep
            numeric = (up - dn) / (2.0 * h)
            err = abs(ga[i] - numeric) / max(abs(ga[i]) + abs(numeric), 1e-6)
            worst = max(worst, err)
    return worst


def rescale_params(params: dict[str, Tensor], seed: int, scale: float = 0.3):
    """Redraw parameters at O(scale) so finite differences are well
    conditioned (tiny-init attention outputs otherwise sit in regions where
    normalization curvature swamps h^2 accuracy). LayerNorm gains stay 1."""
    rng = np.random.default_rng(seed)
    for name, p in params.items():
        if name.endswith("gamma"):
            continue
        p.data[...] = rng.normal(0, scale, p.data.shape)


def check_suite(verbose: bool = False) -> list[tuple[str, float]]:
    """20 gradient-check cases across primitives, blocks, and losses."""
    from .encoder import BrepEncoder
    from .losses import (captioning_loss, contrastive_loss, stage1_loss)
    from .model import AlignConfig, AlignModel, Projector, StageModel
    from .nn import (CrossAttnBlock, FeedForward, LayerNorm, Linear,
                     MultiHeadAttention, SelfAttnBlock, causal_mask, collect)
    from .tensor import concat, embedding, gelu, log_softmax, softmax

    rng = np.random.default_rng(11)

    def P(*shape, s=1.0):
        return Tensor(rng.normal(0, s, shape), requires_grad=True)

    results: list[tuple[str, float]] = []

    def run(name, fn, params, max_elements=MAX_ELEMENTS, seed=0):
        err = grad_check(fn, params, seed=seed, max_elements=max_elements)
        results.append((name, err))
        if verbose:
            print(f"  {name:34s} {err:.3e}")

    a, b = P(3, 4), P(4, 5)
    run("matmul-mean", lambda: ((a @ b) ** 2).mean(), {"a": a, "b": b})

    c, d = P(2, 3, 4), P(4)
    run("broadcast-arith",
        lambda: ((c + d) * d / (d ** 2 + 3.0)).sum(), {"c": c, "d": d})

    e = P(3, 5)
    run("softmax", lambda: (softmax(e, -1)[1] ** 2).sum(), {"e": e})

    f = P(4, 6)
    picks = (np.arange(4), np.array([1, 3, 0, 5]))
    run("log-softmax-gather", lambda: -log_softmax(f, -1)[picks].sum(), {"f": f})

    g = P(3, 4)
    run("gelu-tanh-exp-log",
        lambda: (gelu(g).tanh().exp() + (g ** 2 + 1.0).log()).sum(), {"g": g})

    h1, h2 = P(2, 3), P(2, 3)
    run("concat-transpose-reshape",
        lambda: (concat([h1, h2], 1).transpose(1, 0).reshape(2, 6) ** 3).mean(),
        {"h1": h1, "h2": h2})

    tbl = P(7, 4)
    ids = np.array([1, 3, 3, 0])
    run("embedding-scatter", lambda: (embedding(tbl, ids) ** 2).sum(),
        {"tbl": tbl})

    m1, m2 = P(2, 2, 3, 4), P(2, 2, 4, 2)
    run("batched-matmul", lambda: ((m1 @ m2) ** 2).sum(), {"m1": m1, "m2": m2})

    sl = P(6, 4)
    run("slice-overlap", lambda: (sl[2:5] * sl[1:4]).sum(), {"sl": sl})

    ln = LayerNorm(5)
    x1 = P(3, 5)
    run("layernorm", lambda: (ln(x1) ** 3).mean(),
        collect(ln=ln) | {"x": x1})

    ff = FeedForward(np.random.default_rng(1), 6, 8)
    x2 = P(3, 6, s=0.5)
    pf = collect(ff=ff) | {"x": x2}
    rescale_params(collect(ff=ff), seed=2)
    run("feedforward", lambda: (ff(x2) ** 2).sum(), pf)

    mha = MultiHeadAttention(np.random.default_rng(2), 8, 2)
    rescale_params(mha.params(), seed=3)
    q, kv = P(3, 8, s=0.5), P(5, 8, s=0.5)
    run("mha-self", lambda: (mha(q, q, q) ** 2).sum(),
        mha.params() | {"q": q})
    run("mha-cross", lambda: (mha(q, kv, kv) ** 2).sum(),
        mha.params() | {"q": q, "kv": kv})

    blk = SelfAttnBlock(np.random.default_rng(3), 8, 2)
    rescale_params(blk.params(), seed=4)
    x3 = P(4, 8, s=0.5)
    run("causal-self-block", lambda: (blk(x3, causal_mask(4)) ** 2).mean(),
        blk.params() | {"x": x3}, max_elements=8)

    cb = CrossAttnBlock(np.random.default_rng(4), 8, 2)
    rescale_params(cb.params(), seed=5)
    mem = P(5, 8, s=0.5)
    run("cross-block", lambda: (cb(x3, mem, causal_mask(4)) ** 2).mean(),
        cb.params() | {"x": x3, "mem": mem}, max_elements=8)

    enc = BrepEncoder(np.random.default_rng(5), 3, 6)
    rescale_params(enc.params(), seed=6, scale=0.15)
    grids = rng.normal(0, 1, (4, 3, 3, 7))
    edges = np.array([[0, 1], [1, 2], [2, 3]])
    run("encoder-message-passing",
        lambda: (enc.encode(grids, edges) ** 2).sum(), enc.params(),
        max_elements=8)

    za, zb_ = P(3, 6), P(3, 6)
    run("contrastive", lambda: contrastive_loss(za, zb_, 0.5),
        {"za": za, "zb": zb_})

    dec = [CrossAttnBlock(np.random.default_rng(6 + i), 8, 2) for i in range(2)]
    head = Linear(np.random.default_rng(8), 8, 9)
    dp = {}
    for i, blkk in enumerate(dec):
        dp.update({f"dec.{i}.{k}": v for k, v in blkk.params().items()})
    dp.update({f"head.{k}": v for k, v in head.params().items()})
    rescale_params(dp, seed=7)
    mem2 = P(4, 8, s=0.5)
    emb2 = P(5, 8, s=0.5)
    tgt = np.array([2, 7, 0, 4, 1])

    def two_layer_caption():
        x = emb2
        for blkk in dec:
            x = blkk(x, mem2, causal_mask(5))
        return captioning_loss([head(x)], [tgt])
    run("captioning-2layer-decoder", two_layer_caption,
        dp | {"mem": mem2, "emb": emb2}, max_elements=6)

    proj = Projector(np.random.default_rng(9), 6, 5)
    xin = P(3, 6)
    run("projector", lambda: (proj(xin) ** 2).sum(),
        proj.params() | {"x": xin})

    cfg = AlignConfig(d_align=8, d_node=4, d_llm=8, heads=2, n_query_gen=3,
                      resolution=3, max_len=48)
    sm = StageModel(cfg, seed=10)
    rescale_params(sm.params(), seed=8, scale=0.15)
    zb2 = rng.normal(0, 1, (3, 8))
    run("stage1-masked-ce",
        lambda: sm.loss_for(zb2, "reverse", [9, 12, 30])[0],
        sm.params(), max_elements=3, seed=4)

    return results
