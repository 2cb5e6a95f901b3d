"""Alignment model and the toy decoder used for the staged curriculum."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .encoder import BrepEncoder
from .nn import (
    NEG_INF,
    CrossAttnBlock,
    Linear,
    LayerNorm,
    MultiHeadAttention,
    SelfAttnBlock,
    causal_mask,
    collect,
    stack_params,
)
from .tensor import ShapeMismatchError, Tensor, concat, gelu
from .tokenizer import Tokenizer

N_LAYERS = 3


@dataclass(frozen=True)
class AlignConfig:
    """Toy-scale widths; paper-scale values are exercised in shape tests only."""

    n_query_gen: int = 16
    n_query_con: int = 1
    d_align: int = 64
    d_node: int = 32
    d_llm: int = 64
    heads: int = 4
    temperature: float = 0.07
    lambda_con: float = 1.0
    lambda_cap: float = 2.0
    vocab_size: int = Tokenizer().vocab_size
    max_len: int = 512
    resolution: int = 10

    def __post_init__(self):
        if self.d_align % self.heads:
            raise ValueError("d_align must be divisible by heads")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.lambda_con < 0 or self.lambda_cap < 0:
            raise ValueError("loss weights must be nonnegative")

    @property
    def d_brep(self) -> int:
        return 2 * self.d_node

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(data: dict) -> "AlignConfig":
        return AlignConfig(**data)


def _embed_positions(x: Tensor, pos_emb: Tensor) -> Tensor:
    n = x.shape[-2]
    if n > pos_emb.shape[0]:
        raise ShapeMismatchError(
            f"sequence length {n} exceeds max_len {pos_emb.shape[0]}")
    return x + pos_emb[:n]


def _pad_rows(rows: list[list[int]], pad_id: int) -> np.ndarray:
    n = max(len(r) for r in rows)
    out = np.full((len(rows), n), pad_id, dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


class AlignModel:
    """Encoder, cascaded attentional poolers, and the two text decoders."""

    def __init__(self, config: AlignConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        self.encoder = BrepEncoder(rng, c.resolution, c.d_node)
        self.to_align = Linear(rng, c.d_brep, c.d_align)
        self.q_gen = Tensor(rng.normal(0, 0.02, (c.n_query_gen, c.d_align)),
                            requires_grad=True)
        self.q_con = Tensor(rng.normal(0, 0.02, (c.n_query_con, c.d_align)),
                            requires_grad=True)
        self.pool_gen = MultiHeadAttention(rng, c.d_align, c.heads)
        self.pool_con = MultiHeadAttention(rng, c.d_align, c.heads)
        # normalizing the pooled rows keeps both contrastive sides at unit
        # scale; without it the cascaded poolers shrink features to ~1e-7 at
        # init and the similarity matrix degenerates
        self.pool_gen_ln = LayerNorm(c.d_align)
        self.pool_con_ln = LayerNorm(c.d_align)
        self.tok_emb = Tensor(rng.normal(0, 0.02, (c.vocab_size, c.d_align)),
                              requires_grad=True)
        self.pos_emb = Tensor(rng.normal(0, 0.02, (c.max_len, c.d_align)),
                              requires_grad=True)
        self.unimodal = [SelfAttnBlock(rng, c.d_align, c.heads)
                         for _ in range(N_LAYERS)]
        self.uni_ln = LayerNorm(c.d_align)
        self.multimodal = [CrossAttnBlock(rng, c.d_align, c.heads)
                           for _ in range(N_LAYERS)]
        self.multi_ln = LayerNorm(c.d_align)
        self.head = Linear(rng, c.d_align, c.vocab_size)
        self._tok = Tokenizer()

    def params(self) -> dict[str, Tensor]:
        out = collect(encoder=self.encoder, to_align=self.to_align,
                      q_gen=self.q_gen, q_con=self.q_con,
                      pool_gen=self.pool_gen, pool_con=self.pool_con,
                      pool_gen_ln=self.pool_gen_ln, pool_con_ln=self.pool_con_ln,
                      tok_emb=self.tok_emb, pos_emb=self.pos_emb,
                      uni_ln=self.uni_ln, multi_ln=self.multi_ln,
                      head=self.head)
        out.update(stack_params(self.unimodal, "unimodal"))
        out.update(stack_params(self.multimodal, "multimodal"))
        return out

    # --- brep side -------------------------------------------------------

    def pooled_features_batch(self, tensors_list):
        """(z_gen (B, n_query_gen, d), z_con (B, d)) for a list of graphs.

        Rows of different sizes share one fused encoder pass; the padded
        key positions are masked out of the pooling attention, so each
        item's features match its single-graph values.
        """
        from .encoder import encode_brep_batch
        z_all, sizes = encode_brep_batch(self.encoder, tensors_list)
        z = self.to_align(z_all)
        b, nmax, total = len(sizes), max(sizes), sum(sizes)
        scatter = np.zeros((b * nmax, total), dtype=np.float64)
        key_mask = np.full((b, 1, 1, nmax), NEG_INF, dtype=np.float64)
        start = 0
        for i, n in enumerate(sizes):
            scatter[i * nmax: i * nmax + n, start: start + n] = np.eye(n)
            key_mask[i, :, :, :n] = 0.0
            start += n
        zp = (Tensor(scatter) @ z).reshape(b, nmax, self.config.d_align)
        ones = Tensor(np.ones((b, 1, 1)))
        q_gen = ones * self.q_gen.reshape(1, *self.q_gen.shape)
        z_gen = self.pool_gen_ln(self.pool_gen(q_gen, zp, zp, mask=key_mask))
        q_con = ones * self.q_con.reshape(1, *self.q_con.shape)
        z_con = self.pool_con_ln(self.pool_con(q_con, z_gen, z_gen))
        return z_gen, z_con.reshape(b, self.config.d_align)

    def pooled_features(self, graph_tensors: dict):
        """(z_gen (n_query_gen, d), z_con (1, d)) for one shape."""
        z_gen, z_con = self.pooled_features_batch([graph_tensors])
        return (z_gen.reshape(z_gen.shape[1], z_gen.shape[2]),
                z_con.reshape(1, self.config.d_align))

    # --- text side -------------------------------------------------------

    def _embed(self, ids: np.ndarray) -> Tensor:
        from .tensor import embedding
        return _embed_positions(embedding(self.tok_emb, ids), self.pos_emb)

    def unimodal_eos_batch(self, ids_list) -> Tensor:
        """(B, d_align) features at each row's EOS position.

        Rows are right-padded; with causal masking real positions never see
        the padding, so batching cannot change any row's feature.
        """
        streams = [list(ids) + [self._tok.eos_id] for ids in ids_list]
        padded = _pad_rows(streams, self._tok.pad_id)
        x = self._embed(padded)
        mask = causal_mask(padded.shape[1])
        for blk in self.unimodal:
            x = blk(x, mask)
        x = self.uni_ln(x)
        rows = np.arange(len(streams))
        eos_pos = np.array([len(s) - 1 for s in streams])
        return x[(rows, eos_pos)]

    def unimodal_eos(self, ids: list[int]) -> Tensor:
        """(1, d_align) feature at the EOS position of ids + [EOS]."""
        return self.unimodal_eos_batch([ids])

    def caption_logits_batch(self, z_gen_batch: Tensor, ids_list):
        """Teacher-forced logits over a padded batch.

        Returns (logits (B, L, vocab), targets (B, L), weights (B, L));
        weights zero out the padding positions.
        """
        inputs = [[self._tok.bos_id] + list(ids) for ids in ids_list]
        target_rows = [list(ids) + [self._tok.eos_id] for ids in ids_list]
        padded = _pad_rows(inputs, self._tok.pad_id)
        targets = _pad_rows(target_rows, 0)
        weights = np.zeros(targets.shape, dtype=np.float64)
        for i, row in enumerate(target_rows):
            weights[i, :len(row)] = 1.0
        x = self._embed(padded)
        mask = causal_mask(padded.shape[1])
        for blk in self.multimodal:
            x = blk(x, z_gen_batch, mask)
        logits = self.head(self.multi_ln(x))
        return logits, targets, weights

    def caption_logits(self, z_gen: Tensor, ids: list[int]):
        """Teacher-forced logits predicting ids + [EOS] from [BOS] + ids."""
        logits, targets, _ = self.caption_logits_batch(
            z_gen.reshape(1, *z_gen.shape), [ids])
        n = targets.shape[1]
        return logits.reshape(n, self.config.vocab_size), targets[0]


class Projector:
    """Three linear layers with a GELU after the first."""

    def __init__(self, rng, d_in: int, d_out: int):
        self.fc1 = Linear(rng, d_in, d_out)
        self.fc2 = Linear(rng, d_out, d_out)
        self.fc3 = Linear(rng, d_out, d_out)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc3(self.fc2(gelu(self.fc1(x))))

    def params(self):
        return collect(fc1=self.fc1, fc2=self.fc2, fc3=self.fc3)


class StageModel:
    """Frozen encoder + projector + small causal decoder standing in for the
    LLM. The same class serves stage 1 (reverse task) and stage 2 (records
    with an input_code section)."""

    def __init__(self, config: AlignConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        self.encoder = BrepEncoder(rng, c.resolution, c.d_node)
        self.projector = Projector(rng, c.d_brep, c.d_llm)
        self.tok_emb = Tensor(rng.normal(0, 0.02, (c.vocab_size, c.d_llm)),
                              requires_grad=True)
        self.pos_emb = Tensor(rng.normal(0, 0.02, (c.max_len, c.d_llm)),
                              requires_grad=True)
        self.blocks = [SelfAttnBlock(rng, c.d_llm, c.heads)
                       for _ in range(N_LAYERS)]
        self.ln_f = LayerNorm(c.d_llm)
        self.head = Linear(rng, c.d_llm, c.vocab_size)
        self.tokenizer = Tokenizer()

    def params(self) -> dict[str, Tensor]:
        out = collect(encoder=self.encoder, projector=self.projector,
                      tok_emb=self.tok_emb, pos_emb=self.pos_emb,
                      ln_f=self.ln_f, head=self.head)
        out.update(stack_params(self.blocks, "decoder"))
        return out

    def project(self, z_brep: Tensor) -> Tensor:
        return self.projector(z_brep)

    def prompt_ids(self, task: str, input_ids=None) -> list[int]:
        tok = self.tokenizer
        ids = [tok.task_ids[task], tok.bos_id]
        if input_ids is not None:
            ids = [tok.task_ids[task]] + list(input_ids) + [tok.sep_id, tok.bos_id]
        return ids

    def forward_packed(self, z_brep: np.ndarray, token_ids: list[int]) -> Tensor:
        """Logits (L, vocab) over [projected features ; token embeddings]."""
        from .tensor import embedding
        z_proj = self.project(Tensor(z_brep))
        toks = embedding(self.tok_emb, token_ids)
        x = _embed_positions(concat([z_proj, toks], axis=0), self.pos_emb)
        mask = causal_mask(x.shape[0])
        for blk in self.blocks:
            x = blk(x, mask)
        return self.head(self.ln_f(x))

    def sequence_for(self, task: str, target_ids, input_ids=None):
        """(token stream, full-length targets, loss mask) for one record.

        The mask selects positions whose next token is part of the target
        section (target ids followed by EOS); everything earlier — features,
        task token, input code, separators — is context only.
        """
        prompt = self.prompt_ids(task, input_ids)
        target = list(target_ids) + [self.tokenizer.eos_id]
        return prompt + target, target, len(prompt)

    def loss_for(self, z_brep: np.ndarray, task: str, target_ids,
                 input_ids=None):
        from .losses import stage1_loss
        stream, target, n_prompt = self.sequence_for(task, target_ids, input_ids)
        logits = self.forward_packed(z_brep, stream)
        n_feat = z_brep.shape[0]
        total = logits.shape[0]
        targets_full = np.zeros(total, dtype=np.int64)
        mask = np.zeros(total, dtype=np.float64)
        # logits at position p predict stream token at p - n_feat + 1
        start = n_feat + n_prompt - 1
        for k, t in enumerate(target):
            targets_full[start + k] = t
            mask[start + k] = 1.0
        return stage1_loss(logits, targets_full, mask), len(target)

    # --- batched training paths -----------------------------------------

    def batch_logits(self, z_list, streams) -> Tensor:
        """(B, L, vocab) logits over per-row [features ; tokens ; padding].

        Rows are right-padded with PAD token embeddings; the causal mask
        keeps every real position blind to them, so row i's logits at real
        positions equal forward_packed on that row alone.
        """
        from .tensor import embedding
        pad = self.tokenizer.pad_id
        d = self.config.d_llm
        sizes = [z.shape[0] for z in z_list]
        maxlen = max(n + len(s) for n, s in zip(sizes, streams))
        b, total = len(z_list), sum(sizes)
        ids = np.full((b, maxlen), pad, dtype=np.int64)
        keep = np.ones((b, maxlen, 1), dtype=np.float64)
        scatter = np.zeros((b * maxlen, total), dtype=np.float64)
        start = 0
        for i, (n, s) in enumerate(zip(sizes, streams)):
            ids[i, n:n + len(s)] = s
            keep[i, :n, 0] = 0.0        # feature slots: drop the pad embedding
            scatter[i * maxlen: i * maxlen + n, start:start + n] = np.eye(n)
            start += n
        z_proj = self.project(Tensor(np.concatenate(z_list, axis=0)))
        feats = (Tensor(scatter) @ z_proj).reshape(b, maxlen, d)
        x = embedding(self.tok_emb, ids) * Tensor(keep) + feats
        x = _embed_positions(x, self.pos_emb)
        mask = causal_mask(maxlen)
        for blk in self.blocks:
            x = blk(x, mask)
        return self.head(self.ln_f(x))

    def _batch_layout(self, z_list, records):
        """(streams, starts, targets) shared by the batch loss and matcher."""
        streams, starts, targets = [], [], []
        for z, (task, input_ids, target_ids) in zip(z_list, records):
            stream, target, n_prompt = self.sequence_for(task, target_ids,
                                                         input_ids)
            streams.append(stream)
            starts.append(z.shape[0] + n_prompt - 1)
            targets.append(target)
        return streams, starts, targets

    def batch_loss(self, z_list, records):
        """(mean over records of summed target CE, total target tokens).

        records are (task, input_ids, target_ids) triples paired with the
        precomputed feature arrays in z_list.
        """
        from .losses import captioning_loss_padded
        streams, starts, targets = self._batch_layout(z_list, records)
        logits = self.batch_logits(z_list, streams)
        b, total = logits.shape[0], logits.shape[1]
        targets_full = np.zeros((b, total), dtype=np.int64)
        mask = np.zeros((b, total), dtype=np.float64)
        n_tokens = 0
        for i, (start, target) in enumerate(zip(starts, targets)):
            targets_full[i, start:start + len(target)] = target
            mask[i, start:start + len(target)] = 1.0
            n_tokens += len(target)
        return captioning_loss_padded(logits, targets_full, mask), n_tokens

    def batch_match_count(self, z_list, records) -> int:
        """How many records regenerate exactly under teacher forcing."""
        streams, starts, targets = self._batch_layout(z_list, records)
        logits = self.batch_logits(z_list, streams).data
        hits = 0
        for i, (start, target) in enumerate(zip(starts, targets)):
            pred = np.argmax(logits[i, start:start + len(target)], axis=-1)
            hits += int(np.array_equal(pred, np.asarray(target)))
        return hits

    def teacher_forced_match(self, z_brep: np.ndarray, task: str, target_ids,
                             input_ids=None) -> bool:
        """True iff argmax at every target position reproduces the target.

        Equivalent to greedy regeneration matching exactly, since matching
        prefixes give identical conditioning position by position.
        """
        stream, target, n_prompt = self.sequence_for(task, target_ids, input_ids)
        logits = self.forward_packed(z_brep, stream)
        start = z_brep.shape[0] + n_prompt - 1
        pred = np.argmax(logits.data[start:start + len(target)], axis=-1)
        return bool(np.array_equal(pred, np.asarray(target)))

    def greedy_decode(self, z_brep: np.ndarray, task: str, input_ids=None,
                      max_new: int = 400) -> list[int]:
        tok = self.tokenizer
        stream = self.prompt_ids(task, input_ids)
        out: list[int] = []
        limit = self.config.max_len - z_brep.shape[0]
        for _ in range(max_new):
            if len(stream) >= limit:
                break
            logits = self.forward_packed(z_brep, stream)
            nxt = int(np.argmax(logits.data[-1]))
            if nxt == tok.eos_id:
                break
            out.append(nxt)
            stream.append(nxt)
        return out
