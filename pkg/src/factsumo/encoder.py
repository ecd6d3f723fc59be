"""Hierarchical GRU encoding of evidence documents.

Words of each sentence run through a (bi)directional GRU; attention-pooled
sentence vectors then run through a bidirectional sentence-level GRU. Padded
steps carry the previous state forward and emit zeros, so trailing padding
never changes any real position's state.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tensor as T
from .corpus import PAD_ID


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class GruCell:
    """Cho-style GRU cell.

    Weight blocks are stored fused in gate order ``[update | reset | candidate]``:
    ``W`` is ``I x 3H``, ``U_zr`` is ``H x 2H`` for the two gates and ``U_h`` is
    ``H x H`` for the candidate, ``b`` is ``3H``.
    """

    def __init__(self, input_size, hidden_size, rng=None, name="gru"):
        rng = rng if rng is not None else np.random.default_rng(0)
        H = hidden_size
        self.input_size = input_size
        self.hidden_size = H
        self.name = name
        W = np.concatenate([glorot(rng, input_size, H) for _ in range(3)], axis=1)
        U = np.concatenate([glorot(rng, H, H) for _ in range(3)], axis=1)
        self.W = T.parameter(W, f"{name}.W")
        self.U_zr = T.parameter(U[:, : 2 * H], f"{name}.U_zr")
        self.U_h = T.parameter(U[:, 2 * H:], f"{name}.U_h")
        self.b = T.parameter(np.zeros(3 * H), f"{name}.b")

    def parameters(self):
        return [self.W, self.U_zr, self.U_h, self.b]


def _update(cell, xproj, h):
    H = cell.hidden_size
    zr = T.sigmoid(xproj[:, : 2 * H] + h @ cell.U_zr)
    z = zr[:, :H]
    r = zr[:, H:]
    cand = T.tanh(xproj[:, 2 * H:] + (r * h) @ cell.U_h)
    return h + z * (cand - h)


def gru_step(cell, x, h_prev):
    """One GRU step for a single vector (or a batch of row vectors)."""
    x, h_prev = T.as_tensor(x), T.as_tensor(h_prev)
    single = x.ndim == 1
    if single:
        x, h_prev = x.reshape(1, -1), h_prev.reshape(1, -1)
    if x.shape[-1] != cell.input_size or h_prev.shape[-1] != cell.hidden_size:
        raise T.DimensionError(
            f"gru_step expects input {cell.input_size} / hidden {cell.hidden_size}, "
            f"got {x.shape[-1]} / {h_prev.shape[-1]}")
    h = _update(cell, x @ cell.W + cell.b, h_prev)
    return h.reshape(-1) if single else h


def run_gru(cell, inputs, mask, reverse=False):
    """Run ``cell`` over ``inputs`` (B x steps x I) under a 0/1 ``mask`` (B x steps).

    Returns the stacked outputs (B x steps x H), zero on masked steps.
    """
    inputs = T.as_tensor(inputs)
    mask = np.asarray(mask, dtype=np.float64)
    batch, steps, width = inputs.shape
    if width != cell.input_size:
        raise T.DimensionError(f"GRU input width {width} != {cell.input_size}")
    proj = inputs @ cell.W + cell.b
    h = T.Tensor(np.zeros((batch, cell.hidden_size)))
    zeros = T.Tensor(np.zeros((batch, cell.hidden_size)))
    outputs = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        m = mask[:, t: t + 1]
        if not m.any():
            outputs[t] = zeros
            continue
        h_new = _update(cell, proj[:, t, :], h)
        if m.all():
            h = h_new
            outputs[t] = h
        else:
            h = h + m * (h_new - h)
            outputs[t] = h * m
    return T.stack(outputs, axis=1)


class BiGru:
    def __init__(self, input_size, hidden_size, rng, name, bidirectional=True):
        self.forward = GruCell(input_size, hidden_size, rng, f"{name}.fw")
        self.backward = GruCell(input_size, hidden_size, rng, f"{name}.bw") if bidirectional else None

    @property
    def output_size(self):
        h = self.forward.hidden_size
        return 2 * h if self.backward is not None else h

    def parameters(self):
        params = self.forward.parameters()
        if self.backward is not None:
            params += self.backward.parameters()
        return params

    def __call__(self, inputs, mask):
        fw = run_gru(self.forward, inputs, mask)
        if self.backward is None:
            return fw
        bw = run_gru(self.backward, inputs, mask, reverse=True)
        return T.concat([fw, bw], axis=-1)


def encode_sentence(cells, ids, mask, embeddings):
    """Word-level hidden states (l x H_w) for one indexed, padded sentence."""
    ids = np.asarray(ids).reshape(1, -1)
    mask = np.asarray(mask, dtype=np.float64).reshape(1, -1)
    emb = T.embedding(embeddings, ids, padding_idx=PAD_ID)
    return cells(emb, mask)[0]


@dataclass
class EncodedDocument:
    word_hidden: T.Tensor        # (..., k, l, H_w)
    sentence_hidden: T.Tensor    # (..., k, 2H)
    word_mask: np.ndarray        # (..., k, l)
    sentence_mask: np.ndarray    # (..., k)
    word_weights: Optional[T.Tensor] = None
    sentence_vectors: Optional[T.Tensor] = None
    word_extras: Optional[dict] = None


def encode_document(ids, mask, embeddings, word_cells, sentence_cells, word_attention):
    """Encode one (k x l) grid or a batch of grids (D x k x l).

    ``word_attention(word_hidden, word_mask, word_embeddings)`` receives the
    flattened sentences (D*k rows) and returns ``(weights, extras)`` where
    ``weights`` pools each sentence into its vector.
    """
    ids = np.asarray(ids)
    mask = np.asarray(mask, dtype=np.float64)
    single = ids.ndim == 2
    if single:
        ids, mask = ids[None], mask[None]
    D, k, l = ids.shape
    flat_ids = ids.reshape(D * k, l)
    flat_mask = mask.reshape(D * k, l)
    word_emb = T.embedding(embeddings, flat_ids, padding_idx=PAD_ID)
    word_hidden = word_cells(word_emb, flat_mask)
    weights, extras = word_attention(word_hidden, flat_mask, word_emb)
    pooled = T.tsum(word_hidden * weights.reshape(D * k, l, 1), axis=1)
    sentence_vectors = pooled.reshape(D, k, -1)
    sentence_mask = (mask.sum(axis=-1) > 0).astype(np.float64)
    sentence_hidden = sentence_cells(sentence_vectors, sentence_mask)
    enc = EncodedDocument(
        word_hidden=word_hidden.reshape(D, k, l, -1),
        sentence_hidden=sentence_hidden,
        word_mask=mask,
        sentence_mask=sentence_mask,
        word_weights=weights.reshape(D, k, l),
        sentence_vectors=sentence_vectors,
        word_extras=extras,
    )
    if single:
        enc.word_hidden = enc.word_hidden[0]
        enc.sentence_hidden = enc.sentence_hidden[0]
        enc.word_mask = mask[0]
        enc.sentence_mask = sentence_mask[0]
        enc.word_weights = enc.word_weights[0]
        enc.sentence_vectors = sentence_vectors[0]
    return enc
