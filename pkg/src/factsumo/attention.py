"""Claim-, title- and self-attention with average and Atop fusion.

All weight functions accept position-major inputs with any leading batch
axes: ``hidden`` is ``(..., n, H)``, guide vectors are ``(..., E)`` and the
returned weights are ``(..., n)``. Masked positions get exactly zero weight.
"""

import numpy as np

from . import tensor as T
from .encoder import glorot

FUSION_MODES = ("average", "atop", "concat_baseline")


def _with_position_axis(guide):
    guide = T.as_tensor(guide)
    return guide.reshape(guide.shape[:-1] + (1, guide.shape[-1]))


def guided_scores(hidden, guide, W, b):
    hidden, W = T.as_tensor(hidden), T.as_tensor(W)
    if hidden.shape[-1] != W.shape[0]:
        raise T.DimensionError(f"attention W expects width {W.shape[0]}, hidden has {hidden.shape[-1]}")
    if T.as_tensor(guide).shape[-1] != W.shape[1]:
        raise T.DimensionError(f"guide width {T.as_tensor(guide).shape[-1]} != attention width {W.shape[1]}")
    u = T.tanh(hidden @ W + b)
    return T.tsum(u * _with_position_axis(guide), axis=-1)


def guided_attention(hidden, guide, W, b, mask=None):
    """softmax over positions of ``tanh(W h_p + b) . guide``."""
    return T.masked_softmax(guided_scores(hidden, guide, W, b), mask)


def self_attention(hidden, W, b, mask=None, context=None):
    """Guide-free attention; the score is the component sum of ``tanh(W h_p + b)``
    unless a learned ``context`` vector is supplied."""
    hidden, W = T.as_tensor(hidden), T.as_tensor(W)
    if hidden.shape[-1] != W.shape[0]:
        raise T.DimensionError(f"attention W expects width {W.shape[0]}, hidden has {hidden.shape[-1]}")
    u = T.tanh(hidden @ W + b)
    if context is None:
        scores = T.tsum(u, axis=-1)
    else:
        scores = T.tsum(u * context, axis=-1)
    return T.masked_softmax(scores, mask)


def concat_baseline_attention(claim, positions, W, b, mask=None):
    """Concatenate the claim vector onto every position and score with a
    single tanh unit, then softmax over positions."""
    claim, positions = T.as_tensor(claim), T.as_tensor(positions)
    W = T.as_tensor(W)
    if claim.shape[-1] + positions.shape[-1] != W.shape[0]:
        raise T.DimensionError(
            f"concat attention W expects {W.shape[0]} inputs, got {claim.shape[-1]} + {positions.shape[-1]}")
    spread = _with_position_axis(claim) + np.zeros(positions.shape[:-1] + (claim.shape[-1],))
    r = T.concat([spread, positions], axis=-1)
    a = T.tanh(r @ W + b)
    return T.masked_softmax(a.reshape(a.shape[:-1]), mask)


def _check_same(*alphas):
    shapes = {T.as_tensor(a).shape for a in alphas}
    if len(shapes) != 1:
        raise T.DimensionError(f"attention vectors differ in shape: {sorted(shapes)}")


def fuse_average(alpha_c, alpha_t, alpha_s):
    _check_same(alpha_c, alpha_t, alpha_s)
    return T.div(T.add(T.add(alpha_c, alpha_t), alpha_s), 3.0)


def fuse_atop(alpha_c, alpha_t, alpha_s, W, b):
    """Attention on top of attention.

    ``W`` is ``3N x 3`` for up to ``N`` positions, laid out as the row blocks
    of the concatenation ``alpha_c || alpha_t || alpha_s``. Inputs shorter than
    ``N`` use the leading rows of each block, which equals concatenating
    zero-padded vectors. Returns ``(fused, beta)``.
    """
    _check_same(alpha_c, alpha_t, alpha_s)
    alpha_c, alpha_t, alpha_s = (T.as_tensor(a) for a in (alpha_c, alpha_t, alpha_s))
    W = T.as_tensor(W)
    n = alpha_c.shape[-1]
    N, rem = divmod(W.shape[0], 3)
    if rem or W.shape[1] != 3 or n > N:
        raise T.DimensionError(f"Atop W of shape {W.shape} cannot score vectors of length {n}")
    single = alpha_c.ndim == 1
    if single:
        alpha_c, alpha_t, alpha_s = (a.reshape(1, n) for a in (alpha_c, alpha_t, alpha_s))
    if n == N:
        u = T.concat([alpha_c, alpha_t, alpha_s], axis=-1) @ W
    else:
        u = alpha_c @ W[0:n] + alpha_t @ W[N: N + n] + alpha_s @ W[2 * N: 2 * N + n]
    beta = T.softmax(T.tanh(u + b), axis=-1)
    fused = beta[..., 0:1] * alpha_c + beta[..., 1:2] * alpha_t + beta[..., 2:3] * alpha_s
    if single:
        return fused.reshape(n), beta.reshape(3)
    return fused, beta


def pool(hidden, weights):
    """Weighted sum of hidden rows: ``weights^T hidden`` over the position axis."""
    hidden, weights = T.as_tensor(hidden), T.as_tensor(weights)
    if hidden.shape[-2] != weights.shape[-1]:
        raise T.DimensionError(f"{weights.shape[-1]} weights for {hidden.shape[-2]} positions")
    return T.tsum(hidden * weights.reshape(weights.shape + (1,)), axis=-2)


class AttentionLevel:
    """Parameters and fusion for one level (word or sentence) of the hierarchy.

    ``positions`` is the maximum sequence length at this level (sizes Atop's
    scoring layer). In ``concat_baseline`` mode only the concatenation scorer
    is used, with ``position_size`` the width of the per-position inputs.
    """

    def __init__(self, hidden_size, guide_size, positions, fusion, rng, name,
                 position_size=None, self_context=False):
        if fusion not in FUSION_MODES:
            raise ValueError(f"unknown fusion mode {fusion!r}; valid modes: {', '.join(FUSION_MODES)}")
        self.fusion = fusion
        self.name = name
        self.params = {}
        if fusion == "concat_baseline":
            width = guide_size + (position_size or hidden_size)
            self.params["concat.W"] = T.parameter(glorot(rng, width, 1), f"{name}.concat.W")
            self.params["concat.b"] = T.parameter(np.zeros(1), f"{name}.concat.b")
            return
        for kind in ("claim", "title", "self"):
            self.params[f"{kind}.W"] = T.parameter(glorot(rng, hidden_size, guide_size), f"{name}.{kind}.W")
            self.params[f"{kind}.b"] = T.parameter(np.zeros(guide_size), f"{name}.{kind}.b")
        if self_context:
            self.params["self.context"] = T.parameter(rng.uniform(-0.1, 0.1, guide_size), f"{name}.self.context")
        if fusion == "atop":
            self.params["atop.W"] = T.parameter(glorot(rng, 3 * positions, 3), f"{name}.atop.W")
            self.params["atop.b"] = T.parameter(np.zeros(3), f"{name}.atop.b")

    def parameters(self):
        return list(self.params.values())

    def __call__(self, hidden, mask, claim_guide, title_guide, position_inputs=None):
        """Return ``(fused_weights, extras)``; extras holds the per-mechanism weights and beta."""
        p = self.params
        if self.fusion == "concat_baseline":
            inputs = hidden if position_inputs is None else position_inputs
            alpha = concat_baseline_attention(claim_guide, inputs, p["concat.W"], p["concat.b"], mask)
            return alpha, {}
        a_c = guided_attention(hidden, claim_guide, p["claim.W"], p["claim.b"], mask)
        a_t = guided_attention(hidden, title_guide, p["title.W"], p["title.b"], mask)
        a_s = self_attention(hidden, p["self.W"], p["self.b"], mask, p.get("self.context"))
        extras = {"claim": a_c, "title": a_t, "self": a_s}
        if self.fusion == "average":
            return fuse_average(a_c, a_t, a_s), extras
        fused, beta = fuse_atop(a_c, a_t, a_s, p["atop.W"], p["atop.b"])
        extras["beta"] = beta
        return fused, extras
