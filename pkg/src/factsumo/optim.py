"""Gradient clipping plus Adam / SGD updates on ``Tensor`` parameters."""

from dataclasses import dataclass, field

import numpy as np


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_gradients(grads, clip_norm, mode="global"):
    """Return clipped copies of ``grads``.

    ``mode="global"`` rescales every gradient by ``clip_norm / norm`` when the
    joint L2 norm exceeds ``clip_norm``; ``mode="value"`` clamps each entry to
    ``[-clip_norm, clip_norm]``.
    """
    if mode == "global":
        norm = global_norm(grads)
        if norm > clip_norm:
            scale = clip_norm / norm
            return [g * scale for g in grads]
        return [g.copy() for g in grads]
    if mode == "value":
        return [np.clip(g, -clip_norm, clip_norm) for g in grads]
    raise ValueError(f"unknown clip mode {mode!r}; expected 'global' or 'value'")


@dataclass
class OptimizerState:
    learning_rate: float = 0.001
    clip_norm: float = 5.0
    clip_mode: str = "global"
    method: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def clip_and_step(params, grads, state):
    """Clip ``grads`` and apply one optimizer update to ``params`` in place.

    ``params`` are Tensors (or arrays); ``grads`` are arrays aligned with them.
    Missing gradients (None) are treated as zeros.
    """
    arrays = [p.data if hasattr(p, "data") else p for p in params]
    grads = [np.zeros_like(a) if g is None else np.asarray(g, dtype=np.float64) for a, g in zip(arrays, grads)]
    for g in grads:
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient passed to the optimizer")
    grads = clip_gradients(grads, state.clip_norm, state.clip_mode)
    state.step += 1
    if state.method == "sgd":
        for a, g in zip(arrays, grads):
            a -= state.learning_rate * g
        return params
    if state.method != "adam":
        raise ValueError(f"unknown optimizer {state.method!r}; expected 'adam' or 'sgd'")
    if not state.m:
        state.m = [np.zeros_like(a) for a in arrays]
        state.v = [np.zeros_like(a) for a in arrays]
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        a -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
