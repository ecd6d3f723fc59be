import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factsumo import tensor as T
from factsumo.attention import (AttentionLevel, concat_baseline_attention, fuse_atop, fuse_average,
                                guided_attention, pool, self_attention)

from conftest import numeric_grad, rel_error


def softmax_list(scores):
    e = [math.exp(s) for s in scores]
    return [v / sum(e) for v in e]


HIDDEN = np.array([[0.5, -1.0], [1.0, 0.0], [-0.5, 2.0]])
W = np.array([[0.2, -0.4], [0.6, 0.1]])
B = np.array([0.05, -0.1])
GUIDE = np.array([1.0, 2.0])


class TestGuided:
    def test_zero_params_uniform(self):
        out = guided_attention(HIDDEN, GUIDE, np.zeros((2, 2)), np.zeros(2), np.array([1, 0, 1])).data
        np.testing.assert_array_equal(out, [0.5, 0.0, 0.5])

    def test_single_position(self):
        assert guided_attention(HIDDEN[:1], GUIDE, W, B).data[0] == 1.0

    def test_hand_trace(self):
        # u_p = tanh(h_p W + b); score_p = u_p . guide
        u0 = [math.tanh(0.5 * 0.2 + -1.0 * 0.6 + 0.05), math.tanh(0.5 * -0.4 + -1.0 * 0.1 - 0.1)]
        u1 = [math.tanh(1.0 * 0.2 + 0.05), math.tanh(1.0 * -0.4 - 0.1)]
        u2 = [math.tanh(-0.5 * 0.2 + 2.0 * 0.6 + 0.05), math.tanh(-0.5 * -0.4 + 2.0 * 0.1 - 0.1)]
        scores = [u[0] * 1.0 + u[1] * 2.0 for u in (u0, u1, u2)]
        np.testing.assert_allclose(guided_attention(HIDDEN, GUIDE, W, B).data, softmax_list(scores),
                                   atol=1e-15, rtol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(T.DimensionError):
            guided_attention(HIDDEN, np.ones(3), W, B)


class TestSelf:
    def test_zero_params_uniform(self):
        np.testing.assert_allclose(self_attention(HIDDEN, np.zeros((2, 2)), np.zeros(2)).data, [1 / 3] * 3)

    def test_single_position(self):
        assert self_attention(HIDDEN[1:2], W, B).data[0] == 1.0

    def test_hand_trace(self):
        rows = [[0.5, -1.0], [1.0, 0.0], [-0.5, 2.0]]
        scores = [math.tanh(h0 * 0.2 + h1 * 0.6 + 0.05) + math.tanh(h0 * -0.4 + h1 * 0.1 - 0.1)
                  for h0, h1 in rows]
        np.testing.assert_allclose(self_attention(HIDDEN, W, B).data, softmax_list(scores), atol=1e-15, rtol=0)


class TestConcatBaseline:
    def test_zero_params_uniform(self):
        out = concat_baseline_attention(np.ones(2), HIDDEN, np.zeros((4, 1)), np.zeros(1)).data
        np.testing.assert_allclose(out, [1 / 3] * 3)

    def test_single_position(self):
        assert concat_baseline_attention(np.ones(2), HIDDEN[:1], np.ones((4, 1)), np.zeros(1)).data[0] == 1.0

    def test_hand_trace(self):
        claim = np.array([0.3, -0.2])
        docs = np.array([[1.0, 0.5], [-1.0, 0.25]])
        Wa = np.array([[0.4], [0.1], [-0.3], [0.8]])
        a0 = math.tanh(0.3 * 0.4 + -0.2 * 0.1 + 1.0 * -0.3 + 0.5 * 0.8 + 0.1)
        a1 = math.tanh(0.3 * 0.4 + -0.2 * 0.1 + -1.0 * -0.3 + 0.25 * 0.8 + 0.1)
        out = concat_baseline_attention(claim, docs, Wa, np.array([0.1])).data
        np.testing.assert_allclose(out, softmax_list([a0, a1]), atol=1e-15, rtol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(T.DimensionError):
            concat_baseline_attention(np.ones(3), HIDDEN, np.zeros((4, 1)), np.zeros(1))


class TestFusion:
    def test_average_agreement(self):
        v = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(fuse_average(v, v, v).data, v, atol=1e-16)

    def test_average_forced(self):
        np.testing.assert_array_equal(fuse_average([1.0, 0.0], [0.0, 1.0], [0.5, 0.5]).data, [0.5, 0.5])

    def test_average_length_mismatch(self):
        with pytest.raises(T.DimensionError):
            fuse_average([1.0, 0.0], [1.0], [0.5, 0.5])

    def test_atop_agreement(self):
        v = np.array([0.1, 0.6, 0.3])
        W = np.random.default_rng(0).normal(size=(9, 3))
        fused, beta = fuse_atop(v, v, v, W, np.array([0.3, -1.0, 2.0]))
        np.testing.assert_allclose(fused.data, v, atol=1e-15)
        assert abs(beta.data.sum() - 1) < 1e-15

    def test_atop_zero_params_is_average(self):
        a, b, c = np.array([0.7, 0.3]), np.array([0.1, 0.9]), np.array([0.4, 0.6])
        fused, beta = fuse_atop(a, b, c, np.zeros((6, 3)), np.zeros(3))
        np.testing.assert_array_equal(beta.data, [1 / 3] * 3)
        np.testing.assert_allclose(fused.data, fuse_average(a, b, c).data, atol=1e-12, rtol=0)

    def test_atop_hand_trace(self):
        a_c, a_t, a_s = [0.6, 0.4], [0.2, 0.8], [0.5, 0.5]
        Wa = np.array([[0.5, -0.2, 0.1], [0.3, 0.4, -0.6],
                       [-0.1, 0.2, 0.7], [0.9, -0.3, 0.2],
                       [0.4, 0.4, -0.4], [-0.8, 0.6, 0.1]])
        ba = [0.1, 0.0, -0.2]
        con = a_c + a_t + a_s
        u = [math.tanh(sum(con[i] * Wa[i, j] for i in range(6)) + ba[j]) for j in range(3)]
        beta = softmax_list(u)
        expected = [beta[0] * a_c[p] + beta[1] * a_t[p] + beta[2] * a_s[p] for p in range(2)]
        fused, got_beta = fuse_atop(a_c, a_t, a_s, Wa, np.array(ba))
        np.testing.assert_allclose(got_beta.data, beta, atol=1e-15, rtol=0)
        np.testing.assert_allclose(fused.data, expected, atol=1e-15, rtol=0)

    def test_atop_short_input_equals_zero_padded(self):
        rng = np.random.default_rng(4)
        Wa, ba = rng.normal(size=(12, 3)), rng.normal(size=3)
        vs = [rng.dirichlet(np.ones(3)) for _ in range(3)]
        padded = [np.append(v, 0.0) for v in vs]
        short, beta_short = fuse_atop(*vs, Wa, ba)
        full, beta_full = fuse_atop(*padded, Wa, ba)
        np.testing.assert_allclose(beta_short.data, beta_full.data, atol=1e-15)
        np.testing.assert_allclose(short.data, full.data[:3], atol=1e-15)


class TestPool:
    def test_one_hot(self):
        np.testing.assert_array_equal(pool(HIDDEN, [0.0, 1.0, 0.0]).data, HIDDEN[1])

    def test_uniform_is_mean(self):
        np.testing.assert_allclose(pool(HIDDEN, [1 / 3] * 3).data, HIDDEN.mean(axis=0), atol=1e-15)

    def test_weighted_sum(self):
        # 0.2*[0.5,-1] + 0.3*[1,0] + 0.5*[-0.5,2] = [0.15, 0.8]
        np.testing.assert_allclose(pool(HIDDEN, [0.2, 0.3, 0.5]).data, [0.15, 0.8], atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(T.DimensionError):
            pool(HIDDEN, [0.5, 0.5])


def random_level(fusion, seed, H=4, E=3, n=5, scale=1.0):
    rng = np.random.default_rng(seed)
    level = AttentionLevel(H, E, n, fusion, rng, "lvl", position_size=H)
    for p in level.parameters():
        p.data[...] = rng.normal(scale=scale, size=p.shape)
    return level


@pytest.mark.parametrize("fusion", ["average", "atop", "concat_baseline"])
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), n_real=st.integers(1, 5))
def test_property_level_outputs_are_masked_distributions(fusion, seed, n_real):
    rng = np.random.default_rng(seed)
    level = random_level(fusion, seed)
    hidden = rng.normal(scale=2.0, size=(2, 5, 4))
    mask = np.zeros((2, 5))
    mask[:, :n_real] = 1.0
    rng.shuffle(mask[1])
    hidden = hidden * mask[..., None]
    fused, extras = level(hidden, mask, rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))
    for out in [fused] + [extras[k] for k in ("claim", "title", "self") if k in extras]:
        w = out.data
        assert (w >= 0).all()
        np.testing.assert_allclose(w.sum(axis=-1), 1.0, atol=1e-9)
        assert (w[mask == 0] == 0.0).all()
    if "beta" in extras:
        np.testing.assert_allclose(extras["beta"].data.sum(axis=-1), 1.0, atol=1e-12)


@pytest.mark.parametrize("fusion", ["average", "atop", "concat_baseline"])
def test_permutation_equivariance(fusion):
    rng = np.random.default_rng(11)
    level = random_level(fusion, 11, n=4)
    hidden = rng.normal(size=(4, 4))
    mask = np.ones(4)
    perm = np.array([2, 0, 3, 1])
    claim, title = rng.normal(size=3), rng.normal(size=3)
    if fusion == "atop":
        # Atop scores positions through position-specific rows, so it is
        # equivariant only when those rows are permuted along with the inputs
        W = level.params["atop.W"].data
        blocks = [W[i * 4:(i + 1) * 4] for i in range(3)]
        permuted = random_level(fusion, 11, n=4)
        permuted.params["atop.W"].data[...] = np.concatenate([blk[perm] for blk in blocks])
    else:
        permuted = level
    base, _ = level(hidden, mask, claim, title)
    moved, _ = permuted(hidden[perm], mask[perm], claim, title)
    np.testing.assert_allclose(moved.data, base.data[perm], atol=1e-14)


@pytest.mark.parametrize("fusion", ["average", "atop", "concat_baseline"])
def test_gradients_reach_every_attention_parameter(fusion):
    rng = np.random.default_rng(2)
    level = random_level(fusion, 2, n=3, scale=0.5)
    hidden = rng.normal(size=(2, 3, 4))
    mask = np.array([[1, 1, 1], [1, 1, 0.0]])
    claim, title = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    weights = rng.normal(size=(2, 3))

    def loss():
        fused, _ = level(hidden, mask, claim, title)
        return T.tsum(fused * weights)

    loss().backward()
    for name, p in level.params.items():
        assert p.grad is not None and np.abs(p.grad).sum() > 0, name
        num = numeric_grad(lambda: float(loss().data), p.data)
        assert rel_error(p.grad, num, floor=1e-7) < 1e-5, name


def test_unknown_fusion_mode():
    with pytest.raises(ValueError, match="valid modes"):
        AttentionLevel(4, 3, 5, "max", np.random.default_rng(0), "x")
