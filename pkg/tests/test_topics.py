import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factsumo.synthetic import topic_sentences
from factsumo.topics import LdaModel, TopicAssignment, TopicModelError, cluster_purity, fit


def majority_map(predicted, truth):
    """LDA topic -> ground-truth topic that most of its sentences come from."""
    mapping = {}
    for k in np.unique(predicted):
        vals, counts = np.unique(np.asarray(truth)[np.asarray(predicted) == k], return_counts=True)
        mapping[int(k)] = int(vals[np.argmax(counts)])
    return mapping


@pytest.fixture(scope="module")
def three_topic_fit():
    sentences, truth = topic_sentences(n_sentences=300, n_topics=3, seed=0)
    return sentences, truth, fit(sentences, n_topics=3, iterations=300, seed=0)


class TestFit:
    def test_identical_sentences_get_identical_distributions(self):
        model = fit([["vaccine"]] * 20, n_topics=2, iterations=50, seed=4)
        dists = np.array([model.assign(["vaccine"], i).distribution for i in range(20)])
        assert np.abs(dists - dists[0]).max() <= 1e-6

    def test_disjoint_vocabularies_are_recovered(self, three_topic_fit):
        _, truth, model = three_topic_fit
        predicted = model.document_distributions().argmax(axis=1)
        assert cluster_purity(predicted, truth) >= 0.8

    def test_same_seed_same_counts(self):
        sentences, _ = topic_sentences(n_sentences=60, n_topics=3, seed=1)
        a = fit(sentences, n_topics=3, iterations=40, seed=9)
        b = fit(sentences, n_topics=3, iterations=40, seed=9)
        np.testing.assert_array_equal(a.topic_word, b.topic_word)
        np.testing.assert_array_equal(a.doc_topic, b.doc_topic)

    def test_count_consistency(self, three_topic_fit):
        sentences, _, model = three_topic_fit
        n_tokens = sum(len(s) for s in sentences)
        assert model.topic_word.min() >= 0 and model.doc_topic.min() >= 0
        assert model.topic_word.sum() == model.doc_topic.sum() == n_tokens
        np.testing.assert_array_equal(model.topic_word.sum(axis=1), model.doc_topic.sum(axis=0))
        np.testing.assert_array_equal(model.doc_topic.sum(axis=1), [len(s) for s in sentences])

    def test_default_priors(self, three_topic_fit):
        assert three_topic_fit[2].alpha == pytest.approx(50 / 3)
        assert three_topic_fit[2].beta == 0.01

    def test_too_few_topics(self):
        with pytest.raises(TopicModelError):
            fit([["a"], ["b"]], n_topics=1)

    def test_too_few_sentences(self):
        with pytest.raises(TopicModelError):
            fit([["a"], ["b"]], n_topics=3)


class TestAssign:
    def test_pure_sentence_gets_its_topic(self, three_topic_fit):
        sentences, truth, model = three_topic_fit
        mapping = majority_map(model.document_distributions().argmax(axis=1), truth)
        for target in range(3):
            source = [s for s, t in zip(sentences, truth) if t == target][0]
            got = model.assign(source, "probe").dominant_topic
            assert mapping[got] == target

    def test_empty_sentence_uniform(self, three_topic_fit, caplog):
        with caplog.at_level(logging.WARNING):
            a = three_topic_fit[2].assign([], "s0")
        np.testing.assert_allclose(a.distribution, [1 / 3] * 3)
        assert a.theta == pytest.approx(1 / 3) and a.dominant_topic == 0
        assert "no in-vocabulary" in caplog.text

    def test_argmax_definition(self):
        a = TopicAssignment.from_distribution("s", [0.7, 0.3])
        assert a.dominant_topic == 0 and a.theta == 0.7

    def test_tie_goes_to_lowest_index(self):
        assert TopicAssignment.from_distribution("s", [0.2, 0.4, 0.4]).dominant_topic == 1

    def test_deterministic(self, three_topic_fit):
        sentences, _, model = three_topic_fit
        assert model.assign(sentences[5], 1) == model.assign(sentences[5], 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["t0w1", "t1w3", "t2w5", "unknown", "the"]), max_size=12))
def test_property_assignments_are_distributions(tokens):
    model = _shared_model()
    a = model.assign(tokens, "s")
    dist = np.array(a.distribution)
    assert (dist >= 0).all() and abs(dist.sum() - 1) < 1e-12
    assert a.theta == dist.max() and a.theta >= 1 / model.n_topics - 1e-15
    assert 0 <= a.dominant_topic < model.n_topics


_MODEL = []


def _shared_model():
    if not _MODEL:
        sentences, _ = topic_sentences(n_sentences=90, n_topics=3, seed=2)
        _MODEL.append(fit(sentences, n_topics=3, iterations=50, seed=2))
    return _MODEL[0]


class TestPersistence:
    def test_round_trip(self, tmp_path, three_topic_fit):
        model = three_topic_fit[2]
        model.save(tmp_path / "lda.model")
        loaded = LdaModel.load(tmp_path / "lda.model")
        np.testing.assert_array_equal(loaded.topic_word, model.topic_word)
        np.testing.assert_array_equal(loaded.doc_topic, model.doc_topic)
        assert loaded.vocab == model.vocab and loaded.alpha == model.alpha
        sentence = three_topic_fit[0][0]
        assert loaded.assign(sentence, 0) == model.assign(sentence, 0)

    def test_corrupt_vocab_detected(self, tmp_path, three_topic_fit):
        path = tmp_path / "lda.model"
        three_topic_fit[2].save(path)
        blob = bytearray(path.read_bytes())
        offset = 8 + 40 + 32 + 8  # magic, header, hash, vocab length
        blob[offset] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(TopicModelError, match="hash"):
            LdaModel.load(path)

    def test_wrong_magic(self, tmp_path):
        (tmp_path / "x").write_bytes(b"0" * 64)
        with pytest.raises(TopicModelError):
            LdaModel.load(tmp_path / "x")
