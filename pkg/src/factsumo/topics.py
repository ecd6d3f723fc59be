"""Latent Dirichlet allocation by collapsed Gibbs sampling.

Each candidate sentence is one LDA document. Uniform draws come from a seeded
numpy Generator and are handed to the compiled sweep, so a fixed seed gives
identical count matrices.
"""

import hashlib
import logging
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from numba import njit

from .seeding import derive_seed

log = logging.getLogger(__name__)

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being below
between both but by can could did do does doing down during each few for from further had has have
having he her here hers herself him himself his how i if in into is it its itself just me more most
my myself no nor not now of off on once only or other our ours ourselves out over own same she should
so some such than that the their theirs them themselves then there these they this those through to
too under until up very was we were what when where which while who whom why will with would you your
yours yourself yourselves
""".split())


class TopicModelError(ValueError):
    pass


@njit(cache=True)
def _sweep(z, docs, words, ndk, nkw, nk, alpha, beta, vbeta, uniforms):
    K = nk.shape[0]
    p = np.empty(K)
    for i in range(z.shape[0]):
        d, w, k = docs[i], words[i], z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(K):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        k = 0
        while k < K - 1 and p[k] < u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@njit(cache=True)
def _fold_in(words, z, phi, alpha, uniforms, burn_in):
    """Resample one sentence's topics against fixed topic-word probabilities ``phi``;
    returns doc-topic counts averaged over the post burn-in sweeps."""
    K = phi.shape[0]
    n = words.shape[0]
    counts = np.zeros(K)
    for i in range(n):
        counts[z[i]] += 1
    acc = np.zeros(K)
    kept = 0
    p = np.empty(K)
    sweeps = uniforms.shape[0]
    for s in range(sweeps):
        for i in range(n):
            counts[z[i]] -= 1
            total = 0.0
            for t in range(K):
                total += (counts[t] + alpha) * phi[t, words[i]]
                p[t] = total
            u = uniforms[s, i] * total
            k = 0
            while k < K - 1 and p[k] < u:
                k += 1
            z[i] = k
            counts[k] += 1
        if s >= burn_in:
            acc += counts
            kept += 1
    return acc / kept


@dataclass(frozen=True)
class TopicAssignment:
    sentence_id: object
    distribution: tuple
    dominant_topic: int
    theta: float

    @classmethod
    def from_distribution(cls, sentence_id, dist):
        dist = np.asarray(dist, dtype=np.float64)
        dominant = int(np.argmax(dist))  # first maximum: ties go to the lowest index
        return cls(sentence_id, tuple(float(x) for x in dist), dominant, float(dist[dominant]))


class LdaModel:
    def __init__(self, vocab, topic_word, doc_topic, alpha, beta, seed=0, iterations=0):
        self.vocab = list(vocab)
        self.index = {w: i for i, w in enumerate(self.vocab)}
        self.topic_word = topic_word
        self.doc_topic = doc_topic
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.seed = int(seed)
        self.iterations = int(iterations)

    @property
    def n_topics(self):
        return self.topic_word.shape[0]

    def phi(self):
        V = self.topic_word.shape[1]
        return (self.topic_word + self.beta) / (self.topic_word.sum(axis=1, keepdims=True) + V * self.beta)

    def document_distributions(self):
        """Smoothed topic distributions of the training sentences."""
        n = self.doc_topic.sum(axis=1, keepdims=True)
        return (self.doc_topic + self.alpha) / (n + self.n_topics * self.alpha)

    def vocab_hash(self):
        return hashlib.sha256("\n".join(self.vocab).encode("utf-8")).hexdigest()

    def save(self, path):
        """Binary layout: magic ``FSUMOLDA``, version, K, V, alpha, beta, seed,
        iterations, the vocab hash, newline-joined vocab, then the topic-word and
        doc-topic count matrices as little-endian int64."""
        vocab_blob = "\n".join(self.vocab).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(b"FSUMOLDA")
            fh.write(struct.pack("<IIIddqI", 1, self.n_topics, len(self.vocab), self.alpha, self.beta,
                                 self.seed, self.iterations))
            fh.write(bytes.fromhex(self.vocab_hash()))
            fh.write(struct.pack("<Q", len(vocab_blob)))
            fh.write(vocab_blob)
            fh.write(struct.pack("<Q", self.doc_topic.shape[0]))
            fh.write(np.ascontiguousarray(self.topic_word, dtype="<i8").tobytes())
            fh.write(np.ascontiguousarray(self.doc_topic, dtype="<i8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(8) != b"FSUMOLDA":
                raise TopicModelError(f"{path}: not an LDA model file")
            header = struct.calcsize("<IIIddqI")
            version, K, V, alpha, beta, seed, iterations = struct.unpack("<IIIddqI", fh.read(header))
            if version != 1:
                raise TopicModelError(f"{path}: unsupported LDA model version {version}")
            digest = fh.read(32).hex()
            (blob_len,) = struct.unpack("<Q", fh.read(8))
            blob = fh.read(blob_len).decode("utf-8")
            vocab = blob.split("\n") if blob else []
            (n_docs,) = struct.unpack("<Q", fh.read(8))
            topic_word = np.frombuffer(fh.read(8 * K * V), dtype="<i8").reshape(K, V).astype(np.int64)
            doc_topic = np.frombuffer(fh.read(8 * n_docs * K), dtype="<i8").reshape(n_docs, K).astype(np.int64)
        model = cls(vocab, topic_word, doc_topic, alpha, beta, seed, iterations)
        if model.vocab_hash() != digest or len(vocab) != V:
            raise TopicModelError(f"{path}: vocabulary hash mismatch (corrupt file)")
        return model

    def assign(self, tokens, sentence_id=None, iterations=50):
        """Fold a sentence in against the fixed topics and summarise its distribution."""
        K = self.n_topics
        words = np.array([self.index[t] for t in lda_tokens(tokens) if t in self.index], dtype=np.int64)
        if words.size == 0:
            log.warning("sentence %s has no in-vocabulary token; using a uniform topic distribution", sentence_id)
            return TopicAssignment.from_distribution(sentence_id, np.full(K, 1.0 / K))
        key = zlib.crc32(" ".join(self.vocab[w] for w in words).encode("utf-8"))
        rng = np.random.default_rng([self.seed, key])
        z = rng.integers(0, K, size=words.size).astype(np.int64)
        uniforms = rng.random((iterations, words.size))
        counts = _fold_in(words, z, self.phi(), self.alpha, uniforms, iterations // 2)
        dist = (counts + self.alpha) / (words.size + K * self.alpha)
        return TopicAssignment.from_distribution(sentence_id, dist)


def lda_tokens(tokens, stopwords=STOPWORDS):
    return [t for t in tokens if t not in stopwords and not t.isdigit()]


def fit(sentences, n_topics=10, iterations=500, seed=0, alpha=None, beta=0.01, stopwords=STOPWORDS):
    """Fit LDA over tokenized ``sentences`` (each one LDA document)."""
    if n_topics < 2:
        raise TopicModelError(f"need at least 2 topics, got {n_topics}")
    if len(sentences) < n_topics:
        raise TopicModelError(f"need at least {n_topics} sentences, got {len(sentences)}")
    alpha = 50.0 / n_topics if alpha is None else float(alpha)
    docs_tokens = [[t for t in s if t not in stopwords and not t.isdigit()] for s in sentences]
    vocab, index = [], {}
    for toks in docs_tokens:
        for t in toks:
            if t not in index:
                index[t] = len(vocab)
                vocab.append(t)
    doc_ids = np.array([d for d, toks in enumerate(docs_tokens) for _ in toks], dtype=np.int64)
    word_ids = np.array([index[t] for toks in docs_tokens for t in toks], dtype=np.int64)
    K, V, N = n_topics, len(vocab), len(word_ids)
    rng = np.random.default_rng(derive_seed(seed, "lda"))
    z = rng.integers(0, K, size=N).astype(np.int64)
    ndk = np.zeros((len(sentences), K), dtype=np.int64)
    nkw = np.zeros((K, max(V, 1)), dtype=np.int64)
    np.add.at(ndk, (doc_ids, z), 1)
    np.add.at(nkw, (z, word_ids), 1)
    nk = nkw.sum(axis=1)
    for _ in range(iterations):
        _sweep(z, doc_ids, word_ids, ndk, nkw, nk, alpha, beta, V * beta, rng.random(N))
    return LdaModel(vocab, nkw[:, :V], ndk, alpha, beta, seed, iterations)


def cluster_purity(predicted, truth):
    """Fraction of items whose cluster's majority true label matches their own."""
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    total = 0
    for c in np.unique(predicted):
        _, counts = np.unique(truth[predicted == c], return_counts=True)
        total += counts.max()
    return total / len(truth)
