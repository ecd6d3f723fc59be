"""ROUGE-1/2/L scoring and gold-summary construction."""

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import split_sentences, tokenize

log = logging.getLogger(__name__)

METRICS = ("rouge1", "rouge2", "rougeL")


class RougeError(ValueError):
    pass


class GoldUnavailableError(RougeError):
    pass


@dataclass(frozen=True)
class RougeScore:
    metric: str
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, metric, overlap, n_candidate, n_reference):
        p = overlap / n_candidate if n_candidate else 0.0
        r = overlap / n_reference
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(metric, p, r, f)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i: i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n=1):
    """Clipped n-gram overlap between token lists."""
    if n not in (1, 2):
        raise RougeError(f"ROUGE-N supports n in {{1, 2}}, got {n}")
    ref = _ngrams(reference, n)
    if not ref:
        raise RougeError("reference has no n-grams; score undefined")
    cand = _ngrams(candidate, n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(f"rouge{n}", overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a, b):
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, reference):
    if not reference:
        raise RougeError("empty reference; score undefined")
    return RougeScore.from_counts("rougeL", lcs_length(candidate, reference), len(candidate), len(reference))


def rouge_all(candidate, reference):
    return {"rouge1": rouge_n(candidate, reference, 1),
            "rouge2": rouge_n(candidate, reference, 2),
            "rougeL": rouge_l(candidate, reference)}


def sentence_vector(tokens, vectors, dim):
    """Mean embedding of known tokens; unknown tokens count as zero vectors."""
    total = np.zeros(dim)
    for t in tokens:
        v = vectors.get(t)
        if v is not None:
            total += v
    return total / max(len(tokens), 1)


def cosine(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return None
    return float(u @ v / (nu * nv))


def build_gold_summary(claim, description, vectors, threshold=0.4):
    """Keep description sentences whose cosine with the claim is at least ``threshold``.

    ``vectors`` maps token -> embedding. Returns the kept sentences joined in
    their original order.
    """
    if not description:
        raise GoldUnavailableError("no description to build a gold summary from")
    sentences = split_sentences(description) if isinstance(description, str) else list(description)
    dim = len(next(iter(vectors.values()))) if vectors else 0
    claim_vec = sentence_vector(tokenize(claim), vectors, dim)
    kept = []
    for s in sentences:
        sim = cosine(claim_vec, sentence_vector(tokenize(s), vectors, dim))
        if sim is None:
            log.warning("cosine undefined for description sentence %r; dropped", s[:60])
            continue
        if sim >= threshold:
            kept.append(s)
    return " ".join(kept)


def evaluate_summaries(system, gold):
    """Macro-average per-claim ROUGE over claims.

    ``system`` and ``gold`` map claim id -> text. Returns ``(per_claim, corpus)``
    where ``per_claim`` is ``{claim_id: {metric: RougeScore}}`` and ``corpus``
    is ``{metric: RougeScore}``.
    """
    missing_gold = sorted(set(system) - set(gold))
    missing_system = sorted(set(gold) - set(system))
    if missing_gold or missing_system:
        raise RougeError(f"claim ids do not match; missing gold: {missing_gold}, missing summaries: {missing_system}")
    if not system:
        raise RougeError("nothing to evaluate")
    per_claim = {cid: rouge_all(tokenize(system[cid]), tokenize(gold[cid])) for cid in sorted(system)}
    corpus = {}
    for m in METRICS:
        rows = [scores[m] for scores in per_claim.values()]
        corpus[m] = RougeScore(m, float(np.mean([r.precision for r in rows])),
                               float(np.mean([r.recall for r in rows])),
                               float(np.mean([r.f1 for r in rows])))
    return per_claim, corpus
