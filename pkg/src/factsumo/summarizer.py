"""Topic-diversified extractive summaries by greedy weighted set cover.

Each candidate sentence costs the inverse of
``lam * theta + (1 - lam) * (word_attention + sentence_attention)``; the
greedy loop repeatedly takes the sentence with the lowest cost per newly
covered topic until every topic in the target set is covered.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

log = logging.getLogger(__name__)

SCORE_EPS = 1e-9


class SummaryError(ValueError):
    pass


class InfeasibleCoverError(SummaryError):
    pass


@dataclass
class CandidateSentence:
    sentence_id: tuple            # (document id, sentence index)
    tokens: list
    word_attention: float
    sentence_attention: float
    topic: object                 # TopicAssignment
    score: float = 0.0
    cost: float = math.inf
    text: str = ""
    covers: frozenset = frozenset()


@dataclass
class SummaryResult:
    selected: list
    covered: set
    topics: set
    total_cost: float
    steps: list = field(default_factory=list)

    @property
    def sentence_ids(self):
        return [c.sentence_id for c in self.selected]


def sentence_score(theta, word_attention, sentence_attention, lam):
    return lam * theta + (1.0 - lam) * (word_attention + sentence_attention)


def score_sentences(attention, assignments, lam=0.5, wwa="mean", texts=None, tokens=None):
    """Build scored candidates.

    ``attention`` maps sentence id -> ``(word_weights, sentence_weight)`` and
    ``assignments`` maps sentence id -> TopicAssignment. ``wwa="mean"`` averages
    the word weights of the sentence; ``"sum"`` adds them up. Sentences whose
    score is not above 1e-9 are dropped.
    """
    if not 0.0 <= lam <= 1.0:
        raise SummaryError(f"lambda must lie in [0, 1], got {lam}")
    if wwa not in ("mean", "sum"):
        raise SummaryError(f"wwa must be 'mean' or 'sum', got {wwa!r}")
    candidates = []
    for sid in sorted(attention):
        if sid not in assignments:
            raise SummaryError(f"sentence {sid} has no topic assignment")
        words, w_sa = attention[sid]
        words = list(words)
        if wwa == "sum":
            w_wa = float(sum(words))
        else:
            w_wa = float(sum(words) / len(words)) if words else 0.0
        topic = assignments[sid]
        score = sentence_score(topic.theta, w_wa, float(w_sa), lam)
        if score <= SCORE_EPS:
            log.warning("sentence %s scores %.3g and is dropped", sid, score)
            continue
        candidates.append(CandidateSentence(
            sentence_id=sid,
            tokens=list(tokens.get(sid, [])) if tokens else [],
            word_attention=w_wa,
            sentence_attention=float(w_sa),
            topic=topic,
            score=score,
            cost=1.0 / score,
            text=texts.get(sid, "") if texts else "",
            covers=frozenset([topic.dominant_topic]),
        ))
    return candidates


def set_coverage(candidates, mode="dominant", tau=0.2):
    """Assign each candidate's covered topics.

    ``dominant``: only its dominant topic. ``multi``: every topic with
    probability at least ``tau``, always including the dominant one.
    """
    if mode not in ("dominant", "multi"):
        raise SummaryError(f"coverage must be 'dominant' or 'multi', got {mode!r}")
    for c in candidates:
        covers = {c.topic.dominant_topic}
        if mode == "multi":
            covers |= {k for k, p in enumerate(c.topic.distribution) if p >= tau}
        c.covers = frozenset(covers)
    return candidates


def dominant_topics(candidates):
    return {c.topic.dominant_topic for c in candidates}


def greedy_cover(candidates, topics=None, max_sentences=None):
    """Greedy weighted set cover of ``topics`` (default: all dominant topics).

    Each step picks the unselected sentence minimising cost / (number of new
    topics it covers); ties go to the lower cost, then the smaller sentence id.
    Sentences covering nothing new are never picked.
    """
    if not candidates:
        raise SummaryError("no candidate sentences to summarise")
    topics = set(dominant_topics(candidates) if topics is None else topics)
    reachable = set().union(*(c.covers for c in candidates))
    missing = topics - reachable
    if missing:
        raise InfeasibleCoverError(f"no candidate covers topic(s) {sorted(missing)}")
    covered, selected, steps = set(), [], []
    remaining = list(candidates)
    total = 0.0
    while covered != topics:
        if max_sentences is not None and len(selected) >= max_sentences:
            break
        best, best_key = None, None
        for c in remaining:
            new = len((c.covers & topics) - covered)
            if new == 0:
                continue
            key = (c.cost / new, c.cost, c.sentence_id)
            if best_key is None or key < best_key:
                best, best_key = c, key
        selected.append(best)
        remaining = [c for c in remaining if c is not best]
        newly = (best.covers & topics) - covered
        covered |= newly
        total += best.cost
        steps.append({"sentence_id": list(best.sentence_id), "ratio": best_key[0],
                      "new_topics": sorted(newly)})
    return SummaryResult(selected, covered, topics, total, steps)


def verify_cover(result):
    """True when the summary covers its full topic set with no repeated sentence."""
    ids = result.sentence_ids
    covered = set().union(*(c.covers for c in result.selected)) if result.selected else set()
    return len(ids) == len(set(ids)) and result.topics <= covered


def relevant_sentences(sentence_weights, factor=0.5):
    """Indices whose attention weight is at least ``factor`` times uniform (1/n real sentences)."""
    n = len(sentence_weights)
    if n == 0:
        return []
    threshold = factor / n
    return [i for i, w in enumerate(sentence_weights) if w >= threshold]


# BM25 comparator


def bm25_scores(query, sentences, k1=1.2, b=0.75):
    """Okapi BM25 score of each tokenized sentence for the tokenized query.

    IDF is ``ln(1 + (N - n + 0.5) / (n + 0.5))``, which stays positive.
    """
    N = len(sentences)
    if N == 0:
        return []
    lengths = [len(s) for s in sentences]
    avgdl = sum(lengths) / N or 1.0
    df = Counter()
    for s in sentences:
        df.update(set(s))
    idf = {t: math.log(1.0 + (N - n + 0.5) / (n + 0.5)) for t, n in df.items()}
    scores = []
    for s, dl in zip(sentences, lengths):
        tf = Counter(s)
        norm = k1 * (1.0 - b + b * dl / avgdl)
        total = 0.0
        for t in query:
            f = tf.get(t, 0)
            if f:
                total += idf[t] * f * (k1 + 1.0) / (f + norm)
        scores.append(total)
    return scores


def bm25_summary(query, candidates, top_n=3, k1=1.2, b=0.75):
    """Rank ``(sentence_id, tokens)`` pairs by BM25 against ``query``; keep ``top_n``."""
    if top_n < 1:
        raise SummaryError("top_n must be at least 1")
    candidates = sorted(candidates, key=lambda c: c[0])
    scores = bm25_scores(query, [c[1] for c in candidates], k1, b)
    ranked = sorted(zip(candidates, scores), key=lambda x: (-x[1], x[0][0]))
    return [(c[0], s) for c, s in ranked[:top_n]]


def render_summary(entries):
    """One line per sentence, ordered by (document, sentence index), prefixed ``[doc N]``.

    ``entries`` is a SummaryResult or an iterable of ``(sentence_id, text)``.
    """
    if isinstance(entries, SummaryResult):
        entries = [(c.sentence_id, c.text) for c in entries.selected]
    lines = [f"[doc {sid[0]}] {text}" for sid, text in sorted(entries, key=lambda e: tuple(e[0]))]
    return "\n".join(lines)


def summarize_claim(report, instance, lda, lam=0.5, coverage="dominant", tau=0.2, wwa="mean",
                    relevance=0.5, max_sentences=None):
    """Summary for one claim from its prediction report (attention exports)."""
    attention, texts, tokens, assignments = {}, {}, {}, {}
    for doc_report in report["documents"]:
        di = doc_report["doc_index"]
        doc = instance.documents[di]
        sents = doc_report["sentences"]
        keep = relevant_sentences([s["weight"] for s in sents], relevance)
        body_tokens = doc.body_tokens
        for si in keep:
            sid = (di, sents[si]["index"])
            attention[sid] = (sents[si]["word_weights"], sents[si]["weight"])
            texts[sid] = doc.sentences[sid[1]]
            tokens[sid] = body_tokens[sid[1]]
            assignments[sid] = lda.assign(tokens[sid], sid)
    candidates = score_sentences(attention, assignments, lam, wwa, texts, tokens)
    set_coverage(candidates, coverage, tau)
    return greedy_cover(candidates, max_sentences=max_sentences)


def bm25_for_claim(instance, top_n=3):
    pool_ = [((di, si), toks) for di, doc in enumerate(instance.documents)
             for si, toks in enumerate(doc.body_tokens)]
    ranked = bm25_summary(instance.claim_tokens, pool_, top_n)
    return [(sid, instance.documents[sid[0]].sentences[sid[1]], score) for sid, score in ranked]


def result_to_json(claim_id, result: SummaryResult, baseline: Optional[list] = None):
    out = {
        "claim_id": claim_id,
        "sentences": [
            {
                "doc_index": c.sentence_id[0],
                "sentence_index": c.sentence_id[1],
                "text": c.text,
                "cost": round(c.cost, 10),
                "score": round(c.score, 10),
                "dominant_topic": c.topic.dominant_topic,
                "theta": round(c.topic.theta, 10),
                "covers": sorted(c.covers),
            }
            for c in result.selected
        ],
        "topics": sorted(result.topics),
        "covered_topics": sorted(result.covered),
        "total_cost": round(result.total_cost, 10),
        "covers_all_topics": verify_cover(result),
        "steps": [{**s, "ratio": round(s["ratio"], 10)} for s in result.steps],
        "text": render_summary(result),
    }
    if baseline is not None:
        out["bm25"] = [
            {"doc_index": sid[0], "sentence_index": sid[1], "text": text, "score": round(score, 10)}
            for sid, text, score in baseline
        ]
        out["bm25_text"] = render_summary([(sid, text) for sid, text, _ in baseline])
    return out
