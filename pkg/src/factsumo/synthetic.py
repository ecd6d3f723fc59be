"""Synthetic corpora with known ground truth.

* ``giveaway_corpus`` / ``separable_corpus``: labels are signalled by planted
  marker tokens in the evidence.
* ``topic_sentences``: sentences drawn from disjoint per-topic vocabularies.
* ``mini_corpus``: the bundled 20-claim pipeline fixture with fact-check
  descriptions and a matching toy embedding file.
"""

import hashlib
import json

import numpy as np

from .corpus import parse_instance

TRUE_MARKER = "verified"
FALSE_MARKER = "fabricated"


def _words(prefix, n):
    return [f"{prefix}{i}" for i in range(n)]


def _sentence(rng, pool, length):
    return " ".join(rng.choice(pool, size=length)) + "."


def giveaway_corpus(n_claims=8, seed=0, docs_per_claim=2, sentences_per_doc=3):
    """Tiny corpus where each true claim's evidence contains ``verified`` and
    each false claim's contains ``fabricated``; everything else is random."""
    rng = np.random.default_rng(seed)
    filler = _words("w", 30)
    out = []
    for i in range(n_claims):
        label = "true" if i % 2 == 0 else "false"
        marker = TRUE_MARKER if label == "true" else FALSE_MARKER
        docs = []
        for d in range(docs_per_claim):
            sents = [_sentence(rng, filler, 5) for _ in range(sentences_per_doc)]
            j = int(rng.integers(sentences_per_doc))
            sents[j] = sents[j][:-1] + f" {marker}."
            docs.append({"title": _sentence(rng, filler, 3), "body": sents, "source_domain": f"site{d}.com"})
        out.append(parse_instance({"claim_id": f"g{i}", "claim_text": _sentence(rng, filler, 5),
                                   "label": label, "documents": docs}))
    return out


def separable_corpus(n_claims=200, seed=0, docs_per_claim=3, vocab_size=120):
    """Claims whose evidence carries label-correlated marker tokens at random
    positions amid random filler; sentence and document lengths vary."""
    rng = np.random.default_rng(seed)
    filler = _words("w", vocab_size)
    out = []
    for i in range(n_claims):
        label = "true" if rng.random() < 0.5 else "false"
        marker = TRUE_MARKER if label == "true" else FALSE_MARKER
        docs = []
        for d in range(docs_per_claim):
            n_sent = int(rng.integers(3, 7))
            sents = [list(rng.choice(filler, size=int(rng.integers(4, 10)))) for _ in range(n_sent)]
            j = int(rng.integers(n_sent))
            sents[j].insert(int(rng.integers(len(sents[j]) + 1)), marker)
            docs.append({"title": _sentence(rng, filler, 4),
                         "body": [" ".join(s) + "." for s in sents],
                         "source_domain": f"site{int(rng.integers(10))}.com"})
        out.append(parse_instance({"claim_id": f"s{i:03d}", "claim_text": _sentence(rng, filler, 6),
                                   "label": label, "documents": docs}))
    return out


def topic_sentences(n_sentences=300, n_topics=3, seed=0, length=8, vocab_per_topic=20):
    """Token lists from disjoint topic vocabularies, with their true topic ids."""
    rng = np.random.default_rng(seed)
    vocabs = [_words(f"t{k}w", vocab_per_topic) for k in range(n_topics)]
    truth = rng.integers(0, n_topics, size=n_sentences)
    return [list(rng.choice(vocabs[t], size=length)) for t in truth], truth


# the bundled mini-corpus

SUBJECTS = {
    "smoking": {
        "core": ["smoking", "cigarettes", "tobacco", "covid", "infection"],
        "facets": {
            "receptors": ["nicotine", "receptors", "binding", "cells", "lungs", "virus", "entry"],
            "hospital": ["hospital", "patients", "admitted", "smokers", "records", "ward", "severe"],
            "warning": ["health", "agency", "warned", "risk", "advice", "quit", "danger"],
        },
    },
    "sealevel": {
        "core": ["sea", "level", "ocean", "coast", "rise"],
        "facets": {
            "satellites": ["satellite", "altimetry", "measured", "millimetres", "decade", "orbit", "record"],
            "icesheets": ["glaciers", "greenland", "antarctic", "melt", "ice", "sheets", "loss"],
            "flooding": ["flooding", "cities", "tides", "storm", "surge", "residents", "streets"],
        },
    },
    "vaccines": {
        "core": ["vaccine", "vaccines", "autism", "children", "shots"],
        "facets": {
            "trials": ["trial", "cohort", "million", "danish", "study", "followed", "participants"],
            "retraction": ["retracted", "journal", "wakefield", "fraud", "paper", "lancet", "licence"],
            "schedule": ["schedule", "doses", "infants", "measles", "outbreaks", "coverage", "clinics"],
        },
    },
    "wind": {
        "core": ["wind", "turbines", "birds", "energy", "farms"],
        "facets": {
            "wildlife": ["collisions", "raptors", "bats", "survey", "carcasses", "migration", "species"],
            "comparison": ["cats", "buildings", "windows", "kill", "billions", "compared", "towers"],
            "grid": ["grid", "megawatts", "capacity", "electricity", "prices", "output", "storage"],
        },
    },
    "sugar": {
        "core": ["sugar", "children", "hyperactive", "diet", "sweets"],
        "facets": {
            "blinded": ["blinded", "placebo", "sweetener", "aspartame", "behaviour", "double", "controlled"],
            "parents": ["parents", "expectations", "rated", "perceived", "mothers", "bias", "observed"],
            "nutrition": ["calories", "teeth", "decay", "obesity", "dentists", "intake", "recommend"],
        },
    },
}
FILLER = ["subscribe", "newsletter", "click", "cookies", "advertisement", "share", "comments",
          "login", "updates", "privacy", "sponsored", "trending"]
TRUE_CUES = ["confirmed", "accurate", "supported", "consistent"]
FALSE_CUES = ["debunked", "misleading", "unsupported", "hoax"]
CLAIM_VERBS = {"true": ["does", "really", "indeed"], "false": ["may", "supposedly", "allegedly"]}
FUNCTION = ["the", "of", "in", "and", "a", "to", "that"]
DOMAINS = ["newsdaily.com", "healthwire.org", "sciencepost.net", "factfinder.org", "localtimes.com",
           "blogzone.net"]


def _facet_sentence(rng, subject, facet, n_facet=5):
    profile = SUBJECTS[subject]
    words = list(rng.choice(profile["facets"][facet], size=n_facet, replace=False))
    words.insert(int(rng.integers(len(words) + 1)), str(rng.choice(profile["core"])))
    for _ in range(2):
        words.insert(int(rng.integers(1, len(words))), str(rng.choice(FUNCTION)))
    return " ".join(words).capitalize() + "."


def _mini_claim(rng, idx, subject, label):
    profile = SUBJECTS[subject]
    core = list(rng.choice(profile["core"], size=4, replace=False))
    verb = str(rng.choice(CLAIM_VERBS[label]))
    claim_words = core[:2] + [verb] + core[2:]
    claim_text = " ".join(claim_words).capitalize() + "."
    cues = TRUE_CUES if label == "true" else FALSE_CUES
    facets = list(profile["facets"])
    docs = []
    for d in range(int(rng.integers(3, 5))):
        sents = []
        # restatements echo the claim
        for _ in range(int(rng.integers(1, 3))):
            echo = claim_words + [str(rng.choice(FUNCTION)), str(rng.choice(profile["core"]))]
            sents.append(" ".join(rng.permutation(echo)).capitalize() + ".")
        # the verdict rides on a factual sentence, as in real supporting/refuting evidence
        for fi, facet in enumerate(rng.permutation(facets)[: int(rng.integers(2, 4))]):
            sentence = _facet_sentence(rng, subject, facet)
            if fi == 0:
                cue = " ".join(rng.choice(cues, size=2, replace=False))
                sentence = f"{cue.capitalize()} {sentence[0].lower()}{sentence[1:]}"
            sents.append(sentence)
        for _ in range(int(rng.integers(1, 3))):
            sents.append(_sentence(rng, FILLER, 5).capitalize())
        order = rng.permutation(len(sents))
        docs.append({
            "title": " ".join(rng.choice(profile["core"], size=3)) + " " + str(rng.choice(FILLER)),
            "body": [sents[i] for i in order],
            "source_domain": str(rng.choice(DOMAINS)),
        })
    description = [_facet_sentence(rng, subject, f, 6) for f in facets]
    description.append(_sentence(rng, FILLER, 6).capitalize())
    description.insert(1, "Our rating process is explained on the about page.")
    return {
        "claim_id": f"m{idx:02d}",
        "claim_text": claim_text,
        "label": label,
        "documents": docs,
        "description": " ".join(description),
    }


def mini_corpus(seed=20, n_claims=20):
    """Raw JSON objects of the bundled mini-corpus."""
    rng = np.random.default_rng(seed)
    subjects = list(SUBJECTS)
    out = []
    for i in range(n_claims):
        subject = subjects[i % len(subjects)]
        label = "true" if (i // len(subjects)) % 2 == 0 else "false"
        out.append(_mini_claim(rng, i, subject, label))
    return out


def toy_embeddings(dim=16, seed=20):
    """Token -> vector map where words of one subject share a direction and
    each facet adds its own direction; filler and verdict-cue words sit elsewhere."""
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    directions = iter(basis.T)
    vectors = {}

    def put(word, v):
        if word not in vectors:
            vectors[word] = v + rng.normal(scale=0.15, size=dim)

    filler_dir, cue_dir, function_dir = next(directions), next(directions), next(directions)
    subject_dirs = {s: next(directions) for s in SUBJECTS}
    spare = list(directions)
    for si, (subject, profile) in enumerate(SUBJECTS.items()):
        for w in profile["core"]:
            put(w, subject_dirs[subject])
        for fi, (facet, words) in enumerate(profile["facets"].items()):
            facet_dir = spare[(3 * si + fi) % len(spare)]
            for w in words:
                put(w, 0.8 * subject_dirs[subject] + 0.6 * facet_dir)
        for verbs in CLAIM_VERBS.values():
            for w in verbs:
                put(w, 0.5 * function_dir)
    for w in FILLER + ["our", "rating", "process", "is", "explained", "on", "about", "page", "claim"]:
        put(w, filler_dir)
    # verdict cues sit on one axis with opposite signs, so frozen vectors still separate them
    for w in TRUE_CUES:
        put(w, cue_dir)
    for w in FALSE_CUES:
        put(w, -cue_dir)
    for w in FUNCTION:
        put(w, 0.3 * function_dir)
    return vectors


def write_glove(path, vectors):
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(vectors):
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in vectors[word]) + "\n")


def manifest_for(path):
    """Counts describing a JSON-lines corpus file, plus its SHA-256."""
    with open(path, "rb") as fh:
        blob = fh.read()
    claims = [json.loads(line) for line in blob.decode("utf-8").splitlines() if line.strip()]
    labels = {}
    for c in claims:
        labels[c["label"]] = labels.get(c["label"], 0) + 1
    return {
        "claims": len(claims),
        "documents": sum(len(c["documents"]) for c in claims),
        "sentences": sum(len(d["body"]) for c in claims for d in c["documents"]),
        "domains": len({d["source_domain"] for c in claims for d in c["documents"]}),
        "labels": dict(sorted(labels.items())),
        "with_description": sum(1 for c in claims if c.get("description")),
        "sha256": hashlib.sha256(blob).hexdigest(),
    }


def write_mini_corpus(directory, seed=20):
    """Write ``mini_corpus.jsonl``, ``mini_manifest.json`` and ``toy_embeddings.txt``."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus_path = directory / "mini_corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for obj in mini_corpus(seed):
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    manifest = manifest_for(corpus_path)
    (directory / "mini_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    write_glove(directory / "toy_embeddings.txt", toy_embeddings(seed=seed))
    return manifest
