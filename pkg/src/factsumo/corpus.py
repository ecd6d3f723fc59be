"""Dataset ingestion, tokenization, vocabulary and embedding tables."""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1

LABELS = ("false", "true")
# PolitiFact-style six-way ratings collapse onto the binary scheme
LABEL_ALIASES = {
    "true": "true",
    "mostly true": "true",
    "mostly-true": "true",
    "half true": "true",
    "half-true": "true",
    "false": "false",
    "mostly false": "false",
    "mostly-false": "false",
    "pants on fire": "false",
    "pants-on-fire": "false",
    "pants-fire": "false",
}

_TOKEN_RE = re.compile(r"[^\W_]+")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


class IngestionError(ValueError):
    pass


class EmbeddingFormatError(ValueError):
    pass


def tokenize(text):
    """Lowercase and split on non-alphanumeric boundaries (Unicode aware)."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text):
    """Split on ``.``, ``!`` or ``?`` followed by whitespace; token-less pieces are dropped."""
    pieces = _SENTENCE_RE.split(text.strip())
    return [p.strip() for p in pieces if tokenize(p)]


@dataclass(frozen=True)
class EvidenceDocument:
    title: str
    sentences: tuple
    source_domain: str = ""

    @property
    def title_tokens(self):
        return tokenize(self.title)

    @property
    def body_tokens(self):
        return [tokenize(s) for s in self.sentences]

    def to_json(self):
        return {"title": self.title, "body": list(self.sentences), "source_domain": self.source_domain}


@dataclass(frozen=True)
class ClaimInstance:
    claim_id: str
    claim_text: str
    label: str
    documents: tuple
    description: Optional[str] = None

    @property
    def label_index(self):
        return LABELS.index(self.label)

    @property
    def claim_tokens(self):
        return tokenize(self.claim_text)

    def to_json(self):
        out = {
            "claim_id": self.claim_id,
            "claim_text": self.claim_text,
            "label": self.label,
            "documents": [d.to_json() for d in self.documents],
        }
        if self.description is not None:
            out["description"] = self.description
        return out


def normalize_label(raw):
    key = str(raw).strip().lower().replace("_", " ")
    if key in LABEL_ALIASES:
        return LABEL_ALIASES[key]
    key = key.replace(" ", "-")
    if key in LABEL_ALIASES:
        return LABEL_ALIASES[key]
    raise KeyError(raw)


def _require(obj, key, lineno, where="claim"):
    if key not in obj:
        raise IngestionError(f"line {lineno}: missing required field '{key}' in {where}")
    return obj[key]


def parse_instance(obj, lineno=0):
    if not isinstance(obj, dict):
        raise IngestionError(f"line {lineno}: expected a JSON object")
    claim_id = str(_require(obj, "claim_id", lineno))
    claim_text = _require(obj, "claim_text", lineno)
    raw_label = _require(obj, "label", lineno)
    try:
        label = normalize_label(raw_label)
    except KeyError:
        raise IngestionError(f"line {lineno}: field 'label' has unknown value {raw_label!r}") from None
    docs_raw = _require(obj, "documents", lineno)
    if not isinstance(docs_raw, list) or not docs_raw:
        raise IngestionError(f"line {lineno}: field 'documents' must be a non-empty list")
    documents = []
    for i, d in enumerate(docs_raw):
        where = f"documents[{i}]"
        if not isinstance(d, dict):
            raise IngestionError(f"line {lineno}: {where} must be an object")
        title = _require(d, "title", lineno, where)
        body = _require(d, "body", lineno, where)
        domain = _require(d, "source_domain", lineno, where)
        sentences = split_sentences(body) if isinstance(body, str) else [s for s in map(str, body) if tokenize(s)]
        if not sentences:
            raise IngestionError(f"line {lineno}: {where} has an empty body")
        documents.append(EvidenceDocument(str(title), tuple(sentences), str(domain)))
    description = obj.get("description")
    return ClaimInstance(claim_id, str(claim_text), label, tuple(documents),
                         None if description is None else str(description))


def load_dataset(path):
    """Read a JSON-lines dataset; errors name the offending line."""
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            instances.append(parse_instance(obj, lineno))
    return instances


def write_dataset(path, instances):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


class Vocabulary:
    def __init__(self, tokens=()):
        self.itos = [PAD, UNK]
        self.stoi = {PAD: PAD_ID, UNK: UNK_ID}
        for t in tokens:
            self.add(t)

    def add(self, token):
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def index(self, token):
        return self.stoi.get(token, UNK_ID)

    def indices(self, tokens):
        return [self.index(t) for t in tokens]

    @classmethod
    def build(cls, instances, min_count=1):
        """Vocabulary over claims, titles and bodies in first-seen order."""
        counts = {}
        for inst in instances:
            streams = [inst.claim_tokens]
            for d in inst.documents:
                streams.append(d.title_tokens)
                streams.extend(d.body_tokens)
            for toks in streams:
                for t in toks:
                    counts[t] = counts.get(t, 0) + 1
        return cls(t for t, c in counts.items() if c >= min_count)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray
    trainable: bool = False
    coverage: float = 0.0
    found: int = 0

    @property
    def dim(self):
        return self.matrix.shape[1]


def random_embeddings(vocab, dim, seed=0, scale=0.05):
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-scale, scale, size=(len(vocab), dim))
    matrix[PAD_ID] = 0.0
    return EmbeddingTable(matrix, trainable=True)


def read_glove(path, dim=None):
    """Parse a GloVe text file into ``{token: vector}``; every line must carry ``dim`` floats."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if not parts or not parts[0]:
                continue
            values = parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}: line {lineno} has {len(values)} values, expected {dim}")
            try:
                vectors[parts[0]] = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}: line {lineno} has a non-numeric value") from None
    return vectors


def load_embeddings(path, vocab, dim=200, seed=0, trainable=False):
    """Vocabulary-aligned table from a GloVe file; OOV rows get seeded U(-0.05, 0.05)."""
    vectors = read_glove(path, dim)
    table = random_embeddings(vocab, dim, seed)
    found = 0
    for token, idx in vocab.stoi.items():
        if idx == PAD_ID:
            continue
        vec = vectors.get(token)
        if vec is not None:
            table.matrix[idx] = vec
            found += 1
    real = len(vocab) - 2
    table.found = found
    table.coverage = found / real if real else 0.0
    table.trainable = trainable
    if found == 0:
        log.warning("no vocabulary token found in %s; embeddings are all random", path)
    return table


@dataclass
class PaddedGrid:
    ids: np.ndarray
    mask: np.ndarray
    n_sentences: int = field(default=0)


def pad_sequence(tokens, vocab, length):
    ids = np.zeros(length, dtype=np.int64)
    mask = np.zeros(length, dtype=np.float64)
    idx = vocab.indices(tokens[:length])
    ids[: len(idx)] = idx
    mask[: len(idx)] = 1.0
    return ids, mask


def pad_and_index(doc, vocab, k=35, l=45):
    """Index a document body into a ``k x l`` grid plus a 0/1 mask of real tokens.

    ``doc`` may be an EvidenceDocument or a list of token lists; PAD tokens
    already present are treated as padding, so re-padding is a no-op.
    """
    sentences = doc.body_tokens if isinstance(doc, EvidenceDocument) else doc
    ids = np.zeros((k, l), dtype=np.int64)
    mask = np.zeros((k, l), dtype=np.float64)
    row = 0
    for toks in sentences:
        toks = [t for t in toks if t != PAD]
        if not toks:
            continue
        if row == k:
            break
        ids[row], mask[row] = pad_sequence(toks, vocab, l)
        row += 1
    return PaddedGrid(ids, mask, row)
