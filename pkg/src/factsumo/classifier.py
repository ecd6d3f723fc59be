"""Claim-correctness model: hierarchical encoder + attention + softmax head.

Every evidence document of a claim is encoded with shared weights into a
document vector; per-document logits are averaged into the claim's logits
(or, with ``aggregate="vectors"``, document vectors are averaged first).
"""

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import tensor as T
from .attention import FUSION_MODES, AttentionLevel, pool
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import LABELS, PAD_ID, Vocabulary, pad_and_index, pad_sequence, random_embeddings
from .encoder import BiGru, encode_document, glorot
from .optim import OptimizerState, clip_and_step
from .seeding import derive_seed

log = logging.getLogger(__name__)

UNK_DOMAIN = "<unk-domain>"


class ConfigError(ValueError):
    pass


class CompatibilityError(ValueError):
    pass


@dataclass
class ModelConfig:
    hidden_size: int = 200
    embedding_size: int = 200
    learning_rate: float = 0.001
    batch_size: int = 64
    clip_norm: float = 5.0
    clip_mode: str = "global"
    optimizer: str = "adam"
    max_epochs: int = 50
    patience: int = 5
    min_delta: float = 1e-5
    max_sentences: int = 35
    max_words: int = 45
    fusion: str = "atop"
    word_bidirectional: bool = True
    self_attention_context: bool = False
    aggregate: str = "logits"
    use_source_embeddings: bool = False
    source_dim: int = 100
    trainable_embeddings: Optional[bool] = None
    seed: int = 0

    def validate(self):
        for name in ("hidden_size", "embedding_size", "batch_size", "max_epochs", "patience",
                     "max_sentences", "max_words", "source_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("learning_rate", "clip_norm"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.fusion not in FUSION_MODES:
            raise ConfigError(f"invalid fusion mode {self.fusion!r}; valid modes: {', '.join(FUSION_MODES)}")
        if self.aggregate not in ("logits", "vectors"):
            raise ConfigError(f"invalid aggregate {self.aggregate!r}; expected 'logits' or 'vectors'")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"invalid optimizer {self.optimizer!r}; expected 'adam' or 'sgd'")
        if self.clip_mode not in ("global", "value"):
            raise ConfigError(f"invalid clip_mode {self.clip_mode!r}; expected 'global' or 'value'")
        return self

    # fields that change parameter shapes or the forward computation
    ARCHITECTURE = ("hidden_size", "embedding_size", "max_sentences", "max_words", "fusion",
                    "word_bidirectional", "self_attention_context", "aggregate",
                    "use_source_embeddings", "source_dim")

    def architecture_hash(self):
        arch = {name: getattr(self, name) for name in self.ARCHITECTURE}
        return hashlib.sha256(json.dumps(arch, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**values)


@dataclass
class CachedInstance:
    claim_id: str
    label: Optional[int]
    grids: list
    masks: list
    n_sentences: list
    claim_ids: np.ndarray
    title_ids: list
    domain_ids: list


@dataclass
class Batch:
    claim_ids: list
    labels: Optional[np.ndarray]
    ids: np.ndarray          # D x k x l word indices
    mask: np.ndarray         # D x k x l
    claim_tokens: np.ndarray  # D x lc
    title_tokens: np.ndarray  # D x lt
    domains: np.ndarray      # D
    doc_owner: np.ndarray    # D, index of the owning claim
    n_claims: int

    def averaging_matrix(self):
        A = np.zeros((self.n_claims, len(self.doc_owner)))
        A[self.doc_owner, np.arange(len(self.doc_owner))] = 1.0
        return A / A.sum(axis=1, keepdims=True)


@dataclass
class ForwardOutput:
    logits: T.Tensor
    doc_vectors: T.Tensor
    word_weights: T.Tensor
    word_extras: dict
    sentence_weights: T.Tensor
    sentence_extras: dict
    batch: Batch = field(repr=False, default=None)


def _pad_rows(rows, min_len=1):
    width = max([min_len] + [len(r) for r in rows])
    out = np.zeros((len(rows), width), dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


class SumoModel:
    def __init__(self, config, vocab, embeddings=None, domains=()):
        self.config = config.validate()
        cfg = config
        self.vocab = vocab
        rng = np.random.default_rng(derive_seed(cfg.seed, "init"))
        if embeddings is None:
            embeddings = random_embeddings(vocab, cfg.embedding_size, derive_seed(cfg.seed, "embeddings"))
        if embeddings.dim != cfg.embedding_size:
            raise ConfigError(f"embedding table has width {embeddings.dim}, config says {cfg.embedding_size}")
        trainable = embeddings.trainable if cfg.trainable_embeddings is None else cfg.trainable_embeddings
        self.embeddings = T.Tensor(embeddings.matrix.copy(), requires_grad=trainable, name="embeddings")
        E, H = cfg.embedding_size, cfg.hidden_size
        self.word_gru = BiGru(E, H, rng, "word_gru", cfg.word_bidirectional)
        self.sentence_gru = BiGru(self.word_gru.output_size, H, rng, "sentence_gru", True)
        self.word_attention = AttentionLevel(self.word_gru.output_size, E, cfg.max_words, cfg.fusion, rng,
                                             "word_attention", position_size=E,
                                             self_context=cfg.self_attention_context)
        self.sentence_attention = AttentionLevel(2 * H, E, cfg.max_sentences, cfg.fusion, rng,
                                                 "sentence_attention", self_context=cfg.self_attention_context)
        self.domains = [UNK_DOMAIN] + [d for d in domains if d != UNK_DOMAIN]
        self.domain_index = {d: i for i, d in enumerate(self.domains)}
        doc_dim = 2 * H
        self.source_table = None
        if cfg.use_source_embeddings:
            self.source_table = T.parameter(rng.uniform(-0.05, 0.05, (len(self.domains), cfg.source_dim)),
                                            "source_embeddings")
            doc_dim += cfg.source_dim
        self.W_cl = T.parameter(glorot(rng, doc_dim, len(LABELS)), "classifier.W")
        self.b_cl = T.parameter(np.zeros(len(LABELS)), "classifier.b")

    # parameters

    def named_tensors(self):
        named = {"embeddings": self.embeddings}
        for module in (self.word_gru, self.sentence_gru):
            for p in module.parameters():
                named[p.name] = p
        for level in (self.word_attention, self.sentence_attention):
            for p in level.parameters():
                named[p.name] = p
        if self.source_table is not None:
            named["source_embeddings"] = self.source_table
        named["classifier.W"] = self.W_cl
        named["classifier.b"] = self.b_cl
        return named

    def trainable_parameters(self):
        return [p for p in self.named_tensors().values() if p.requires_grad]

    def state_arrays(self):
        return {name: t.data.copy() for name, t in self.named_tensors().items()}

    def load_arrays(self, arrays):
        named = self.named_tensors()
        missing = set(named) - set(arrays)
        if missing:
            raise CompatibilityError(f"checkpoint lacks tensors: {', '.join(sorted(missing))}")
        for name, t in named.items():
            if arrays[name].shape != t.data.shape:
                raise CompatibilityError(f"tensor {name} has shape {arrays[name].shape}, model expects {t.data.shape}")
            t.data[...] = arrays[name]

    def save(self, path):
        meta = {
            "config": asdict(self.config),
            "architecture_hash": self.config.architecture_hash(),
            "vocab": self.vocab.itos,
            "domains": self.domains,
            "embeddings_trainable": bool(self.embeddings.requires_grad),
        }
        save_checkpoint(path, self.state_arrays(), meta)

    @classmethod
    def load(cls, path):
        arrays, meta = load_checkpoint(path)
        config = ModelConfig.from_dict(meta["config"])
        if config.architecture_hash() != meta.get("architecture_hash"):
            raise CompatibilityError(f"{path}: stored config does not match its architecture hash")
        vocab = Vocabulary(meta["vocab"][2:])
        config.trainable_embeddings = meta.get("embeddings_trainable", config.trainable_embeddings)
        model = cls(config, vocab, domains=meta["domains"])
        model.load_arrays(arrays)
        return model

    # batching

    def cache_instance(self, inst):
        cfg = self.config
        if not inst.documents:
            raise ValueError(f"claim {inst.claim_id} has no documents")
        grids, masks, counts, titles, domains = [], [], [], [], []
        for doc in inst.documents:
            g = pad_and_index(doc, self.vocab, cfg.max_sentences, cfg.max_words)
            grids.append(g.ids)
            masks.append(g.mask)
            counts.append(g.n_sentences)
            titles.append(self.vocab.indices(doc.title_tokens[: cfg.max_words]))
            domains.append(self.domain_index.get(doc.source_domain, 0))
        claim = np.array(self.vocab.indices(inst.claim_tokens[: cfg.max_words]), dtype=np.int64)
        label = inst.label_index if inst.label is not None else None
        return CachedInstance(inst.claim_id, label, grids, masks, counts, claim, titles, domains)

    def make_batch(self, cached):
        grids = [g for c in cached for g in c.grids]
        masks = np.stack([m for c in cached for m in c.masks])
        k = max(1, max(n for c in cached for n in c.n_sentences))
        l = max(1, int(masks.sum(axis=-1).max()))
        ids = np.stack(grids)[:, :k, :l]
        owner = np.concatenate([[i] * len(c.grids) for i, c in enumerate(cached)]).astype(np.int64)
        labels = None
        if all(c.label is not None for c in cached):
            labels = np.array([c.label for c in cached], dtype=np.int64)
        return Batch(
            claim_ids=[c.claim_id for c in cached],
            labels=labels,
            ids=ids,
            mask=masks[:, :k, :l],
            claim_tokens=_pad_rows([c.claim_ids for c in cached for _ in c.grids]),
            title_tokens=_pad_rows([t for c in cached for t in c.title_ids]),
            domains=np.array([d for c in cached for d in c.domain_ids], dtype=np.int64),
            doc_owner=owner,
            n_claims=len(cached),
        )

    # forward

    def forward(self, batch):
        D, k, l = batch.ids.shape
        emb = self.embeddings
        claim_guide = T.tsum(T.embedding(emb, batch.claim_tokens, PAD_ID), axis=1)
        title_guide = T.tsum(T.embedding(emb, batch.title_tokens, PAD_ID), axis=1)

        def word_attention(hidden, mask, word_emb):
            weights, extras = self.word_attention(
                hidden.reshape(D, k, l, -1), mask.reshape(D, k, l),
                claim_guide.reshape(D, 1, -1), title_guide.reshape(D, 1, -1),
                word_emb.reshape(D, k, l, -1))
            return weights.reshape(D * k, l), extras

        enc = encode_document(batch.ids, batch.mask, emb, self.word_gru, self.sentence_gru, word_attention)
        s_weights, s_extras = self.sentence_attention(
            enc.sentence_hidden, enc.sentence_mask, claim_guide, title_guide)
        doc = pool(enc.sentence_hidden, s_weights)
        if self.source_table is not None:
            doc = T.concat([doc, T.embedding(self.source_table, batch.domains)], axis=-1)
        A = batch.averaging_matrix()
        if self.config.aggregate == "logits":
            logits = A @ (doc @ self.W_cl + self.b_cl)
        else:
            logits = (A @ doc) @ self.W_cl + self.b_cl
        return ForwardOutput(logits, doc, enc.word_weights, enc.word_extras or {}, s_weights, s_extras, batch)

    def loss(self, batch):
        return T.cross_entropy_with_logits(self.forward(batch).logits, batch.labels)

    def _batches(self, cached, batch_size=None):
        size = batch_size or self.config.batch_size
        for start in range(0, len(cached), size):
            yield self.make_batch(cached[start: start + size])

    def evaluate_loss(self, cached):
        """Mean cross-entropy and predicted class indices over cached instances."""
        total, preds = 0.0, []
        with T.no_grad():
            for batch in self._batches(cached):
                logits = self.forward(batch).logits
                total += float(T.cross_entropy_with_logits(logits, batch.labels).data) * batch.n_claims
                preds.extend(np.argmax(logits.data, axis=1).tolist())
        return total / len(cached), preds

    def predict(self, instances, batch_size=None):
        cached = [self.cache_instance(i) for i in instances]
        reports = []
        with T.no_grad():
            for batch in self._batches(cached, batch_size):
                reports.extend(build_reports(self.forward(batch), instances_by_id(instances)))
        return reports


def instances_by_id(instances):
    return {i.claim_id: i for i in instances}


def _probabilities(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _r(x, digits=8):
    return [round(float(v), digits) for v in np.asarray(x).ravel()]


def build_reports(out, lookup):
    """Per-claim JSON-ready prediction reports with attention exports."""
    batch = out.batch
    probs = _probabilities(out.logits.data)
    reports = []
    doc_cursor = 0
    for ci, claim_id in enumerate(batch.claim_ids):
        inst = lookup[claim_id]
        docs = []
        for di, doc in enumerate(inst.documents):
            row = doc_cursor + di
            n_sent = int(batch.mask[row].sum(axis=-1).astype(bool).sum())
            sentences = []
            for si in range(n_sent):
                n_tok = int(batch.mask[row, si].sum())
                entry = {
                    "index": si,
                    "weight": round(float(out.sentence_weights.data[row, si]), 8),
                    "word_weights": _r(out.word_weights.data[row, si, :n_tok]),
                }
                if "beta" in out.word_extras:
                    entry["word_beta"] = _r(out.word_extras["beta"].data[row, si])
                sentences.append(entry)
            doc_entry = {
                "doc_index": di,
                "source_domain": doc.source_domain,
                "doc_vector": _r(out.doc_vectors.data[row]),
                "sentences": sentences,
            }
            for kind in ("claim", "title", "self"):
                if kind in out.sentence_extras:
                    doc_entry[f"sentence_{kind}_weights"] = _r(out.sentence_extras[kind].data[row, :n_sent])
            if "beta" in out.sentence_extras:
                doc_entry["sentence_beta"] = _r(out.sentence_extras["beta"].data[row])
            docs.append(doc_entry)
        doc_cursor += len(inst.documents)
        p = probs[ci]
        reports.append({
            "claim_id": claim_id,
            "predicted_label": LABELS[int(np.argmax(p))],
            "gold_label": inst.label,
            "probabilities": {LABELS[j]: round(float(p[j]), 10) for j in range(len(LABELS))},
            "documents": docs,
        })
    return reports


# training


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    val_macro_f1: Optional[float]


@dataclass
class TrainingResult:
    log: list
    best_epoch: int
    best_val_loss: float
    stopped_early: bool


def train(model, train_set, val_set, on_epoch=None):
    """Mini-batch training with clipping and early stopping on validation loss.

    The parameters with the best validation loss are restored at the end.
    """
    cfg = model.config
    if not train_set:
        raise ValueError("training split is empty")
    if not val_set:
        raise ValueError("validation split is empty")
    train_ids = {i.claim_id for i in train_set}
    overlap = train_ids & {i.claim_id for i in val_set}
    if overlap:
        raise ValueError(f"train and validation splits share claims: {', '.join(sorted(overlap)[:5])}")
    rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle"))
    state = OptimizerState(cfg.learning_rate, cfg.clip_norm, cfg.clip_mode, cfg.optimizer)
    params = model.trainable_parameters()
    train_cache = [model.cache_instance(i) for i in train_set]
    val_cache = [model.cache_instance(i) for i in val_set]
    val_gold = [c.label for c in val_cache]

    history = []
    best_loss, best_epoch, best_state = math.inf, 0, model.state_arrays()
    stale = 0
    stopped = False
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_cache))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            chunk = [train_cache[i] for i in order[start: start + cfg.batch_size]]
            batch = model.make_batch(chunk)
            for p in params:
                p.grad = None
            loss = model.loss(batch)
            loss.backward()
            clip_and_step(params, [p.grad for p in params], state)
            total += float(loss.data) * len(chunk)
        val_loss, preds = model.evaluate_loss(val_cache)
        metrics = classification_metrics(val_gold, preds, warn=False)
        entry = EpochLog(epoch, total / len(train_cache), val_loss, metrics["macro_f1"])
        history.append(entry)
        if on_epoch is not None:
            on_epoch(entry)
        if val_loss <= best_loss - cfg.min_delta:
            best_loss, best_epoch, best_state = val_loss, epoch, model.state_arrays()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                stopped = True
                break
    model.load_arrays(best_state)
    return TrainingResult(history, best_epoch, best_loss, stopped)


def training_accuracy(model, instances):
    cached = [model.cache_instance(i) for i in instances]
    _, preds = model.evaluate_loss(cached)
    return float(np.mean([p == c.label for p, c in zip(preds, cached)]))


# metrics


def classification_metrics(gold, predicted, classes=LABELS, warn=True):
    """Per-class accuracy (recall), per-class F1 and macro F1.

    ``gold`` and ``predicted`` hold class indices or label strings. A class
    absent from ``gold`` gets ``None`` metrics and is left out of the macro mean.
    """
    def as_index(y):
        return classes.index(y) if isinstance(y, str) else int(y)

    gold = [as_index(y) for y in gold]
    predicted = [as_index(y) for y in predicted]
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted labels differ in length")
    n = len(classes)
    confusion = np.zeros((n, n), dtype=np.int64)
    for g, p in zip(gold, predicted):
        confusion[g, p] += 1
    accuracy, f1 = {}, {}
    for c, name in enumerate(classes):
        support = confusion[c].sum()
        tp = confusion[c, c]
        if support == 0:
            if warn:
                log.warning("class %r absent from the evaluation data; its metrics are undefined", name)
            accuracy[name] = None
            f1[name] = None
            continue
        recall = tp / support
        predicted_c = confusion[:, c].sum()
        precision = tp / predicted_c if predicted_c else 0.0
        accuracy[name] = float(recall)
        f1[name] = float(2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    defined = [v for v in f1.values() if v is not None]
    return {
        "accuracy": accuracy,
        "f1": f1,
        "macro_f1": float(np.mean(defined)) if defined else None,
        "confusion": confusion.tolist(),
        "n": len(gold),
    }


def evaluate(instances, model):
    """Predict ``instances`` with ``model`` and score against their gold labels."""
    reports = model.predict(instances)
    gold = [i.label for i in instances]
    lookup = {r["claim_id"]: r["predicted_label"] for r in reports}
    return classification_metrics(gold, [lookup[i.claim_id] for i in instances])
