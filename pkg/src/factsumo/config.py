"""Run configuration: a flat ``key = value`` file overridden by CLI flags.

Every key has a default below; unknown keys are rejected. Lines starting with
``#`` are comments. Empty values mean "unset" for optional keys.
"""

import typing
from dataclasses import dataclass, fields

from .classifier import ConfigError, ModelConfig
from .seeding import derive_seed


@dataclass
class RunConfig:
    # paths
    dataset: typing.Optional[str] = None
    train: typing.Optional[str] = None
    validation: typing.Optional[str] = None
    test: typing.Optional[str] = None
    embeddings: typing.Optional[str] = None
    output_dir: str = "out"
    checkpoint: typing.Optional[str] = None
    lda_model: typing.Optional[str] = None
    predictions: typing.Optional[str] = None
    summaries: typing.Optional[str] = None
    seed: int = 0
    # prepare
    split: str = "0.8,0.1,0.1"
    # model
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
    trainable_embeddings: typing.Optional[bool] = None
    # topic model
    lda_topics: int = 10
    lda_iterations: int = 500
    lda_alpha: typing.Optional[float] = None
    lda_beta: float = 0.01
    lda_unit: str = "sentence"
    # summarizer
    lambda_: float = 0.5
    coverage: str = "dominant"
    tau: float = 0.2
    top_n: int = 3
    baseline: str = "none"
    wwa: str = "mean"
    relevance: float = 0.5
    max_summary_sentences: typing.Optional[int] = None
    # evaluation
    gold_threshold: float = 0.4
    figures: bool = True

    CHOICES = {
        "fusion": ("average", "atop", "concat_baseline"),
        "aggregate": ("logits", "vectors"),
        "optimizer": ("adam", "sgd"),
        "clip_mode": ("global", "value"),
        "lda_unit": ("sentence", "document"),
        "coverage": ("dominant", "multi"),
        "baseline": ("none", "bm25"),
        "wwa": ("mean", "sum"),
    }

    def validate(self):
        for key, allowed in self.CHOICES.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"invalid {key} {getattr(self, key)!r}; valid: {', '.join(allowed)}")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lambda_}")
        if self.lda_topics < 2:
            raise ConfigError("lda_topics must be at least 2")
        if self.top_n < 1:
            raise ConfigError("top_n must be at least 1")
        self.model_config()
        return self

    def model_config(self):
        names = {f.name for f in fields(ModelConfig)} - {"seed"}
        values = {n: getattr(self, n) for n in names}
        return ModelConfig(seed=derive_seed(self.seed, "train"), **values).validate()

    def lda_seed(self):
        return derive_seed(self.seed, "lda")


def key_name(field_name):
    """Config-file key for a field (``lambda_`` is spelled ``lambda``)."""
    return field_name.rstrip("_")


def field_for_key(key):
    key = key.strip().replace("-", "_")
    names = {key_name(f.name): f.name for f in fields(RunConfig)}
    if key not in names:
        raise ConfigError(f"unknown config key {key!r}")
    return names[key]


def _base_type(tp):
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return args[0], True
    return tp, False


_FIELD_TYPES = {}


def _field_type(name):
    if not _FIELD_TYPES:
        _FIELD_TYPES.update(typing.get_type_hints(RunConfig))
    return _FIELD_TYPES[name]


def coerce(name, raw):
    tp, optional = _base_type(_field_type(name))
    if isinstance(raw, str):
        raw = raw.strip()
        if optional and raw.lower() in ("", "none", "null"):
            return None
    elif raw is None:
        if optional:
            return None
        raise ConfigError(f"{key_name(name)} may not be empty")
    try:
        if tp is bool:
            if isinstance(raw, bool):
                return raw
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return tp(raw)
    except ValueError:
        raise ConfigError(f"{key_name(name)}: cannot parse {raw!r} as {tp.__name__}") from None


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            name = field_for_key(key)
            values[name] = coerce(name, value)
    return values


def resolve(file_values=None, overrides=None):
    """Build a RunConfig; returns ``(config, explicitly_set_field_names)``."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items()})
    config = RunConfig(**merged)
    return config.validate(), set(merged)


def write_snapshot(path, config):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# resolved configuration snapshot\n")
        for f in fields(RunConfig):
            value = getattr(config, f.name)
            fh.write(f"{key_name(f.name)} = {'' if value is None else value}\n")
