"""``factsumo`` command-line entry point.

Exit codes: 0 success, 1 usage/configuration error, 2 data error.
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import classifier, rouge, summarizer, topics
from .checkpoint import CheckpointError
from .classifier import CompatibilityError, ConfigError, ModelConfig, SumoModel
from .config import RunConfig, coerce, key_name, read_config_file, resolve, write_snapshot
from .corpus import (EmbeddingFormatError, IngestionError, Vocabulary, load_dataset, load_embeddings,
                     read_glove, tokenize, write_dataset)

log = logging.getLogger("factsumo")

SUBCOMMANDS = ("prepare", "train", "predict", "lda-fit", "summarize", "evaluate-rouge",
               "evaluate-cls", "grid-lambda")

DATA_ERRORS = (IngestionError, EmbeddingFormatError, CompatibilityError, CheckpointError,
               topics.TopicModelError, rouge.RougeError, summarizer.SummaryError,
               FileNotFoundError, IsADirectoryError)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="factsumo", description="Claim verification and explanatory summaries.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        for f in fields(RunConfig):
            flag = "--" + key_name(f.name).replace("_", "-")
            kwargs = {"dest": f.name, "default": None, "metavar": "VALUE"}
            if f.name in RunConfig.CHOICES:
                kwargs["choices"] = RunConfig.CHOICES[f.name]
                kwargs.pop("metavar")
            p.add_argument(flag, **kwargs)
    return parser


def load_run_config(args):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {}
    for f in fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            overrides[f.name] = coerce(f.name, raw)
    return resolve(file_values, overrides)


def _need(config, name):
    value = getattr(config, name)
    if value is None:
        raise UsageError(f"--{key_name(name).replace('_', '-')} is required for this command")
    if name not in ("output_dir",) and not Path(value).exists():
        raise DataError(f"{key_name(name)}: no such file {value}")
    return value


def _out(config):
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


# subcommands


def cmd_prepare(config, explicit):
    instances = load_dataset(_need(config, "dataset"))
    try:
        fractions = [float(x) for x in config.split.split(",")]
    except ValueError:
        raise ConfigError(f"split must be three comma-separated fractions, got {config.split!r}") from None
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {config.split!r}")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(instances))
    n_train = int(round(fractions[0] * len(instances)))
    n_val = int(round(fractions[1] * len(instances)))
    parts = {
        "train": [instances[i] for i in order[:n_train]],
        "validation": [instances[i] for i in order[n_train: n_train + n_val]],
        "test": [instances[i] for i in order[n_train + n_val:]],
    }
    out = _out(config)
    for name, part in parts.items():
        write_dataset(out / f"{name}.jsonl", part)
    _dump_json(out / "split_manifest.json", {name: [i.claim_id for i in part] for name, part in parts.items()})
    print(" ".join(f"{name}={len(part)}" for name, part in parts.items()))


def _embeddings_for(config, vocab, model_cfg):
    if config.embeddings is None:
        return None
    trainable = bool(model_cfg.trainable_embeddings) if model_cfg.trainable_embeddings is not None else False
    table = load_embeddings(config.embeddings, vocab, model_cfg.embedding_size, model_cfg.seed, trainable)
    log.info("embedding coverage %.1f%% (%d tokens)", 100 * table.coverage, table.found)
    return table


def cmd_train(config, explicit):
    train_set = load_dataset(_need(config, "train"))
    val_set = load_dataset(_need(config, "validation"))
    model_cfg = config.model_config()
    vocab = Vocabulary.build(train_set)
    domains = sorted({d.source_domain for i in train_set for d in i.documents})
    model = SumoModel(model_cfg, vocab, _embeddings_for(config, vocab, model_cfg), domains)
    out = _out(config)

    def report(entry):
        log.info("epoch %d train %.5f val %.5f f1 %s", entry.epoch, entry.train_loss, entry.val_loss,
                 entry.val_macro_f1)

    result = classifier.train(model, train_set, val_set, on_epoch=report)
    model.save(out / "model.ckpt")
    with open(out / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "val_macro_f1"])
        for e in result.log:
            writer.writerow([e.epoch, repr(e.train_loss), repr(e.val_loss),
                             "" if e.val_macro_f1 is None else repr(e.val_macro_f1)])
    write_snapshot(out / "config_snapshot.cfg", config)
    print(f"best epoch {result.best_epoch} val_loss {result.best_val_loss:.6f}"
          f"{' (early stop)' if result.stopped_early else ''}")


def _load_model(config, explicit):
    model = SumoModel.load(_need(config, "checkpoint"))
    stored = model.config
    conflicts = [name for name in ModelConfig.ARCHITECTURE
                 if name in explicit and getattr(config, name) != getattr(stored, name)]
    if conflicts:
        raise CompatibilityError(
            "configuration does not match the checkpoint for: "
            + ", ".join(f"{n} ({getattr(config, n)} vs {getattr(stored, n)})" for n in conflicts))
    return model


def cmd_predict(config, explicit):
    model = _load_model(config, explicit)
    instances = load_dataset(_need(config, "dataset"))
    reports = model.predict(instances)
    out = _out(config)
    _dump_json(out / "predictions.json", reports)
    counts = {}
    for r in reports:
        counts[r["predicted_label"]] = counts.get(r["predicted_label"], 0) + 1
    print("predicted " + " ".join(f"{k}={v}" for k, v in sorted(counts.items())))


def _lda_units(instances, unit):
    if unit == "sentence":
        return [toks for i in instances for d in i.documents for toks in d.body_tokens]
    return [[t for toks in d.body_tokens for t in toks] for i in instances for d in i.documents]


def cmd_lda_fit(config, explicit):
    instances = load_dataset(_need(config, "dataset"))
    units = _lda_units(instances, config.lda_unit)
    model = topics.fit(units, config.lda_topics, config.lda_iterations, config.lda_seed(),
                       alpha=config.lda_alpha, beta=config.lda_beta)
    out = _out(config)
    model.save(out / "lda.model")
    print(f"lda: {model.n_topics} topics over {len(units)} {config.lda_unit}s, vocab {len(model.vocab)}")


def _load_lda(config):
    if config.lda_model is None or not Path(config.lda_model).exists():
        raise DataError(f"no LDA model at {config.lda_model!r}; run `factsumo lda-fit` first "
                        "and pass its lda.model via --lda-model")
    return topics.LdaModel.load(config.lda_model)


def _summaries(config, model, lda, instances, lam, reports=None):
    reports = reports if reports is not None else model.predict(instances)
    by_id = {i.claim_id: i for i in instances}
    results = []
    for report in reports:
        inst = by_id[report["claim_id"]]
        result = summarizer.summarize_claim(report, inst, lda, lam, config.coverage, config.tau,
                                            config.wwa, config.relevance, config.max_summary_sentences)
        baseline = summarizer.bm25_for_claim(inst, config.top_n) if config.baseline == "bm25" else None
        results.append(summarizer.result_to_json(inst.claim_id, result, baseline))
    return results


def cmd_summarize(config, explicit):
    lda = _load_lda(config)
    model = _load_model(config, explicit)
    instances = load_dataset(_need(config, "dataset"))
    results = _summaries(config, model, lda, instances, config.lambda_)
    out = _out(config)
    _dump_json(out / "summaries.json", results)
    with open(out / "summaries.txt", "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(f"## {r['claim_id']}\n{r['text']}\n")
            if "bm25_text" in r:
                fh.write(f"-- bm25\n{r['bm25_text']}\n")
            fh.write("\n")
    uncovered = [r["claim_id"] for r in results if not r["covers_all_topics"]]
    print(f"summarized {len(results)} claims; full topic coverage for {len(results) - len(uncovered)}")


def plain_text(entries):
    return " ".join(e["text"] for e in sorted(entries, key=lambda e: (e["doc_index"], e["sentence_index"])))


def gold_references(instances, vectors, threshold):
    gold = {}
    for inst in instances:
        try:
            text = rouge.build_gold_summary(inst.claim_text, inst.description, vectors, threshold)
        except rouge.GoldUnavailableError:
            log.warning("claim %s has no description; excluded from ROUGE", inst.claim_id)
            continue
        if not text:
            log.warning("claim %s: no description sentence passed the similarity filter; excluded", inst.claim_id)
            continue
        if len(tokenize(text)) < 2:
            log.warning("claim %s: gold summary is shorter than one bigram; excluded", inst.claim_id)
            continue
        gold[inst.claim_id] = text
    return gold


def system_texts(summaries):
    texts = {"sumo": {s["claim_id"]: plain_text(s["sentences"]) for s in summaries}}
    if summaries and all("bm25" in s for s in summaries):
        texts["bm25"] = {s["claim_id"]: plain_text(s["bm25"]) for s in summaries}
    return texts


def write_rouge_csv(path, per_claim, corpus):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["claim_id", "metric", "p", "r", "f1"])
        for cid, scores in per_claim.items():
            for m in rouge.METRICS:
                s = scores[m]
                writer.writerow([cid, m, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}"])
        for m in rouge.METRICS:
            s = corpus[m]
            writer.writerow(["__corpus__", m, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}"])


def cmd_evaluate_rouge(config, explicit):
    with open(_need(config, "summaries"), encoding="utf-8") as fh:
        summaries = json.load(fh)
    instances = load_dataset(_need(config, "dataset"))
    vectors = read_glove(_need(config, "embeddings"))
    gold = gold_references(instances, vectors, config.gold_threshold)
    out = _out(config)
    corpus_by_system = {}
    report = {}
    for system, texts in system_texts(summaries).items():
        texts = {cid: t for cid, t in texts.items() if cid in gold}
        per_claim, corpus = rouge.evaluate_summaries(texts, {cid: gold[cid] for cid in texts})
        write_rouge_csv(out / f"rouge_{system}.csv", per_claim, corpus)
        corpus_by_system[system] = corpus
        report[system] = {m: {"p": round(s.precision, 6), "r": round(s.recall, 6), "f1": round(s.f1, 6)}
                          for m, s in corpus.items()}
        print(system + " " + " ".join(f"{m}_f1={s.f1:.4f}" for m, s in corpus.items()))
    _dump_json(out / "rouge_report.json", report)
    if config.figures:
        from .plotting import plot_rouge
        plot_rouge(corpus_by_system, out / "rouge.png")


def cmd_evaluate_cls(config, explicit):
    if config.predictions:
        with open(_need(config, "predictions"), encoding="utf-8") as fh:
            reports = json.load(fh)
    elif config.checkpoint and config.dataset:
        reports = _load_model(config, explicit).predict(load_dataset(_need(config, "dataset")))
    else:
        raise UsageError("nothing to evaluate: pass --predictions, or --checkpoint with --dataset")
    gold_map = {}
    if config.dataset:
        gold_map = {i.claim_id: i.label for i in load_dataset(_need(config, "dataset"))}
    gold, pred = [], []
    for r in reports:
        label = gold_map.get(r["claim_id"], r.get("gold_label"))
        if label is None:
            continue
        gold.append(label)
        pred.append(r["predicted_label"])
    if not gold:
        raise DataError("nothing to evaluate: no gold labels for the predictions")
    metrics = classifier.classification_metrics(gold, pred)
    out = _out(config)
    with open(out / "classification.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "accuracy", "f1"])
        for name in metrics["accuracy"]:
            acc, f1 = metrics["accuracy"][name], metrics["f1"][name]
            writer.writerow([name, "" if acc is None else f"{acc:.6f}", "" if f1 is None else f"{f1:.6f}"])
        macro = metrics["macro_f1"]
        writer.writerow(["macro", "", "" if macro is None else f"{macro:.6f}"])
    if config.figures:
        from .plotting import plot_classification, plot_training_curve
        plot_classification(metrics, out / "classification.png")
        if config.checkpoint:
            log_path = Path(config.checkpoint).with_name("training_log.csv")
            if log_path.exists():
                with open(log_path, encoding="utf-8") as fh:
                    rows = [{k: float(v) if v else 0.0 for k, v in row.items()} for row in csv.DictReader(fh)]
                plot_training_curve(rows, out / "training_curve.png")
    print(" ".join(f"{k}_accuracy={v if v is None else round(v, 4)}" for k, v in metrics["accuracy"].items())
          + f" macro_f1={metrics['macro_f1'] if metrics['macro_f1'] is None else round(metrics['macro_f1'], 4)}")


def cmd_grid_lambda(config, explicit):
    lda = _load_lda(config)
    model = _load_model(config, explicit)
    instances = load_dataset(_need(config, "dataset"))
    vectors = read_glove(_need(config, "embeddings"))
    gold = gold_references(instances, vectors, config.gold_threshold)
    reports = model.predict(instances)
    rows = []
    for lam in [round(0.1 * i, 1) for i in range(1, 10)]:
        summaries = _summaries(config, model, lda, instances, lam, reports)
        texts = {s["claim_id"]: plain_text(s["sentences"]) for s in summaries if s["claim_id"] in gold}
        _, corpus = rouge.evaluate_summaries(texts, {cid: gold[cid] for cid in texts})
        rows.append({"lambda": lam, **{m: corpus[m].f1 for m in rouge.METRICS}})
    out = _out(config)
    with open(out / "grid_lambda.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", *rouge.METRICS])
        for r in rows:
            writer.writerow([r["lambda"], *(f"{r[m]:.6f}" for m in rouge.METRICS)])
    if config.figures:
        from .plotting import plot_grid
        plot_grid(rows, out / "grid_lambda.png")
    best = max(rows, key=lambda r: (r["rougeL"], -r["lambda"]))
    print(f"best lambda {best['lambda']} rougeL_f1={best['rougeL']:.4f}")


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "predict": cmd_predict,
    "lda-fit": cmd_lda_fit,
    "summarize": cmd_summarize,
    "evaluate-rouge": cmd_evaluate_rouge,
    "evaluate-cls": cmd_evaluate_cls,
    "grid-lambda": cmd_grid_lambda,
}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    try:
        config, explicit = load_run_config(args)
        COMMANDS[args.command](config, explicit)
    except (UsageError, ConfigError) as exc:
        print(f"factsumo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, *DATA_ERRORS) as exc:
        print(f"factsumo {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
