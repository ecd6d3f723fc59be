from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "factsumo" / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

ACCEPTANCE_LINES = []


def numeric_grad(f, array, eps=1e-5):
    """Central finite differences of scalar ``f()`` with respect to ``array`` (mutated in place)."""
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = array[idx]
        array[idx] = orig + eps
        plus = f()
        array[idx] = orig - eps
        minus = f()
        array[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def rel_error(a, b, floor=1e-8):
    """Max elementwise |a - b| / max(|a|, |b|, floor)."""
    a, b = np.asarray(a), np.asarray(b)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def run_pipeline(workdir, seed=7):
    """Run the full CLI pipeline on the bundled mini-corpus under ``workdir``.

    Returns ``(paths, exit_codes)``; stops at the first non-zero exit.
    """
    from factsumo.cli import main

    w = Path(workdir)
    cfg = str(DATA_DIR / "mini.cfg")
    corpus = str(DATA_DIR / "mini_corpus.jsonl")
    emb = str(DATA_DIR / "toy_embeddings.txt")
    paths = {
        "split": w / "split", "model": w / "model", "pred": w / "pred", "lda": w / "lda",
        "summ": w / "summ", "rouge": w / "rouge", "cls": w / "cls",
    }
    steps = [
        ("prepare", ["--dataset", corpus, "--output-dir", str(paths["split"])]),
        ("train", ["--train", str(paths["split"] / "train.jsonl"),
                   "--validation", str(paths["split"] / "validation.jsonl"),
                   "--embeddings", emb, "--output-dir", str(paths["model"])]),
        ("predict", ["--checkpoint", str(paths["model"] / "model.ckpt"), "--dataset", corpus,
                     "--output-dir", str(paths["pred"])]),
        ("lda-fit", ["--dataset", corpus, "--output-dir", str(paths["lda"])]),
        ("summarize", ["--checkpoint", str(paths["model"] / "model.ckpt"), "--dataset", corpus,
                       "--lda-model", str(paths["lda"] / "lda.model"), "--output-dir", str(paths["summ"])]),
        ("evaluate-rouge", ["--summaries", str(paths["summ"] / "summaries.json"), "--dataset", corpus,
                            "--embeddings", emb, "--output-dir", str(paths["rouge"])]),
        ("evaluate-cls", ["--checkpoint", str(paths["model"] / "model.ckpt"),
                          "--dataset", str(paths["split"] / "test.jsonl"), "--output-dir", str(paths["cls"])]),
    ]
    codes = {}
    for command, args in steps:
        codes[command] = main([command, "--config", cfg, "--seed", str(seed), *args])
        if codes[command] != 0:
            break
    return paths, codes


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("pipeline"))
