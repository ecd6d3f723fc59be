"""Report figures written next to the CSV outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_training_curve(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        epochs = [r["epoch"] for r in rows]
        ax.plot(epochs, [r["train_loss"] for r in rows], label="train loss")
        ax.plot(epochs, [r["val_loss"] for r in rows], label="validation loss")
        ax.set_xlabel("epoch")
        ax.set_ylabel("cross-entropy")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_classification(metrics, path):
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
        names = list(metrics["accuracy"])
        acc = [metrics["accuracy"][n] or 0.0 for n in names]
        f1 = [metrics["f1"][n] or 0.0 for n in names]
        xs = range(len(names))
        ax1.bar([x - 0.2 for x in xs], acc, width=0.4, label="accuracy")
        ax1.bar([x + 0.2 for x in xs], f1, width=0.4, label="F1")
        ax1.set_xticks(list(xs), names)
        ax1.set_ylim(0, 1)
        macro = metrics["macro_f1"]
        ax1.set_title(f"macro F1 = {macro:.3f}" if macro is not None else "macro F1 undefined")
        ax1.legend(frameon=False)
        ax2.imshow(metrics["confusion"], cmap="Blues")
        for i, row in enumerate(metrics["confusion"]):
            for j, v in enumerate(row):
                ax2.text(j, i, str(v), ha="center", va="center")
        ax2.set_xticks(list(xs), names)
        ax2.set_yticks(list(xs), names)
        ax2.set_xlabel("predicted")
        ax2.set_ylabel("gold")
        ax2.grid(False)
        return _save(fig, path)


def plot_rouge(corpus_by_system, path):
    """Grouped bars of corpus ROUGE F1 per metric, one group per system."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        systems = list(corpus_by_system)
        metrics = ["rouge1", "rouge2", "rougeL"]
        width = 0.8 / max(len(systems), 1)
        for i, system in enumerate(systems):
            xs = [m + (i - (len(systems) - 1) / 2) * width for m in range(len(metrics))]
            ax.bar(xs, [corpus_by_system[system][m].f1 for m in metrics], width=width, label=system)
        ax.set_xticks(range(len(metrics)), ["ROUGE-1", "ROUGE-2", "ROUGE-L"])
        ax.set_ylabel("F1")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_grid(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        lams = [r["lambda"] for r in rows]
        for metric in ("rouge1", "rouge2", "rougeL"):
            ax.plot(lams, [r[metric] for r in rows], marker="o", label=metric)
        ax.set_xlabel("lambda")
        ax.set_ylabel("F1")
        ax.legend(frameon=False)
        return _save(fig, path)
