"""Result serialization: CSV files, a console table, and rendered figures.

CSV cells use repr() formatting, the shortest round-trip decimal, so a
repeated run writes byte-identical files. Figures are rendered with the
Agg backend next to the CSVs they visualize.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

from embed_router.experiment import (  # noqa: E402
    METHOD_COSINE,
    METHOD_MSE,
    METRIC_CA,
    METRIC_FA,
    EvaluationOutcome,
    ResultTable,
)
from embed_router.nn.train import TrainConfig, learning_rate  # noqa: E402

RESULT_FIELDS = ("client", "dataset", "metric", "method", "accuracy")


def write_results_csv(table: ResultTable, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RESULT_FIELDS)
        for row in table.rows:
            writer.writerow([row.client, row.dataset, row.metric, row.method, repr(row.accuracy)])


def write_ablation_csv(legs: list[tuple[bool, EvaluationOutcome]], path: str | Path) -> None:
    """Same schema as the results CSV with a leading shared_seed column."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("shared_seed",) + RESULT_FIELDS)
        for shared, outcome in legs:
            flag = "true" if shared else "false"
            for row in outcome.table.rows:
                writer.writerow(
                    [flag, row.client, row.dataset, row.metric, row.method, repr(row.accuracy)]
                )


def write_loss_csv(history: list[float], cfg: TrainConfig, path: str | Path) -> None:
    """One row per epoch: epoch index, learning rate in effect, mean loss."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("epoch", "lr", "loss"))
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, repr(learning_rate(cfg, epoch)), repr(loss)])


def render_console_table(table: ResultTable) -> str:
    headers = RESULT_FIELDS
    cells = [
        (row.client, row.dataset, row.metric, row.method, f"{row.accuracy:.2f}")
        for row in table.rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for c in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(c, widths)))
    return "\n".join(lines)


def save_loss_figure(histories: dict[tuple[str, str], list[float]], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (role, dataset), history in sorted(histories.items()):
        ax.semilogy(range(len(history)), history, label=f"{role}/{dataset}", linewidth=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("reconstruction MSE")
    ax.set_title("Training loss per autoencoder")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


_BAR_SERIES = (
    (METRIC_CA, METHOD_COSINE, "CA cosine"),
    (METRIC_FA, METHOD_COSINE, "FA cosine"),
    (METRIC_CA, METHOD_MSE, "CA mse baseline"),
)


def save_accuracy_figure(table: ResultTable, path: str | Path) -> None:
    groups = sorted({(row.client, row.dataset) for row in table.rows})
    fig, ax = plt.subplots(figsize=(max(6.0, 1.3 * len(groups)), 4.5))
    width = 0.8 / len(_BAR_SERIES)
    for i, (metric, method, label) in enumerate(_BAR_SERIES):
        xs, ys = [], []
        for g, (client, dataset) in enumerate(groups):
            try:
                ys.append(table.lookup(client, dataset, metric, method))
            except KeyError:
                continue
            xs.append(g + (i - (len(_BAR_SERIES) - 1) / 2) * width)
        ax.bar(xs, ys, width=width, label=label)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"{c}/{d}" for c, d in groups], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.set_title("Assignment accuracy per client and dataset")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ablation_figure(legs: list[tuple[bool, EvaluationOutcome]], path: str | Path) -> None:
    """Shared vs private initialization, accuracy averaged over clients."""
    series = {}
    keys = []
    for shared, outcome in legs:
        totals: dict[tuple[str, str, str], list[float]] = {}
        for row in outcome.table.rows:
            totals.setdefault((row.dataset, row.metric, row.method), []).append(row.accuracy)
        series[shared] = {k: sum(v) / len(v) for k, v in totals.items()}
        keys = sorted(totals)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(keys)), 4.5))
    width = 0.38
    for i, shared in enumerate((True, False)):
        xs = [k + (i - 0.5) * width for k in range(len(keys))]
        ys = [series.get(shared, {}).get(key, 0.0) for key in keys]
        ax.bar(xs, ys, width=width, label="shared seed" if shared else "private seeds")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(
        [f"{d}\n{metric}/{method}" for d, metric, method in keys], fontsize=7
    )
    ax.set_ylabel("accuracy (%), mean over clients")
    ax.set_ylim(0, 105)
    ax.set_title("Seed sharing ablation")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
