"""Report emission: CSVs, a metadata echo, and rendered figures.

Every run writes per-task and per-corruption CSVs plus ``metadata.txt``
(the full effective config, its hash, and headline numbers). Figures are
rendered alongside the delimited output: an accuracy-over-tasks curve and
a per-corruption bar chart per run, and the accuracy-vs-alpha curves per
sweep. CSV bytes are deterministic for identical configs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import ExperimentConfig
from .harness import ExperimentResult

__all__ = [
    "TAG_ORDER",
    "write_run_report",
    "write_sweep_report",
]

# reporting order for corruption tags
TAG_ORDER = ("clean", "S", "J", "R", "AG", "AL", "DG", "DL")


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def write_per_task_csv(path: Path, result: ExperimentResult) -> None:
    lines = ["task,oa,avg_oa_so_far,seen_classes"]
    for t, oa in enumerate(result.per_task_oa, start=1):
        avg_so_far = sum(result.per_task_oa[:t]) / t
        lines.append(f"{t},{_fmt(oa)},{_fmt(avg_so_far)},{result.seen_classes_per_task[t - 1]}")
    path.write_text("\n".join(lines) + "\n")


def write_per_corruption_csv(path: Path, result: ExperimentResult) -> None:
    lines = ["tag,accuracy,count"]
    for tag in TAG_ORDER:
        acc, count = result.final_per_tag.get(tag, (0.0, 0))
        lines.append(f"{tag},{_fmt(acc)},{count}")
    path.write_text("\n".join(lines) + "\n")


def write_metadata(path: Path, cfg: ExperimentConfig, result: ExperimentResult) -> None:
    lines = [f"config_hash = {cfg.config_hash()}"]
    lines.extend(cfg.canonical_text().rstrip("\n").splitlines())
    lines.append(f"capacity_n = {'' if result.capacity is None else result.capacity}")
    lines.append(f"avg_oa = {_fmt(result.average_oa)}")
    lines.append(f"final_oa = {_fmt(result.per_task_oa[-1])}")
    path.write_text("\n".join(lines) + "\n")


def _plot_oa_curve(path: Path, result: ExperimentResult) -> None:
    tasks = range(1, len(result.per_task_oa) + 1)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(tasks, result.per_task_oa, marker="o", label="OA after task")
    ax.axhline(result.average_oa, color="gray", linestyle="--", linewidth=1, label="average OA")
    ax.set_xlabel("task")
    ax.set_ylabel("overall accuracy")
    ax.set_xticks(list(tasks))
    ax.set_ylim(0.0, 1.0)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_tag_bars(path: Path, result: ExperimentResult) -> None:
    tags = [t for t in TAG_ORDER if t in result.final_per_tag]
    accs = [result.final_per_tag[t][0] for t in tags]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.bar(range(len(tags)), accs, color="#4878cf")
    ax.set_xticks(range(len(tags)))
    ax.set_xticklabels(tags)
    ax.set_xlabel("corruption tag")
    ax.set_ylabel("final accuracy")
    ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_run_report(
    out_dir: str | Path, cfg: ExperimentConfig, result: ExperimentResult
) -> dict[str, Path]:
    """Write the full run report; returns the emitted paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "per_task": out_dir / "per_task.csv",
        "per_corruption": out_dir / "per_corruption.csv",
        "metadata": out_dir / "metadata.txt",
        "oa_figure": out_dir / "oa_per_task.png",
        "tag_figure": out_dir / "corruption_accuracy.png",
    }
    write_per_task_csv(paths["per_task"], result)
    write_per_corruption_csv(paths["per_corruption"], result)
    write_metadata(paths["metadata"], cfg, result)
    _plot_oa_curve(paths["oa_figure"], result)
    _plot_tag_bars(paths["tag_figure"], result)
    return paths


def write_sweep_report(
    out_dir: str | Path,
    rows: list[tuple[float, float, int, float, float]],
) -> dict[str, Path]:
    """Write the sweep CSV and the accuracy-vs-alpha figure.

    ``rows`` are (alpha, r, capacity, avg_oa, final_oa), one per grid point.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"sweep": out_dir / "sweep.csv", "figure": out_dir / "sweep_oa_alpha.png"}

    lines = ["alpha,r,capacity_N,avg_oa,final_oa"]
    for alpha, r, cap, avg_oa, final_oa in rows:
        lines.append(f"{alpha:g},{r:g},{cap},{_fmt(avg_oa)},{_fmt(final_oa)}")
    paths["sweep"].write_text("\n".join(lines) + "\n")

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    baseline = [row for row in rows if row[0] == 0.0]
    r_values = sorted({row[1] for row in rows if row[0] > 0.0})
    for r in r_values:
        pts = sorted((row[0], row[3]) for row in rows if row[1] == r and row[0] > 0.0)
        if baseline:
            pts = [(0.0, baseline[0][3])] + pts
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"r = {r:g}")
    if baseline and not r_values:
        ax.plot([0.0], [baseline[0][3]], marker="o", label="no downsampling")
    ax.set_xlabel("downsampled fraction alpha")
    ax.set_ylabel("average OA")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(paths["figure"], dpi=150)
    plt.close(fig)
    return paths
