"""Static SVG figures for the study outputs.

Figures are rendered with the Agg backend, a fixed SVG hash salt and no
date metadata, so reruns produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {"svg.hashsalt": "lobrnn", "svg.fonttype": "none", "figure.figsize": (6.0, 4.0)}
PathLike = Union[str, Path]


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    with matplotlib.rc_context(_STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _figure():
    with matplotlib.rc_context(_STYLE):
        return plt.subplots()


def plot_roc(results, path: PathLike, tag: str = "up") -> Path:
    """ROC curves of one class, one line per horizon."""
    fig, ax = _figure()
    for r in results:
        c = r.curves[tag]
        x = np.r_[0.0, c.fpr[::-1], 1.0]
        y = np.r_[0.0, c.tpr[::-1], 1.0]
        ax.plot(x, y, label=f"{r.label} (AUC {r.auc[tag]:.3f})")
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8, label="chance")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"{tag} vs rest")
    ax.legend(loc="lower right", fontsize="small")
    return _save(fig, path)


def plot_retraining(rows: Sequence[dict], path: PathLike) -> Path:
    """Minority-class F1 by test session, refitted daily against fitted once."""
    fig, ax = _figure()
    x = [r["test_session"] for r in rows]
    ax.plot(x, [r["minority_f1_retrained"] for r in rows], "o-", color="tab:red", label="retrained daily")
    ax.plot(x, [r["minority_f1_once"] for r in rows], "s-", color="tab:blue", label="trained once")
    ax.set_xlabel("test session")
    ax.set_ylabel("mean F1 (down, up)")
    ax.legend()
    return _save(fig, path)


def plot_nsteps(rows: Sequence[dict], path: PathLike) -> Path:
    fig, ax = _figure()
    T = [r["T"] for r in rows]
    for tag, style in (("down", "v-"), ("stationary", "o-"), ("up", "^-")):
        ax.plot(T, [r[f"f1_{tag}"] for r in rows], style, label=tag)
    ax.set_xscale("log")
    ax.set_xlabel("time steps T")
    ax.set_ylabel("F1")
    ax.legend()
    return _save(fig, path)


def plot_hourly(rows: Sequence[dict], path: PathLike) -> Path:
    fig, ax = _figure()
    rows = [r for r in rows if r["count"]]
    b = [r["bucket"] for r in rows]
    for tag, style in (("down", "v-"), ("up", "^-")):
        ax.plot(b, [r[f"f1_{tag}"] for r in rows], style, label=tag)
    ax.set_xlabel("hour of session")
    ax.set_ylabel("F1")
    ax.legend()
    return _save(fig, path)


def plot_cv(split_rows: Sequence[dict], path: PathLike) -> Path:
    fig, ax = _figure()
    s = [r["split"] for r in split_rows]
    for tag, style in (("down", "v-"), ("stationary", "o-"), ("up", "^-")):
        ax.plot(s, [r[f"f1_{tag}"] for r in split_rows], style, label=tag)
    ax.set_xlabel("split")
    ax.set_ylabel("F1")
    ax.legend()
    return _save(fig, path)


def plot_history(history, path: PathLike) -> Path:
    fig, ax = _figure()
    ax.plot(history.epoch, history.train_loss, label="train")
    ax.plot(history.epoch, history.val_loss, label="validation")
    if history.best_epoch is not None:
        ax.axvline(history.best_epoch, color="k", linestyle=":", linewidth=0.8)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    return _save(fig, path)
