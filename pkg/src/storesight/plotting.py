"""Report figures rendered to files with a headless matplotlib backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "svg.hashsalt": "storesight",
}

# fixed metadata keeps the output files byte-stable across runs
_METADATA = {"png": {"Software": None}, "svg": {"Date": None}, "pdf": {"CreationDate": None, "ModDate": None}}


def _save(fig, path) -> None:
    ext = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, metadata=_METADATA.get(ext), bbox_inches="tight")
    plt.close(fig)


def plot_loss_history(train_loss, val_loss, path, title: str = "Loss across epochs") -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        epochs = np.arange(1, len(train_loss) + 1)
        ax.plot(epochs, train_loss, label="training loss", marker="o", ms=3)
        if val_loss is not None and np.any(np.isfinite(val_loss)):
            ax.plot(epochs, val_loss, label="validation loss", marker="s", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean squared error (normalised)")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_sales_comparison(dates, actual, predicted, path, title: str = "Predicted and actual sales") -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if actual is not None:
            ax.plot(dates, actual, label="actual", lw=1.2)
        ax.plot(dates, predicted, label="predicted", lw=1.2, ls="--")
        ax.set_xlabel("date")
        ax.set_ylabel("total units sold")
        ax.set_title(title)
        ax.legend()
        fig.autofmt_xdate()
        _save(fig, path)


def plot_heatmap(counts, path, frame_size=None, title: str = "Foot-traffic heat map") -> None:
    counts = np.asarray(counts)
    with plt.rc_context({**STYLE, "axes.grid": False}):
        fig, ax = plt.subplots()
        extent = None
        if frame_size is not None:
            extent = (0, frame_size[0], frame_size[1], 0)
        im = ax.imshow(counts, cmap="inferno", interpolation="nearest", extent=extent, aspect="auto")
        fig.colorbar(im, ax=ax, label="foot-points")
        ax.set_xlabel("x (px)")
        ax.set_ylabel("y (px)")
        ax.set_title(title)
        _save(fig, path)
