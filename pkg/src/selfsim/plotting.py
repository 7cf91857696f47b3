"""Static SVG scatter plots with byte-stable output."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "svg.hashsalt": "selfsim",
    "svg.fonttype": "none",
    "path.simplify": False,
    "font.size": 9,
    "axes.linewidth": 0.6,
}


def scatter_svg(x, y, xlabel="x", ylabel="y", title="", viewport=None, size=(5.0, 5.0), marker_size=0.6) -> str:
    """Points-only scatter; ``viewport`` is ``(xmin, xmax, ymin, ymax)``."""
    with matplotlib.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=size)
        ax.scatter(x, y, s=marker_size, c="k", marker=".", linewidths=0, rasterized=False)
        if viewport is not None:
            ax.set_xlim(viewport[0], viewport[1])
            ax.set_ylim(viewport[2], viewport[3])
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()


def write_scatter(path, x, y, **kw):
    text = scatter_svg(x, y, **kw)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
