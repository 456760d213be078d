"""Word-error-rate figures rendered next to the merged plot-data CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

AXIS_LABELS = {
    "bec": "channel erasure probability $\\epsilon$",
    "awgn": "$E_b/N_0$ (dB)",
}

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
}


def size(scale=1.0, width_in=6.4):
    golden = (5**0.5 - 1) / 2
    return width_in * scale, width_in * scale * golden


def wer_figure(rows, channel: str, path, title: str | None = None) -> Path:
    """Semilog WER plot of merged rows (dicts with series/kind/param/wer/lo/hi).

    Simulated series get Wilson error bars and markers; bound curves are
    dashed lines.
    """
    path = Path(path)
    series: dict[str, list[dict]] = {}
    for r in rows:
        series.setdefault(r["series"], []).append(r)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=size())
        for name, pts in series.items():
            pts = [p for p in pts if p["wer"] > 0]
            if not pts:
                continue
            x = [p["param"] for p in pts]
            y = [p["wer"] for p in pts]
            if pts[0]["kind"] == "bound":
                ax.semilogy(x, y, "k--" if "PPV" in name or "Shannon" in name else "--", label=name)
            else:
                err = [[p["wer"] - p["lo"] for p in pts], [p["hi"] - p["wer"] for p in pts]]
                ax.errorbar(x, y, yerr=err, marker="o", capsize=2, label=name)
        ax.set_yscale("log")
        ax.set_xlabel(AXIS_LABELS.get(channel, "channel parameter"))
        ax.set_ylabel("word error rate")
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
