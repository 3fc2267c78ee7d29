"""Matplotlib figure rendering for heatmaps, trend fits and reports.

Figures are written with fixed SVG ids and no timestamps so reruns produce
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "proddiv",
    "svg.fonttype": "none",
}


def _save(fig, path, header_lines=()):
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt in ("svg", "pdf") else {}
    fig.savefig(path, format=fmt, metadata=meta)
    plt.close(fig)
    if fmt == "svg" and header_lines:
        text = path.read_text(encoding="utf-8")
        comment = "".join(f"<!-- {line.replace('--', '- -')} -->\n" for line in header_lines)
        head, sep, rest = text.partition("?>\n")
        path.write_text(head + sep + comment + rest if sep else comment + text, encoding="utf-8")
    return path


def heatmap_svg(matrix, path, header_lines=()):
    """Grayscale cell raster; darker cells are more similar."""
    with plt.rc_context(STYLE):
        n = len(matrix)
        size = min(8.0, 2.0 + 0.08 * n)
        fig, ax = plt.subplots(figsize=(size + 1.0, size))
        vmin = min(0.0, float(matrix.values.min()))
        im = ax.imshow(matrix.values, cmap="Greys", vmin=vmin, vmax=1.0, interpolation="nearest")
        if n <= 30:
            ax.set_xticks(range(n), matrix.labels, rotation=90)
            ax.set_yticks(range(n), matrix.labels)
        else:
            ax.set_xticks([])
            ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="similarity")
        fig.tight_layout()
        return _save(fig, path, header_lines)


def _fit_band(years, fit, level_t):
    x = np.asarray(years, dtype=float)
    grid = np.linspace(x.min(), x.max(), 50)
    yhat = fit.intercept + fit.slope * grid
    xbar = x.mean()
    sxx = ((x - xbar) ** 2).sum()
    se = fit.resid_std * np.sqrt(1.0 / len(x) + (grid - xbar) ** 2 / sxx)
    return grid, yhat, level_t * se


def draw_trend(ax, series, fit, report=None, label=None):
    """Scatter of annual values with the OLS line and its confidence band."""
    years, values = series.arrays()
    ax.scatter(years, values, s=12, color="0.2", zorder=3)
    grid, yhat, half = _fit_band(years, fit, fit.t_quantile)
    ax.plot(grid, yhat, color="C0", lw=1.2)
    ax.fill_between(grid, yhat - half, yhat + half, color="C0", alpha=0.2, lw=0)
    title = label or series.metric
    if report is not None:
        title += f"\nr = {report.r:.3f}{report.stars}"
    ax.set_title(title)
    ax.set_xlabel("year")


def trend_svg(series, fit, report, path, header_lines=()):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.4, 2.8))
        draw_trend(ax, series, fit, report)
        fig.tight_layout()
        return _save(fig, path, header_lines)


def panel_figure(panels, path, title=None, header_lines=()):
    """One row of trend panels; ``panels`` is a list of ``(label, series, fit, report)``."""
    with plt.rc_context(STYLE):
        k = max(len(panels), 1)
        fig, axes = plt.subplots(1, k, figsize=(3.0 * k, 2.9), squeeze=False)
        for ax, (label, series, fit, report) in zip(axes[0], panels):
            draw_trend(ax, series, fit, report, label=label)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path, header_lines)


def corpus_figure(stats, path, header_lines=()):
    """Per-year pooled types/tokens and per-document means."""
    with plt.rc_context(STYLE):
        years = [y.year for y in stats.years]
        fig, (left, right) = plt.subplots(1, 2, figsize=(6.4, 2.8))
        left.plot(years, [y.tokens for y in stats.years], "o-", ms=3, label="tokens")
        left.plot(years, [y.types for y in stats.years], "s-", ms=3, label="types")
        left.set_title("pooled per year")
        left.legend(frameon=False)
        right.plot(years, [y.mean_tokens for y in stats.years], "o-", ms=3, label="tokens")
        right.plot(years, [y.mean_types for y in stats.years], "s-", ms=3, label="types")
        right.set_title("mean per document")
        for ax in (left, right):
            ax.set_xlabel("year")
        fig.tight_layout()
        return _save(fig, path, header_lines)
