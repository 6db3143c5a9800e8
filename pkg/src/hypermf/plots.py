"""Figure emitters (SVG, deterministic output).

All figures render through the Agg backend with a fixed svg hash salt and no
embedded timestamps, so rerunning a study with the same inputs reproduces the
output files byte for byte.
"""

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hypermf"
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def heatmap(values, path, title="", xlabel="x", ylabel="label",
            extent=None, vmin=None, vmax=None):
    """Color map of a 2-D array (rows = labels, columns = x cells)."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    im = ax.imshow(np.asarray(values), origin="lower", aspect="auto",
                   extent=extent, vmin=vmin, vmax=vmax, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, path)


def particle_scatter(states, path, title="", box=None):
    """Agent states against their grid labels (i-1)/N, drawn as black dots."""
    x = np.asarray(states, dtype=np.float64)
    n = x.shape[0]
    labels = np.arange(n) / n
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(x, labels, "k.", markersize=2.5)
    ax.set_xlabel("x")
    ax.set_ylabel("label")
    if box is not None:
        ax.set_xlim(*box)
    ax.set_ylim(0.0, 1.0)
    if title:
        ax.set_title(title)
    _save(fig, path)


def binned_counts(states, bin_width=0.1, x_range=(0.0, 1.0)):
    """Agent counts on the (label, x) grid of `bin_width` squares.

    Returns (counts, x_edges, label_edges); counts sum to the agent count
    (out-of-range states are clipped into the closest bin).
    """
    x = np.asarray(states, dtype=np.float64)
    n = x.shape[0]
    labels = np.arange(n) / n
    lo, hi = x_range
    nb_x = max(1, int(round((hi - lo) / bin_width)))
    nb_l = max(1, int(round(1.0 / bin_width)))
    xi = np.clip(((x - lo) / bin_width).astype(np.int64), 0, nb_x - 1)
    li = np.clip((labels / bin_width).astype(np.int64), 0, nb_l - 1)
    counts = np.zeros((nb_l, nb_x), dtype=np.int64)
    np.add.at(counts, (li, xi), 1)
    x_edges = lo + bin_width * np.arange(nb_x + 1)
    l_edges = bin_width * np.arange(nb_l + 1)
    return counts, x_edges, l_edges


def binned_density(states, path, title="", bin_width=0.1, x_range=(0.0, 1.0)):
    """Render the binned agent counts; returns the counts array."""
    counts, x_edges, l_edges = binned_counts(states, bin_width, x_range)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    im = ax.pcolormesh(x_edges, l_edges, counts, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("label")
    if title:
        ax.set_title(title)
    _save(fig, path)
    return counts


def line_plot(x, series, path, title="", xlabel="", ylabel="", loglog=False):
    """Labeled curves over a shared abscissa; `series` maps label -> values."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for label, ys in series.items():
        ax.plot(x, ys, marker="o", label=label)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    if title:
        ax.set_title(title)
    _save(fig, path)
