#!/usr/bin/env python3
"""Render the plot data files written by `adaptive plot` / `adaptive pipeline`."""

import argparse
import csv
import itertools
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

THETA = ["min_gap", "headway_time", "max_acceleration", "max_deceleration"]


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def histogram(path):
    rows = read_rows(path)
    lo = [float(r["bucket_lo"]) for r in rows]
    counts = [int(r["count"]) for r in rows]
    total = sum(counts)
    return lo, [c / total if total else 0.0 for c in counts]


def plot_histograms(files, label_of, title, out):
    fig, ax = plt.subplots(figsize=(7, 4))
    for path in files:
        lo, share = histogram(path)
        ax.step(lo, share, where="post", label=label_of(path))
    ax.set_xlabel("ego to lead gap [m]")
    ax.set_ylabel("share of frames")
    ax.set_title(title)
    if files:
        ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def plot_scatter(path, out):
    rows = read_rows(path)
    pairs = list(itertools.combinations(THETA, 2))
    fig, axes = plt.subplots(2, 3, figsize=(12, 7))
    clusters = [int(r["cluster"]) for r in rows]
    for ax, (x, y) in zip(axes.flat, pairs):
        ax.scatter([float(r[x]) for r in rows], [float(r[y]) for r in rows], c=clusters, cmap="tab20", s=12)
        ax.set_xlabel(x)
        ax.set_ylabel(y)
    fig.suptitle("Fitted parameters by cluster")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("plot_dir", type=pathlib.Path)
    args = parser.parse_args()
    d = args.plot_dir

    cities = sorted(d.glob("min_gap_city_*.csv"))
    plot_histograms(cities, lambda p: p.stem.removeprefix("min_gap_city_"), "Min-gap by city", d / "min_gap_cities.png")
    clusters = sorted(d.glob("min_gap_cluster_*.csv"), key=lambda p: int(p.stem.rsplit("_", 1)[1]))
    plot_histograms(clusters, lambda p: "cluster " + p.stem.rsplit("_", 1)[1], "Min-gap by cluster",
                    d / "min_gap_clusters.png")
    if (d / "theta_scatter.csv").exists():
        plot_scatter(d / "theta_scatter.csv", d / "theta_scatter.png")


if __name__ == "__main__":
    main()
