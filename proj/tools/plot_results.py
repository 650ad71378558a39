#!/usr/bin/env python3
"""Plot proximity_bench outputs.

Reads summary.csv (sweep), lookup_bench.csv or occupancy.csv from a result
directory and writes PNG figures next to them.
"""

import argparse
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_summary(path, out):
    df = pd.read_csv(path)
    fig, (ax_hit, ax_recall) = plt.subplots(1, 2, figsize=(10, 4))
    for (cache, cap, bits), group in df.groupby(["cache", "capacity", "hash_bits"], dropna=False):
        label = cache if cache == "none" else f"{cache} c={cap:g}" if cache == "flat" else f"{cache} L={bits:g}"
        group = group.sort_values("tau")
        ax_hit.plot(group["tau"], group["hit_rate"], marker="o", label=label)
        ax_recall.plot(group["tau"], group["mean_k_recall"], marker="o", label=label)
    ax_hit.set(xlabel="tolerance", ylabel="hit rate")
    ax_recall.set(xlabel="tolerance", ylabel="k-recall")
    ax_hit.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out / "summary.png", dpi=120)


def plot_lookup(path, out):
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    for cache, group in df.groupby("cache"):
        ax.plot(group["entries"], group["p50_ns"] / 1e3, marker="o", label=cache)
    ax.set(xscale="log", yscale="log", xlabel="cached entries", ylabel="lookup p50 (us)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "lookup_bench.png", dpi=120)


def plot_occupancy(path, out):
    df = pd.read_csv(path).groupby(["hash_bits", "tau"], as_index=False)["relative"].mean()
    fig, ax = plt.subplots(figsize=(5, 4))
    for tau, group in df.groupby("tau"):
        ax.plot(group["hash_bits"], group["relative"], marker="o", label=f"tau={tau:g}")
    ax.set(yscale="log", xlabel="hash bits L", ylabel="relative occupancy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "occupancy.png", dpi=120)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("result_dir", type=pathlib.Path)
    args = parser.parse_args()
    plots = {
        "summary.csv": plot_summary,
        "lookup_bench.csv": plot_lookup,
        "occupancy.csv": plot_occupancy,
    }
    found = False
    for name, plot in plots.items():
        path = args.result_dir / name
        if path.exists():
            plot(path, args.result_dir)
            print(f"plotted {path}")
            found = True
    if not found:
        sys.exit(f"no known result files in {args.result_dir}")


if __name__ == "__main__":
    main()
