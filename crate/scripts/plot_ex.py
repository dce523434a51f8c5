"""Plot e_x (and v1 when present) from one or more metrics.csv files."""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {k: [float(r[k]) if r[k] else float("nan") for r in rows] for k in rows[0]}
    return cols


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("metrics", nargs="+", type=Path, help="metrics.csv files or run directories")
    ap.add_argument("-o", "--output", type=Path, default=Path("e_x.png"))
    args = ap.parse_args()

    fig, (ax_e, ax_v) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for p in args.metrics:
        if p.is_dir():
            p = p / "metrics.csv"
        m = load(p)
        label = p.parent.name
        ax_e.plot(m["t"], m["e_x"], label=label)
        if "v1" in m and any(v == v for v in m["v1"]):
            ax_v.semilogy(m["t"], m["v1"], label=label)
    ax_e.set_ylabel("e_x")
    ax_v.set_ylabel("V1")
    ax_v.set_xlabel("t [s]")
    ax_e.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
