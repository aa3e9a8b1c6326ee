#!/usr/bin/env python3
"""Quiver plot of a snapshot's director or electric field.

Usage: plot_quiver.py SNAPSHOT {d|E} OUT.png
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from snapshot_io import parse_snapshot


def subsample_stride(n: int, max_arrows: int = 32) -> int:
    """At most max_arrows x max_arrows arrows for legibility."""
    return max(1, math.ceil(n / max_arrows))


def quiver_components(table, field: str):
    if field == "d":
        return table.cell_grid("d1"), table.cell_grid("d2")
    if field == "E":
        return table.cell_grid("Ex_avg"), table.cell_grid("Ey_avg")
    raise ValueError(f"field selector must be 'd' or 'E', got {field!r}")


def render(snapshot_path: str | Path, field: str, out_path: str | Path) -> None:
    table = parse_snapshot(snapshot_path)
    xs = table.cell_grid("x")
    ys = table.cell_grid("y")
    u, v = quiver_components(table, field)
    s = subsample_stride(table.n)
    xs, ys, u, v = (a[::s, ::s] for a in (xs, ys, u, v))

    fig, ax = plt.subplots(figsize=(6, 6))
    opts = dict(pivot="middle", angles="xy")
    if np.max(np.hypot(u, v)) == 0.0:
        opts["scale"] = 1.0  # keep matplotlib's autoscale away from all-zero data
    ax.quiver(xs, ys, u, v, **opts)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    label = "director field" if field == "d" else "electric field"
    ax.set_title(f"{label} ({Path(snapshot_path).name})")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3 or argv[1] not in ("d", "E"):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    try:
        render(argv[0], argv[1], argv[2])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
