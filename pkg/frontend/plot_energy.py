#!/usr/bin/env python3
"""Plot the reduced energy and the accumulated damping over time.

Usage: plot_energy.py ENERGIES.csv OUT.png
"""

from __future__ import annotations

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from snapshot_io import SchemaError, load_energies

REQUIRED = ("time", "reduced_energy", "damping_integral")


def render(csv_path: str | Path, out_path: str | Path) -> None:
    data = load_energies(csv_path, REQUIRED)
    damping = data["damping_integral"]
    drops = np.nonzero(np.diff(damping) < 0)[0]
    if drops.size:
        # data row drops[0]+1 sits on file line drops[0]+3 (header + 1-based)
        raise SchemaError(
            f"{csv_path}: damping integral decreases at row {int(drops[0]) + 3} "
            "(it accumulates nonnegative increments by construction)"
        )

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(data["time"], data["reduced_energy"], label="reduced energy")
    ax.plot(data["time"], damping, label="damping integral", linestyle="--")
    ax.set_xlabel("t")
    ax.legend()
    ax.set_title(Path(csv_path).name)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    try:
        render(argv[0], argv[1])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
