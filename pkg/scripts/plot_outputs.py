"""Plot the CSV outputs of ``run_all.py`` (needs matplotlib, not a package dependency).

    python scripts/plot_outputs.py [--out-root DIR]
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _loglog(ax, groups, x, y, title):
    for label, rows in groups.items():
        ax.loglog([float(r[x]) for r in rows], [float(r[y]) for r in rows], "o-", label=label)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    ax.legend(fontsize=7)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-root", default=str(Path(__file__).resolve().parents[1] / "out"))
    root = Path(p.parse_args(argv).out_root)
    panels = []
    energy = root / "fourier-profile" / "energy.csv"
    if energy.exists():
        g = defaultdict(list)
        for r in _rows(energy):
            g[r["measure"]].append(r)
        panels.append((g, "R", "value", "annulus energy"))
    avg = root / "sl2-probes" / "sl2_average.csv"
    if avg.exists():
        g = defaultdict(list)
        for r in _rows(avg):
            g[r["measure"]].append(r)
        panels.append((g, "R", "value", "SL2 average of |mu_hat|^2"))
    probes = root / "sl2-probes" / "sl2_probes.csv"
    if probes.exists():
        g = defaultdict(list)
        for r in _rows(probes):
            g[r["regime"]].append(r)
        panels.append((g, "t", "mean_power", "probe ensemble power"))
    if not panels:
        raise SystemExit(f"no CSV outputs under {root}; run scripts/run_all.py first")
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    for ax, panel in zip(axes[0], panels):
        _loglog(ax, *panel)
    fig.tight_layout()
    fig.savefig(root / "profiles.png", dpi=120)
    print(root / "profiles.png")


if __name__ == "__main__":
    main()
