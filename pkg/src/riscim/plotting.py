"""PNG figures written next to the CSV results."""
from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .theory import BerCurve  # noqa: E402


def _finish(ax, path, xlabel):
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("ABER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.figure.tight_layout()
    ax.figure.savefig(path, dpi=120)
    plt.close(ax.figure)


def _positive(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def plot_curve(curve: BerCurve, path) -> None:
    """Simulated ABER with the union bound overlaid."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    label = f"{curve.strategy} B={curve.B} M={curve.M}"
    ax.plot(curve.power_dbm, _positive(curve.aber_sim), "o-", label=f"{label} (sim)")
    ax.plot(curve.power_dbm, _positive(curve.aber_bound), "k--", label="union bound")
    _finish(ax, path, "transmit power P (dBm)")


def plot_rows(rows, path, group_keys, x_key="power_dbm") -> None:
    """One line per distinct value of ``group_keys`` with ``x_key`` on the x-axis."""
    groups = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in group_keys)].append(r)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, rs in groups.items():
        rs = sorted(rs, key=lambda r: r[x_key])
        label = ", ".join(f"{k}={v}" for k, v in zip(group_keys, key))
        ax.plot([r[x_key] for r in rs], _positive([r["aber_sim"] for r in rs]), "o-", label=label)
    _finish(ax, path, x_key)


def plot_array_sweep(rows, path) -> None:
    """ABER against array size, one bar per row."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    labels = [f"{r['antennas']} / {r['ris']}" for r in rows]
    ax.bar(range(len(rows)), [r["aber_sim"] for r in rows], label="simulation")
    ax.set_xticks(range(len(rows)), labels)
    _finish(ax, path, "antennas / RIS elements")
