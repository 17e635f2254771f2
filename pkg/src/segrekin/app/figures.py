"""Optional figure rendering for the report path.

Every experiment that emits a CSV can also render a PNG next to it when
figures are enabled.  Figures are presentation-only; the delimited files
remain the data of record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def phase_diagram_figure(path: Path, temps, phis, t_c) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(temps, phis, "o-", ms=3, label="coexistence")
    ax.axvline(t_c, color="k", ls="--", lw=0.8, label="T_c")
    ax.set_xlabel("T")
    ax.set_ylabel("phi*")
    ax.legend(frameon=False)
    return _save(fig, path)


def interface_figure(path: Path, x, n1, n2) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.plot(x, n1, label="n1")
    ax.plot(x, n2, label="n2")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    return _save(fig, path)


def timeseries_figure(path: Path, header, rows, columns) -> Path:
    data = np.asarray(rows, dtype=float)
    t = data[:, header.index("time")]
    fig, axes = plt.subplots(len(columns), 1, figsize=(5.5, 2.0 * len(columns)),
                             sharex=True)
    if len(columns) == 1:
        axes = [axes]
    for ax, col in zip(axes, columns):
        ax.plot(t, data[:, header.index(col)], lw=1.0)
        ax.set_ylabel(col)
    axes[-1].set_xlabel("time")
    return _save(fig, path)


def field_figure(path: Path, x, fields: dict) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for name, vals in fields.items():
        ax.plot(x, vals, label=name, lw=1.0)
    ax.set_xlabel("x")
    ax.legend(frameon=False)
    return _save(fig, path)


def transport_figure(path: Path, rows) -> Path:
    labels = ["nu_visc", "kappa", "D_diff"]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    width = 0.35
    xs = np.arange(len(labels))
    for i, row in enumerate(rows):
        ax.bar(xs + i * width, row[1:], width, label=row[0])
    ax.set_xticks(xs + width / 2)
    ax.set_xticklabels(labels)
    ax.legend(frameon=False)
    return _save(fig, path)
