"""Static figures written next to the CSV/JSON reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def plot_fourier(rows: list[dict], path: Path):
    fig, ax = plt.subplots(figsize=(6.4, 4))
    xs = [math.log2(abs(int(r["eta"]))) if int(r["eta"]) else 0.0 for r in rows]
    ax.scatter(xs, [r["abs"] for r in rows], s=8, label="|mu-hat|")
    lb = [(x, r["lyons_bound"]) for x, r in zip(xs, rows) if r["lyons_bound"] is not None]
    if lb:
        ax.scatter(*zip(*lb), s=8, marker="_", label="Lyons bound")
    ax.set_xlabel("log2 |eta|")
    ax.set_ylabel("modulus")
    ax.set_ylim(0, 1.05)
    ax.legend()
    _save(fig, path)


def plot_weyl(trace: list[tuple[int, float, float]], path: Path):
    fig, ax = plt.subplots(figsize=(6.4, 4))
    ns = [t[0] for t in trace]
    ax.plot(ns, [math.hypot(t[1], t[2]) for t in trace], label="|running average|")
    ax.plot(ns, [t[1] for t in trace], label="real part", alpha=0.6)
    ax.set_xlabel("n")
    ax.legend()
    _save(fig, path)


def plot_del(rows: list[dict], path: Path):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    Ns = [r["N"] for r in rows]
    for key in ("I", "I1", "I21", "I22"):
        a1.plot(Ns, [max(r[key], 1e-300) for r in rows], marker="o", label=key)
    a1.set_xscale("log", base=2)
    a1.set_yscale("log")
    a1.set_xlabel("N")
    a1.legend()
    a2.plot(Ns, [r["increment"] for r in rows], marker="o", label="dyadic increment")
    a2.plot(Ns, [r["partial_sum"] for r in rows], marker="s", label="partial sum")
    a2.set_xscale("log", base=2)
    a2.set_xlabel("N")
    a2.legend()
    _save(fig, path)


def plot_cylinders(nbits: int, rows: list[dict], path: Path):
    fig, ax = plt.subplots(figsize=(6.4, 4))
    idx = range(len(rows))
    ax.bar(idx, [r["freq"] for r in rows], alpha=0.6, label="empirical")
    ax.plot(idx, [r["mass"] for r in rows], "k_", markersize=14, label="exact mass")
    ax.set_xticks(list(idx), [r["prefix"] for r in rows], rotation=90, fontsize=7)
    ax.set_title(f"{nbits}-bit cylinders")
    ax.legend()
    _save(fig, path)


def plot_admissibility(rows: list[dict], path: Path):
    fig, ax = plt.subplots(figsize=(6.4, 4))
    pts = [(math.log10(int(r["R"])), r["log10_product"], r["log10_threshold"]) for r in rows
           if r["log10_product"] is not None]
    if pts:
        x, p, t = zip(*pts)
        ax.plot(x, p, marker="o", label="log10 prod eps")
        ax.plot(x, t, marker="x", label="-gamma log10 K_T")
    ax.set_xlabel("log10 R")
    ax.legend()
    _save(fig, path)
