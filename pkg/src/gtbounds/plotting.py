"""Figure rendering for the CLI report paths (CSV/JSON stay the contract)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_sweep(result, path, thresholds: dict[str, float] | None = None) -> None:
    """Phase-transition curve: empirical error vs test count, with CI bars
    and vertical threshold lines for overlay."""
    ns = [pt.n for pt in result.points]
    pe = [pt.estimate.pe_hat for pt in result.points]
    lo = [pt.estimate.pe_hat - pt.estimate.ci_low for pt in result.points]
    hi = [pt.estimate.ci_high - pt.estimate.pe_hat for pt in result.points]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.errorbar(ns, pe, yerr=[lo, hi], fmt="o-", capsize=3, label="empirical error")
    ax.plot(ns, result.cleaned_pe, "--", color="gray", label="isotonic fit")
    for name, x in (thresholds or {}).items():
        if x is not None and x == x and x != float("inf"):
            ax.axvline(x, linestyle=":", label=name)
    ax.axhline(0.5, color="black", linewidth=0.6)
    ax.set_xlabel("number of tests n")
    ax.set_ylabel("error probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_threshold(result, path) -> None:
    """Per-ell breakdown of the weak-converse ratio at the optimizing nu."""
    ells = [r.ell for r in result.per_ell]
    ratios = [r.ratio for r in result.per_ell]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.bar(ells, ratios, color="steelblue")
    ax.axhline(result.n_threshold, color="crimson", linestyle=":",
               label=f"threshold (eta={result.eta:g})")
    ax.set_xlabel("partition size ell")
    ax.set_ylabel("ratio (tests)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
