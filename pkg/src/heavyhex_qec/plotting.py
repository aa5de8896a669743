"""Matplotlib figures written next to the CSV/JSON outputs.

SVG output is made byte-reproducible by fixing the element-id salt and
dropping the date stamp.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE = {"format": "svg", "metadata": {"Date": None}}


def _save(fig, path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "heavyhex-qec", "svg.fonttype": "none"}):
        fig.savefig(path, **_SAVE)
    plt.close(fig)


def threshold_figure(result, path, reference: dict | None = None) -> None:
    """Per-round logical error rate against ``p``, one panel per memory basis."""
    bases = sorted({r.basis for r in result.rows}, reverse=True)
    fig, axes = plt.subplots(1, len(bases), figsize=(5 * len(bases), 4), squeeze=False)
    for ax, basis in zip(axes[0], bases):
        rows = result.select(basis)
        for d in sorted({r.d for r in rows}):
            pts = sorted((r.p, r.p_L, r.err) for r in rows if r.d == d and r.p_L > 0)
            if not pts:
                continue
            p, pl, err = map(np.array, zip(*pts))
            ax.errorbar(p, pl, yerr=err, marker="o", ms=4, capsize=2, label=f"d={d}")
        cross = result.crossings.get(basis)
        if cross is not None and cross.value is not None:
            ax.axvline(cross.value, color="0.4", ls="--", lw=1, label=f"crossing {100 * cross.value:.3f}%")
        if reference and basis in reference:
            ax.axvline(reference[basis], color="tab:red", ls=":", lw=1,
                       label=f"published {100 * reference[basis]:.2f}% (reference)")
        kind = "phase flips, |+> memory" if basis == "X" else "bit flips, |0> memory"
        ax.set(xscale="log", yscale="log", xlabel="physical error rate p", ylabel="logical error rate per round",
               title=f"{basis}-basis memory ({kind})")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def fidelity_heatmap(summaries, path) -> None:
    """Fidelity over the (theta, phi) grid; missing points are left blank."""
    thetas = sorted({s.counts.theta for s in summaries})
    phis = sorted({s.counts.phi for s in summaries})
    grid = np.full((len(thetas), len(phis)), np.nan)
    for s in summaries:
        if s.fidelity is not None:
            grid[thetas.index(s.counts.theta), phis.index(s.counts.phi)] = s.fidelity.value
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(grid, origin="lower", cmap="viridis", aspect="auto",
                   extent=(-0.5, len(phis) - 0.5, -0.5, len(thetas) - 0.5))
    ax.set_xticks(range(len(phis)), [f"{p / math.pi:.2g}π" for p in phis], fontsize=7)
    ax.set_yticks(range(len(thetas)), [f"{t / math.pi:.2g}π" for t in thetas], fontsize=7)
    ax.set(xlabel="φ", ylabel="θ", title="injected-state fidelity")
    fig.colorbar(im, ax=ax, label="F")
    fig.tight_layout()
    _save(fig, path)


def density_matrix_figure(report: dict, path) -> None:
    """Real and imaginary parts of ideal and reconstructed density matrices for each magic state."""
    names = [n for n, e in report["states"].items() if e.get("fidelity") is not None]
    if not names:
        return
    fig, axes = plt.subplots(len(names), 2, figsize=(7, 3 * len(names)), squeeze=False)
    labels = ["00", "01", "10", "11"]
    for row, name in zip(axes, names):
        e = report["states"][name]
        for ax, part, title in ((row[0], 0, "Re"), (row[1], 1, "Im")):
            ideal = [e["rho_ideal"][i][j][part] for i in range(2) for j in range(2)]
            exp = [e["rho_exp"][i][j][part] for i in range(2) for j in range(2)]
            x = np.arange(4)
            ax.bar(x - 0.2, ideal, 0.4, label="ideal", color="0.7")
            ax.bar(x + 0.2, exp, 0.4, label="reconstructed", color="tab:blue")
            ax.set_xticks(x, labels)
            ax.set_ylim(-0.6, 1.0)
            ax.set_title(f"|{name}_L>  {title} ρ")
        row[0].legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
