"""Static scatter renderings of the screening output."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .screening import ScreeningRow


def render_scatter_figures(rows: Sequence[ScreeningRow], out_dir) -> list[Path]:
    """Render a_c against the Debye frequency and the corrected band gap
    for the included rows; returns the written paths."""
    out_dir = Path(out_dir)
    included = [r for r in rows if r.exclusion_reason is None]
    freq = [r.omega_m_thz for r in included]
    gap = [r.e_g_corrected for r in included]
    a_c = [r.a_c for r in included]

    written = []
    for xs, xlabel, name in (
            (freq, r"$\omega_m/2\pi$ (THz)", "ac_vs_debye_frequency.png"),
            (gap, r"$E_g$ (eV)", "ac_vs_band_gap.png")):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        ax.scatter(xs, a_c, s=14, alpha=0.7, edgecolors="none")
        if a_c:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(r"characteristic absement $a_c$ (m$\cdot$s)")
        ax.grid(True, which="both", alpha=0.25)
        fig.tight_layout()
        path = out_dir / name
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
