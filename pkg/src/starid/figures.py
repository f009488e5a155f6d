"""Render report figures to files next to the delimited outputs.

The CLI report path writes these alongside the CSV/JSON artifacts: the
resolution-vs-FOV chart for the resolution table, and the observation
probability, correct-match probability and required-arity PMF charts
for a simulation statistics document.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_resolution_figure(rows, path) -> None:
    """Angular resolution against FOV, one line per pixel count, with the
    equivalent sea distance on the right axis."""
    by_pixels = {}
    for row in rows:
        by_pixels.setdefault(row["pixels"], []).append(row)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for pixels in sorted(by_pixels):
        cells = sorted(by_pixels[pixels], key=lambda r: r["fov_deg"])
        ax.plot(
            [c["fov_deg"] for c in cells],
            [c["theta_res_deg"] for c in cells],
            marker="o",
            label=f"{pixels} px",
        )
    ax.set_xlabel("field of view [deg]")
    ax.set_ylabel("max angular resolution [deg]")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()

    right = ax.secondary_yaxis("right", functions=(lambda d: d * 60.0, lambda nm: nm / 60.0))
    right.set_ylabel("sea distance [nautical miles]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _cell_key(cell):
    return (cell["m_lim"], cell["beta"], cell["fov_deg"], cell["milky_way"])


def _panel_grid(cells):
    mlims = sorted({c["m_lim"] for c in cells})
    betas = sorted({c["beta"] for c in cells})
    return mlims, betas


def render_observation_figure(doc, path) -> None:
    """P(at least N_min stars observed) per cell; panels by (m_lim, beta),
    one line per FOV, dashed when the boresight is near the Milky Way."""
    cells = doc["cells"]
    if not cells:
        return
    mlims, betas = _panel_grid(cells)
    fig, axes = plt.subplots(
        len(mlims), len(betas),
        figsize=(3.2 * len(betas), 2.6 * len(mlims)),
        squeeze=False, sharex=True, sharey=True,
    )
    fovs = sorted({c["fov_deg"] for c in cells})
    colors = {f: f"C{k}" for k, f in enumerate(fovs)}
    for i, m in enumerate(mlims):
        for j, b in enumerate(betas):
            ax = axes[i][j]
            for cell in sorted(cells, key=_cell_key):
                if cell["m_lim"] != m or cell["beta"] != b:
                    continue
                table = cell["observe_at_least"]
                xs = sorted(int(k) for k in table)
                ax.plot(
                    xs,
                    [table[str(x)] for x in xs],
                    color=colors[cell["fov_deg"]],
                    linestyle="--" if cell["milky_way"] else "-",
                    label=f"{cell['fov_deg']:g} deg"
                    + (" (MW)" if cell["milky_way"] else ""),
                )
            ax.set_title(f"m_lim={m:g}, beta={b:g}", fontsize=9)
            ax.set_ylim(-0.05, 1.05)
            ax.grid(alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("N_min")
    for row in axes:
        row[0].set_ylabel("P(N >= N_min)")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_match_probability_figure(doc, path) -> None:
    """Correct-match probability bars, grouped by FOV; panels per m_lim,
    hatched bars for boresights near the Milky Way."""
    cells = doc["cells"]
    if not cells:
        return
    mlims = sorted({c["m_lim"] for c in cells})
    betas = sorted({c["beta"] for c in cells})
    fovs = sorted({c["fov_deg"] for c in cells})
    fig, axes = plt.subplots(
        1, len(mlims), figsize=(4.0 * len(mlims), 3.2), squeeze=False, sharey=True
    )
    width = 0.8 / max(1, 2 * len(betas))
    lookup = {(c["m_lim"], c["beta"], c["fov_deg"], c["milky_way"]): c for c in cells}
    for j, m in enumerate(mlims):
        ax = axes[0][j]
        for bi, b in enumerate(betas):
            for mk, milky in enumerate((False, True)):
                xs, ys = [], []
                for fi, f in enumerate(fovs):
                    cell = lookup.get((m, b, f, milky))
                    if cell is None:
                        continue
                    xs.append(fi + (2 * bi + mk - len(betas)) * width + width / 2)
                    ys.append(cell["p_correct"])
                if xs:
                    ax.bar(
                        xs, ys, width=width,
                        color=f"C{bi}",
                        hatch="//" if milky else None,
                        edgecolor="black", linewidth=0.3,
                        label=f"beta={b:g}" + (" MW" if milky else ""),
                    )
        ax.set_xticks(range(len(fovs)))
        ax.set_xticklabels([f"{f:g}" for f in fovs])
        ax.set_xlabel("field of view [deg]")
        ax.set_title(f"m_lim={m:g}", fontsize=9)
        ax.set_ylim(0, 1.05)
        ax.grid(axis="y", alpha=0.3)
    axes[0][0].set_ylabel("P(correct match)")
    axes[0][-1].legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_pmatch_figure(doc, path) -> None:
    """PMF of the arity needed for a correct match; panels by (m_lim, beta)."""
    cells = [c for c in doc["cells"] if c["p_match_pmf"]]
    if not cells:
        return
    mlims, betas = _panel_grid(cells)
    fovs = sorted({c["fov_deg"] for c in cells})
    colors = {f: f"C{k}" for k, f in enumerate(fovs)}
    fig, axes = plt.subplots(
        len(mlims), len(betas),
        figsize=(3.2 * len(betas), 2.6 * len(mlims)),
        squeeze=False, sharex=True, sharey=True,
    )
    for i, m in enumerate(mlims):
        for j, b in enumerate(betas):
            ax = axes[i][j]
            for cell in sorted(cells, key=_cell_key):
                if cell["m_lim"] != m or cell["beta"] != b:
                    continue
                pmf = cell["p_match_pmf"]
                xs = sorted(int(k) for k in pmf)
                ax.plot(
                    xs,
                    [pmf[str(x)] for x in xs],
                    marker="o", markersize=3,
                    color=colors[cell["fov_deg"]],
                    linestyle="--" if cell["milky_way"] else "-",
                    label=f"{cell['fov_deg']:g} deg"
                    + (" (MW)" if cell["milky_way"] else ""),
                )
            ax.set_title(f"m_lim={m:g}, beta={b:g}", fontsize=9)
            ax.grid(alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("stars needed for unique match")
    for row in axes:
        row[0].set_ylabel("probability")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
