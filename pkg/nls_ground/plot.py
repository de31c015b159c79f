"""Static SVG figures of experiment results."""

import math

FIGURE_WIDTH = 8
ASPECT_RATIO = 0.6

PLOT_STYLE = {
    "axes.facecolor": "#FFFFFF",
    "axes.edgecolor": "#FFFFFF",
    "axes.linewidth": 1,
    "axes.grid": True,
    "axes.axisbelow": True,
    "axes.labelcolor": "#222222",
    "xtick.labelsize": 11,
    "xtick.color": "#666666",
    "xtick.direction": "out",
    "ytick.labelsize": 11,
    "ytick.color": "#666666",
    "ytick.direction": "out",
    "grid.color": "#DDDDDD",
    "grid.linestyle": ":",
    "grid.linewidth": 1,
    "svg.hashsalt": "nls-ground",
}

COLORS = ["#222222", "#1F77B4", "#D62728", "#2CA02C"]


def _matplotlib():
    try:
        from matplotlib import style
        from matplotlib.figure import Figure
    except ImportError as error:
        msg = "need to install matplotlib for plotting"
        raise ImportError(msg) from error
    return style, Figure


def _figure(draw, xlabel, ylabel, logx=False, logy=False):
    style, Figure = _matplotlib()
    with style.context(PLOT_STYLE):
        figure = Figure(figsize=(FIGURE_WIDTH, ASPECT_RATIO * FIGURE_WIDTH))
        axes = figure.add_subplot()
        draw(axes)
        if logx:
            axes.set_xscale("log")
        if logy:
            axes.set_yscale("log")
        axes.set_xlabel(xlabel)
        axes.set_ylabel(ylabel)
        if axes.get_legend_handles_labels()[0]:
            axes.legend(frameon=False)
        figure.tight_layout()
    return figure, axes


def save_svg(figure, path):
    """Write ``figure`` as SVG without a timestamp, so reruns are identical."""
    figure.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_energy_map(energy_map, threshold=None):
    """c against |rho| for every successful row."""

    def draw(axes):
        rows = sorted(
            (row for row in energy_map if row.ok),
            key=lambda row: math.hypot(*row.rho),
        )
        x = [math.hypot(*row.rho) for row in rows]
        y = [row.energy for row in rows]
        axes.plot(x, y, marker="o", markersize=4, color=COLORS[0], label="c")
        if threshold is not None:
            axes.axhline(
                threshold, color=COLORS[2], linestyle="--", label="threshold"
            )

    return _figure(draw, "|rho|", "c(rho)", logx=True, logy=threshold is None)


def plot_fiber_scan(scan):
    """J(s*u) and M(s*u) along the dilation ray."""

    def draw(axes):
        axes.plot(scan.s, scan.phi, color=COLORS[0], label="J(s*u)")
        axes.plot(scan.s, scan.M, color=COLORS[1], label="M(s*u)")
        axes.axhline(0.0, color="#999999", linewidth=0.8)
        if scan.a is not None:
            axes.axvline(scan.a, color=COLORS[2], linestyle="--", label="s_u")

    return _figure(draw, "s", "value", logx=True)


def plot_bubbles(diagnostics, gradient_limit):
    """Log-log mass and gradient excess of the bubbles against eps."""

    def draw(axes):
        eps = [row.eps for row in diagnostics.rows]
        mass = [row.mass for row in diagnostics.rows]
        excess = [abs(row.gradient - gradient_limit) for row in diagnostics.rows]
        axes.plot(
            eps,
            mass,
            marker="o",
            color=COLORS[0],
            label=f"mass, slope {diagnostics.mass_exponent:.3f}",
        )
        axes.plot(
            eps,
            excess,
            marker="s",
            color=COLORS[1],
            label=f"gradient excess, slope {diagnostics.gradient_exponent:.3f}",
        )

    return _figure(draw, "eps", "integral", logx=True, logy=True)


def plot_beta_sweep(sweep):
    """Saturation scale a_beta and the bounded diagnostic against beta."""

    def draw(axes):
        rows = [row for row in sweep.rows if row.beta > 0]
        beta = [row.beta for row in rows]
        axes.plot(
            beta,
            [row.a_beta for row in rows],
            marker="o",
            color=COLORS[0],
            label="a_beta",
        )
        axes.plot(
            beta,
            [row.diagnostic for row in rows],
            marker="s",
            color=COLORS[1],
            label="beta a_beta^k",
        )
        threshold = sweep.threshold()
        if threshold is not None:
            axes.axvline(threshold, color=COLORS[2], linestyle="--")

    return _figure(draw, "beta", "value", logx=True, logy=True)


def plot_state(state):
    """Components of a radial state against r."""

    def draw(axes):
        for i, row in enumerate(state.values):
            axes.plot(
                state.grid.r,
                row,
                color=COLORS[i % len(COLORS)],
                label=f"u_{i + 1}",
            )

    return _figure(draw, "r", "u(r)")
