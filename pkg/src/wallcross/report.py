"""Rank-2 SVG pictures.  Purely presentational: every number drawn here was computed exactly elsewhere."""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scalars import QRational, render  # noqa: E402

RC = {
    "svg.hashsalt": "wallcross",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.linewidth": 0.6,
    "figure.figsize": (5.0, 5.0),
    "path.simplify": False,
}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _label(c) -> str:
    if isinstance(c, str):
        return c
    return render(c) if isinstance(c, QRational) else str(Fraction(c))


def _z(re, im, gamma):
    return (float(sum(Fraction(r) * g for r, g in zip(re, gamma))),
            float(sum(Fraction(s) * g for s, g in zip(im, gamma))))


def ray_diagram(table: Mapping, re: Sequence, im: Sequence, path, title: str = "") -> None:
    """Rays Z(gamma) from the origin, labeled with Omega(gamma)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for gamma, om in sorted(table.items()):
            x, y = _z(re, im, gamma)
            n = (x * x + y * y) ** 0.5 or 1.0
            ax.plot([0, x / n], [0, y / n], color="0.2", lw=0.8)
            ax.annotate(f"{tuple(gamma)}: {_label(om)}", (x / n, y / n), fontsize=7,
                        xytext=(2, 2), textcoords="offset points")
        ax.plot([-1.2, 1.2], [0, 0], color="0.7", lw=0.5)
        ax.set_xlim(-1.3, 1.3)
        ax.set_ylim(-0.2, 1.3)
        ax.set_aspect("equal")
        ax.set_title(title)
        _save(fig, path)


def tree_diagram(trees: Sequence[dict], walls: Sequence[Sequence[int]], gram, path, title: str = "") -> None:
    """Walls gamma^perp as lines in the dual plane and attractor trees as polylines."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        pts = []
        for tr in trees:
            for e in tr["edges"]:
                pts.append([float(Fraction(x)) for x in e["b_start"]])
        for tr in trees:
            for v in tr["vertices"]:
                pts.append([float(Fraction(x)) for x in v["b"]])
        span = max([abs(c) for p in pts for c in p] + [1.0]) * 1.5
        for w in walls:
            a, b = float(w[0]), float(w[1])
            n = (a * a + b * b) ** 0.5
            ax.plot([-b / n * span, b / n * span], [a / n * span, -a / n * span], color="0.85", lw=0.5)
        for i, tr in enumerate(trees):
            color = f"C{i % 10}"
            for e in tr["edges"]:
                b0 = [float(Fraction(x)) for x in e["b_start"]]
                g = e["gamma"]
                io = [sum(g[r] * gram[r][c] for r in range(2)) for c in range(2)]
                if e["t_end"] is None:
                    t = span / max(abs(io[0]) + abs(io[1]), 1)
                else:
                    t = float(Fraction(e["t_end"]) - Fraction(e["t_start"]))
                ax.plot([b0[0], b0[0] + t * io[0]], [b0[1], b0[1] + t * io[1]], color=color, lw=1.0)
            rb = [float(Fraction(x)) for x in tr["root"]["b"]]
            ax.plot([rb[0]], [rb[1]], "o", color="k", ms=3)
        ax.set_xlim(-span, span)
        ax.set_ylim(-span, span)
        ax.set_aspect("equal")
        ax.set_title(title)
        _save(fig, path)
