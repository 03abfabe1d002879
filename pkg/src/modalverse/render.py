"""Figure output for frames and countermodels.

Pre-orders are drawn bottom-up by cluster: each cluster is an ellipse
holding its worlds, placed at the height of its longest strict chain
from below, with arrows along the covering relation only.  Anything
that is not a pre-order falls back to a circle of worlds with every
non-loop edge drawn.  All output goes straight to files; the Agg
backend keeps this working without a display.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Ellipse, FancyArrowPatch

from .frames import Frame, is_preorder, quotient
from .kripke import Countermodel


def _cluster_layout(frame: Frame):
    """Positions for a pre-order: (world -> (x, y), cluster geometry,
    covering pairs of clusters)."""
    q = quotient(frame)
    n = q.n_clusters
    depth = [0] * n
    # longest strict chain below each cluster; quadratic but n is tiny
    changed = True
    while changed:
        changed = False
        for a, b in q.strict_order:
            if depth[b] < depth[a] + 1:
                depth[b] = depth[a] + 1
                changed = True
    by_level: dict[int, list[int]] = {}
    for c in range(n):
        by_level.setdefault(depth[c], []).append(c)
    centers = {}
    for level, clusters in by_level.items():
        for k, c in enumerate(sorted(clusters)):
            centers[c] = (k - (len(clusters) - 1) / 2.0, float(level))
    pos = {}
    geom = []
    for c in range(n):
        ms = q.members[c]
        cx, cy = centers[c]
        span = 0.22 * (len(ms) - 1)
        for k, w in enumerate(ms):
            pos[w] = (cx + (0.44 * k - span) / 2.0 * 2, cy)
        geom.append((cx, cy, max(0.52, 0.5 * len(ms)), 0.34, len(ms) > 1))
    covering = []
    for a, b in q.strict_order:
        if not any(
            (a, c) in q.strict_order and (c, b) in q.strict_order for c in range(n)
        ):
            covering.append((a, b))
    return pos, geom, [(centers[a], centers[b]) for a, b in sorted(covering)]


def draw_frame(frame: Frame, ax, title: str | None = None,
               world_text=None, highlight: int | None = None) -> None:
    """Draw one frame on an axes.  world_text maps world -> extra label
    line; highlight rings one world."""
    if frame.worlds == 0:
        ax.set_axis_off()
        return
    if is_preorder(frame):
        pos, geom, covering = _cluster_layout(frame)
        for cx, cy, w, h, multi in geom:
            if multi:
                ax.add_patch(
                    Ellipse((cx, cy), w, h, fill=False, lw=0.8,
                            edgecolor="0.6", linestyle=":")
                )
        for (ax0, ay0), (bx, by) in covering:
            ax.add_patch(
                FancyArrowPatch((ax0, ay0 + 0.18), (bx, by - 0.18),
                                arrowstyle="-|>", mutation_scale=10,
                                lw=0.9, color="0.2")
            )
    else:
        pos = {
            w: (math.cos(2 * math.pi * w / frame.worlds),
                math.sin(2 * math.pi * w / frame.worlds))
            for w in range(frame.worlds)
        }
        for i, j in sorted(frame.rel):
            if i != j:
                ax.add_patch(
                    FancyArrowPatch(pos[i], pos[j], arrowstyle="-|>",
                                    mutation_scale=9, lw=0.7, color="0.3",
                                    shrinkA=10, shrinkB=10)
                )
    for w, (x, y) in pos.items():
        ring = dict(edgecolor="crimson", lw=1.6) if w == highlight else dict(
            edgecolor="0.2", lw=0.8)
        ax.scatter([x], [y], s=240, facecolor="white", zorder=3, **ring)
        label = f"w{w}"
        if world_text is not None and world_text.get(w):
            label += "\n" + world_text[w]
        ax.annotate(label, (x, y), ha="center", va="center",
                    fontsize=7, zorder=4)
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    ax.set_xlim(min(xs) - 0.8, max(xs) + 0.8)
    ax.set_ylim(min(ys) - 0.55, max(ys) + 0.55)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=8)


def render_frames(frames: Sequence[Frame], path: str,
                  titles: Sequence[str] | None = None, ncols: int = 4) -> str:
    """A grid of frame drawings, written to path; returns path."""
    n = max(1, len(frames))
    ncols = min(ncols, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(2.6 * ncols, 2.3 * nrows), squeeze=False
    )
    for k in range(nrows * ncols):
        ax = axes[k // ncols][k % ncols]
        if k < len(frames):
            title = titles[k] if titles else f"frame {k}"
            draw_frame(frames[k], ax, title=title)
        else:
            ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_countermodel(cm: Countermodel, path: str, text: str | None = None) -> str:
    """One frame drawing with the valuation written into the worlds and
    the refuting world ringed; returns path."""
    model = cm.model
    world_text = {}
    for w in range(model.frame.worlds):
        true_vars = [
            f"p{v}" for v in sorted(model.valuation)
            if model.valuation[v] >> w & 1
        ]
        world_text[w] = ",".join(true_vars)
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    draw_frame(model.frame, ax, title=text, world_text=world_text,
               highlight=cm.world)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
