"""Matplotlib renderers for the CLI report paths.

Figures are strictly opt-in sidecars next to the delimited output; nothing
here affects computed values.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_curve(points: list[tuple[float, float]], path: str,
                 title: str = "worst-case distortion") -> None:
    xs = [p[0] for p in points]
    gs = [p[1] for p in points]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(xs, gs, lw=1.5, label="g(x)")
    ax.plot([0.0, 1.0], [0.0, 1.0], ls="--", lw=0.8, color="gray", label="identity")
    ax.set_xlabel("base probability x")
    ax.set_ylabel("worst-case probability g(x)")
    ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_allocations(labels: list[str], outcome_labels: list[str],
                       allocations: list[list[float]], path: str,
                       title: str = "optimal allocation") -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    width = 0.8 / max(1, len(labels))
    for k, (label, values) in enumerate(zip(labels, allocations)):
        offsets = [i + k * width for i in range(len(outcome_labels))]
        ax.bar(offsets, values, width=width, label=label)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(outcome_labels))])
    ax.set_xticklabels(outcome_labels, rotation=45, ha="right")
    ax.set_ylabel("allocated loss")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
