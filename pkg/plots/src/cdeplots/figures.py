"""Figure renderers for result bundles.

Each renderer reads one CSV table from a bundle directory and draws one
figure kind; nothing is computed here beyond grouping and medians of
columns that already exist.  Bundles are read-only inputs.

Figure kinds
------------
loss-curves       median true and surrogate loss versus acceptance target,
                  one line per estimator
density-overlays  estimated densities at the observed point against the
                  dashed analytic posterior, one panel per (replicate, target)
agreement-bars    pairwise method-comparison agreement with the true-error
                  ordering, filtered versus unfiltered
importance-bars   mean importance score per summary statistic
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

FIGURE_KINDS = ("loss-curves", "density-overlays", "agreement-bars",
                "importance-bars")

_REQUIRED = {
    "loss-curves": ("losses.csv", ["estimator", "target", "true_ise",
                                   "surrogate_value"]),
    "density-overlays": ("curves.csv", ["replicate", "target", "estimator",
                                        "theta", "density"]),
    "agreement-bars": ("comparisons.csv", ["estimator_1", "estimator_2",
                                           "decision", "delta", "true_ise_1",
                                           "true_ise_2"]),
    "importance-bars": ("importance.csv", ["statistic", "u"]),
}


class MissingTableError(FileNotFoundError):
    """The bundle lacks a table or the table lacks required columns."""


class EmptyInputError(ValueError):
    """The required table exists but has no rows."""


@dataclass
class PlotSpec:
    bundle: str
    kind: str
    out: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}'; "
                             f"choose from {FIGURE_KINDS}")


def load_table(bundle, kind):
    name, columns = _REQUIRED[kind]
    path = Path(bundle) / name
    if not path.exists():
        raise MissingTableError(f"{kind} needs {name}, absent from {bundle}")
    frame = pd.read_csv(path)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise MissingTableError(f"{name} is missing columns {missing}")
    if frame.empty:
        raise EmptyInputError(f"{name} has no rows")
    return frame


def render(spec):
    """Render one figure kind from a bundle; returns the output path."""
    frame = load_table(spec.bundle, spec.kind)
    renderer = {
        "loss-curves": _loss_curves,
        "density-overlays": _density_overlays,
        "agreement-bars": _agreement_bars,
        "importance-bars": _importance_bars,
    }[spec.kind]
    fig = renderer(frame, spec.options)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.options.get("dpi", 150), bbox_inches="tight")
    plt.close(fig)
    return out


def _loss_curves(frame, options):
    fig, axes = plt.subplots(1, 2, figsize=options.get("figsize", (9, 3.6)),
                             sharex=True)
    med = (frame.groupby(["estimator", "target"])[["true_ise", "surrogate_value"]]
           .median().reset_index())
    for (ax, column, title) in zip(axes, ["true_ise", "surrogate_value"],
                                   ["true squared-error loss",
                                    "estimated surrogate loss"]):
        for name, sub in med.groupby("estimator"):
            sub = sub.sort_values("target")
            ax.plot(sub["target"], sub[column], marker="o", label=name)
        ax.set_xlabel("acceptance target")
        ax.set_title(title)
        ax.set_xscale("log")
    if (med["true_ise"] > 0).all():
        axes[0].set_yscale("log")
    axes[0].set_ylabel("median loss")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    return fig


def _density_overlays(frame, options):
    panels = sorted(frame.groupby(["replicate", "target"]).groups)
    ncol = min(3, len(panels))
    nrow = (len(panels) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol,
                             figsize=options.get("figsize",
                                                 (3.2 * ncol, 2.6 * nrow)),
                             squeeze=False)
    for ax in axes.ravel()[len(panels):]:
        ax.set_axis_off()
    for ax, key in zip(axes.ravel(), panels):
        sub = frame[(frame["replicate"] == key[0]) & (frame["target"] == key[1])]
        for name, curve in sub.groupby("estimator"):
            curve = curve.sort_values("theta")
            if name == "oracle":
                ax.plot(curve["theta"], curve["density"], "k--", lw=1.4,
                        label="analytic posterior")
            else:
                ax.plot(curve["theta"], curve["density"], lw=1.0, label=name)
        ax.set_title(f"replicate {key[0]}, target {key[1]:g}", fontsize=8)
        ax.tick_params(labelsize=7)
    axes[0, 0].legend(fontsize=6)
    fig.tight_layout()
    return fig


def _agreement_bars(frame, options):
    rows = []
    for (e1, e2), sub in frame.groupby(["estimator_1", "estimator_2"]):
        true_winner = (sub["true_ise_1"] <= sub["true_ise_2"]).map(
            {True: e1, False: e2})
        unfiltered_winner = (sub["delta"] <= 0).map({True: e1, False: e2})
        conclusive = sub["decision"] != "inconclusive"
        rows.append({
            "pair": f"{e1}\nvs {e2}",
            "filtered": (sub.loc[conclusive, "decision"]
                         == true_winner[conclusive]).mean()
                        if conclusive.any() else float("nan"),
            "unfiltered": (unfiltered_winner == true_winner).mean(),
        })
    table = pd.DataFrame(rows)
    fig, ax = plt.subplots(figsize=options.get("figsize",
                                               (1.8 + 1.4 * len(table), 3.2)))
    x = range(len(table))
    width = 0.38
    ax.bar([i - width / 2 for i in x], table["filtered"], width,
           label="confidence-screened")
    ax.bar([i + width / 2 for i in x], table["unfiltered"], width,
           label="all decisions")
    ax.axhline(0.5, color="gray", ls=":", lw=1, label="random selection")
    ax.set_xticks(list(x), table["pair"], fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("agreement with true-loss ordering")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _importance_bars(frame, options):
    med = frame.groupby("statistic", sort=False)["u"].mean()
    fig, ax = plt.subplots(figsize=options.get("figsize",
                                               (1.5 + 0.45 * len(med), 3.2)))
    ax.bar(range(len(med)), med.to_numpy())
    ax.set_xticks(range(len(med)), med.index, rotation=60, ha="right",
                  fontsize=7)
    ax.set_ylabel("mean importance")
    fig.tight_layout()
    return fig
