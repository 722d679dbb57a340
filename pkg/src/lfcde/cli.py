"""Command-line interface.

Subcommands::

    lfcde run CONFIG          full experiment, writes a result bundle
    lfcde simulate CONFIG     one training set as CSV (+ metadata sidecar)
    lfcde fit CONFIG          fit one estimator to a stored training set
    lfcde evaluate CONFIG     losses of stored fits on a validation CSV
    lfcde select CONFIG       pick the estimator with the smallest loss
    lfcde importance CONFIG   statistic-importance table as CSV

Stored fits are JSON records (kind, tuning, training-set path); evaluation
re-instantiates them deterministically from the training data.  The default
output root is ``$LFCDE_RESULTS_DIR`` (falling back to ``./results``).
"""

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import __version__
from .config import load_config, resolve_output_dir
from .errors import ConfigurationError
from .loss import surrogate_loss, true_ise
from .runner import RunFailedError, fit_estimator, run_experiment
from .sampling import TrainingSet, rejection_sample, split_train_validation
from .summaries import importance as importance_scores
from .summaries import make_summarizer
from .regression import TreeEnsembleRegression


@click.group()
@click.version_option(__version__)
def main():
    """Likelihood-free conditional density estimation toolkit."""


def _load(config_path, seed=None):
    config = load_config(config_path)
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    return config


def _spec_for(config, label):
    try:
        return config.estimators[config.labels.index(label)]
    except ValueError:
        raise ConfigurationError(
            f"estimator '{label}' not in config (labels: {config.labels})") from None


def _training_set_for(config, replicate, target=None, b=None):
    from .runner import _components, _draw_observed

    model = config.build_model()
    root = np.random.SeedSequence([config.seed, replicate])
    streams = root.spawn(3)
    obs_rng = np.random.default_rng(streams[0])
    summarize = make_summarizer(config.roster, config.noise_count,
                                _components(config))
    x_o, oracle = _draw_observed(config, model, obs_rng, replicate)
    target = config.targets[0] if target is None else float(target)
    mode_kw = ({"acceptance_rate": target} if config.mode == "rate"
               else {"epsilon": target})
    s_rng = np.random.default_rng(streams[2])
    T = rejection_sample(model, x_o, summarize, s_rng, B=b or config.B,
                         proposal_cap=config.proposal_cap, seed=config.seed,
                         **mode_kw)
    return model, oracle, T, s_rng


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--threads", default=1, show_default=True, help="replicate workers")
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", type=click.Path(), default=None, help="output directory")
def run(config_path, threads, seed, out):
    """Run the configured experiment end to end."""
    config = _load(config_path, seed)
    out_dir = resolve_output_dir(config, out, config_path)
    try:
        bundle = run_experiment(config, out_dir, threads=threads)
    except RunFailedError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"bundle written to {bundle}")


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="training CSV path")
@click.option("--replicate", default=0, show_default=True)
@click.option("--target", type=float, default=None,
              help="acceptance rate or epsilon (default: first configured)")
@click.option("--split", type=float, default=None,
              help="also write <out>.validation.csv with this validation share")
def simulate(config_path, out, replicate, target, split):
    """Emit one rejection-sampled training set as CSV."""
    config = _load(config_path)
    _, _, T, s_rng = _training_set_for(config, replicate, target)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if split is not None:
        train, val = split_train_validation(T, split, s_rng)
        train.to_csv(out)
        val.to_csv(str(out) + ".validation.csv")
        click.echo(f"wrote {out} ({train.B} pairs) and validation split ({val.B})")
    else:
        T.to_csv(out)
        click.echo(f"wrote {out} ({T.B} pairs, epsilon={T.epsilon:g})")


def _refit(config, label, train_csv):
    train = TrainingSet.from_csv(train_csv)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2**20]))
    sub_train, tune = split_train_validation(train, config.validation_fraction, rng)
    spec = _spec_for(config, label)
    est = fit_estimator(spec, sub_train, tune, seed=config.seed)
    return train, est


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--train", "train_csv", type=click.Path(exists=True), required=True)
@click.option("--estimator", "label", required=True,
              help="estimator label from the config")
@click.option("--out", type=click.Path(), required=True, help="fit record JSON")
def fit(config_path, train_csv, label, out):
    """Fit one configured estimator to a stored training set."""
    config = _load(config_path)
    _, est = _refit(config, label, train_csv)
    record = {"estimator": label, "kind": est.kind, "tuning": est.tuning,
              "train_csv": str(train_csv), "seed": config.seed,
              "version": __version__}
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True, default=float)
    click.echo(f"fit {label}: tuning {est.tuning}")


def _evaluate_records(config, fit_paths, validation_csv):
    validation = TrainingSet.from_csv(validation_csv)
    model = config.build_model()
    rows = []
    for path in fit_paths:
        with open(path) as fh:
            record = json.load(fh)
        train, est = _refit(config, record["estimator"], record["train_csv"])
        rep = surrogate_loss(est, validation)
        row = {"estimator": record["estimator"], "surrogate_value": rep.value,
               "surrogate_se": rep.se, "B_prime": rep.b_prime,
               "acceptance_rate": train.acceptance_rate, "B": train.B}
        try:
            oracle = model.posterior_from_summaries(
                dict(zip(train.names, train.x_o)))
            lo = min(oracle.support[0], float(train.theta.min()))
            hi = max(oracle.support[1], float(train.theta.max()))
            grid = np.linspace(lo, hi, config.grid_size)
            row["true_ise"] = true_ise(est, oracle, grid, x=train.x_o_std)
        except ConfigurationError:
            row["true_ise"] = None  # posterior not identified by these summaries
        rows.append(row)
    return rows


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--fits", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--validation", "validation_csv", type=click.Path(exists=True),
              required=True, help="held-out pairs sharing the training standardizer")
@click.option("--out", type=click.Path(), required=True, help="losses CSV")
def evaluate(config_path, fits, validation_csv, out):
    """Surrogate losses (and true error when available) for stored fits."""
    config = _load(config_path)
    rows = _evaluate_records(config, fits, validation_csv)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(out, index=False)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--fits", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--validation", "validation_csv", type=click.Path(exists=True),
              required=True)
@click.option("--out", type=click.Path(), default=None, help="selection JSON")
def select(config_path, fits, validation_csv, out):
    """Pick the stored fit with the smallest estimated surrogate loss."""
    config = _load(config_path)
    rows = _evaluate_records(config, fits, validation_csv)
    best = min(range(len(rows)), key=lambda i: rows[i]["surrogate_value"])
    result = {"selected": rows[best]["estimator"], "index": best, "losses": rows}
    if out:
        with open(out, "w") as fh:
            json.dump(result, fh, indent=1, sort_keys=True, default=float)
    click.echo(f"selected: {result['selected']} "
               f"(surrogate {rows[best]['surrogate_value']:.5g})")


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--train", "train_csv", type=click.Path(exists=True), default=None,
              help="reuse a stored training set instead of simulating one")
@click.option("--out", type=click.Path(), required=True, help="importance CSV")
@click.option("--n-terms", default=10, show_default=True)
def importance(config_path, train_csv, out, n_terms):
    """Per-statistic importance scores from per-basis-term regressions."""
    config = _load(config_path)
    if train_csv:
        train = TrainingSet.from_csv(train_csv)
    else:
        _, _, train, _ = _training_set_for(config, replicate=0)
    imp = config.importance or {"n_estimators": 100, "min_samples_leaf": 5,
                                "n_terms": n_terms}
    regressor = TreeEnsembleRegression(n_estimators=imp["n_estimators"],
                                       min_samples_leaf=imp["min_samples_leaf"])
    scores = importance_scores(train, imp.get("n_terms", n_terms), regressor,
                               base_seed=config.seed)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    scores.to_csv(out)
    ranked = sorted(zip(scores.names, scores.u), key=lambda p: -p[1])
    click.echo("top statistics: " +
               ", ".join(f"{n}={u:.4f}" for n, u in ranked[:5]))
    click.echo(f"wrote {out}")
