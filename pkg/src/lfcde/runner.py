"""Config-driven experiment runner.

Each replicate draws an observed dataset, builds training/validation sets at
every sampling target, fits the configured estimators, and records surrogate
losses, true errors against the analytic posterior, pairwise comparisons and
the selection decision.  Replicates are seeded from (master seed, replicate
index) alone, so results are identical no matter how work is scheduled, and
finished replicates persist as part files that later runs skip.
"""

import concurrent.futures
import json
import time
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .errors import ConfigurationError
from .estimators import (OracleDensity, fit_abc_kde, fit_adjusted_kde,
                         fit_nn_kde, fit_series_cde)
from .kernels import backend
from .loss import compare_pair, surrogate_loss, true_ise
from .regression import NearestNeighborsRegression, TreeEnsembleRegression
from .sampling import rejection_sample, split_train_validation
from .summaries import compute_summaries, importance, make_summarizer

__all__ = ["run_experiment", "RunFailedError", "fit_estimator"]

MAX_FAILED_FRACTION = 0.1


class RunFailedError(RuntimeError):
    """More than the tolerated fraction of replicates failed."""


def _components(config):
    return 2 if config.model_name == "bivariate_gaussian_mean" else 1


def _draw_observed(config, model, rng, replicate):
    """Observed summaries (+ raw data when simulated) and the posterior oracle."""
    comp = _components(config)
    if config.observed_kind == "standard_normal":
        shape = (model.n_obs, 2) if comp == 2 else (model.n_obs,)
        raw = rng.standard_normal(shape)
        x_o = compute_summaries(raw, config.roster, config.noise_count, rng, comp)
        oracle = model.true_posterior(raw)
    else:
        value = config.observed_values[replicate % len(config.observed_values)]
        x_o = compute_summaries(np.full(model.n_obs, value), config.roster,
                                config.noise_count, rng, comp)
        oracle = model.posterior_from_summaries({"mean": value})
    return x_o, oracle


def fit_estimator(spec, train, tune, seed=0):
    """Fit one estimator from its config entry."""
    kind = spec["kind"]
    if kind == "abc_kde":
        return fit_abc_kde(train, bandwidth=spec.get("bandwidth"))
    if kind == "adjusted_kde":
        return fit_adjusted_kde(train, bandwidth=spec.get("bandwidth"))
    if kind == "nn_kde":
        return fit_nn_kde(train, tune, k_grid=spec.get("k_grid"),
                          h_grid=spec.get("h_grid"))
    if kind == "series":
        if spec.get("regressor", "nearest-neighbors") == "tree-ensemble":
            regressor = TreeEnsembleRegression(
                n_estimators=spec.get("n_estimators", 100),
                min_samples_leaf=spec.get("min_samples_leaf", 5))
        else:
            regressor = NearestNeighborsRegression()
        return fit_series_cde(train, tune, regressor=regressor,
                              max_terms=spec.get("max_terms", 30),
                              grid_size=spec.get("grid_size", 1024),
                              k_grid=spec.get("k_grid"), base_seed=seed)
    raise ConfigurationError(f"unknown estimator kind '{kind}'")


def _theta_grid(config, oracle, train):
    lo_s, hi_s = oracle.support
    lo = min(lo_s, float(np.min(train.theta)))
    hi = max(hi_s, float(np.max(train.theta)))
    pad = 0.05 * (hi - lo)
    return np.linspace(lo - pad, hi + pad, config.grid_size)


def run_replicate(config, model, replicate):
    """All tables for one replicate, as JSON-ready lists of dicts."""
    root = np.random.SeedSequence([config.seed, replicate])
    streams = root.spawn(2 + len(config.targets))
    obs_rng = np.random.default_rng(streams[0])
    summarize = make_summarizer(config.roster, config.noise_count,
                                _components(config))
    x_o, oracle = _draw_observed(config, model, obs_rng, replicate)

    losses, comparisons, selections, curves = [], [], [], []
    imp_rows = []
    for ti, target in enumerate(config.targets):
        s_rng = np.random.default_rng(streams[2 + ti])
        mode_kw = ({"acceptance_rate": target} if config.mode == "rate"
                   else {"epsilon": target})
        T = rejection_sample(model, x_o, summarize, s_rng, B=config.B,
                             proposal_cap=config.proposal_cap, **mode_kw)
        train, tune = split_train_validation(T, config.validation_fraction, s_rng)
        if config.fresh_validation:
            validation = rejection_sample(
                model, x_o, summarize, s_rng, B=config.fresh_validation,
                proposal_cap=config.proposal_cap, **mode_kw)
        else:
            validation = tune

        fit_seed = int(streams[2 + ti].generate_state(1)[0] % (2**31 - 1))
        estimates = []
        for label, spec in zip(config.labels, config.estimators):
            est = fit_estimator(spec, train, tune, seed=fit_seed)
            estimates.append((label, est))

        grid = _theta_grid(config, oracle, train)
        x_query = T.x_o_std
        reports, ises = {}, {}
        for label, est in estimates:
            rep = surrogate_loss(est, validation)
            ise = true_ise(est, oracle, grid, x=x_query)
            reports[label] = rep
            ises[label] = ise
            losses.append({
                "replicate": replicate, "estimator": label,
                "surrogate_value": rep.value, "surrogate_se": rep.se,
                "true_ise": ise, "acceptance_rate": T.acceptance_rate,
                "epsilon": T.epsilon, "B": int(T.B), "B_prime": rep.b_prime,
                "seed": config.seed, "target": target,
                "tuning": {k: v for k, v in est.tuning.items()
                           if not isinstance(v, (list, dict))},
            })

        for i in range(len(estimates)):
            for j in range(i + 1, len(estimates)):
                l1, e1 = estimates[i]
                l2, e2 = estimates[j]
                res = compare_pair(e1, e2, validation, alpha=config.alpha)
                true_order = l1 if ises[l1] <= ises[l2] else l2
                decision = {"f1": l1, "f2": l2,
                            "inconclusive": "inconclusive"}[res.decision]
                comparisons.append({
                    "replicate": replicate, "target": target,
                    "estimator_1": l1, "estimator_2": l2,
                    "delta": res.delta, "ci_low": res.ci[0], "ci_high": res.ci[1],
                    "decision": decision,
                    "true_ise_1": ises[l1], "true_ise_2": ises[l2],
                    "agree": decision == true_order if decision != "inconclusive"
                             else None,
                })

        by_surrogate = min(reports, key=lambda k: reports[k].value)
        by_true = min(ises, key=lambda k: ises[k])
        selections.append({
            "replicate": replicate, "target": target,
            "selected": by_surrogate, "selected_true": by_true,
            "agree": by_surrogate == by_true,
        })

        if config.density_curves:
            cgrid = np.linspace(grid[0], grid[-1], config.curve_points)
            for label, est in estimates:
                dens = np.asarray(est.evaluate(cgrid, x_query), dtype=float)
                curves.extend({"replicate": replicate, "target": target,
                               "estimator": label, "theta": float(t),
                               "density": float(d)}
                              for t, d in zip(cgrid, dens))
            for t, d in zip(cgrid, oracle.pdf(cgrid)):
                curves.append({"replicate": replicate, "target": target,
                               "estimator": "oracle", "theta": float(t),
                               "density": float(d)})

        if config.importance is not None and ti == 0:
            imp_seed = int(streams[1].generate_state(1)[0] % (2**31 - 1))
            regressor = TreeEnsembleRegression(
                n_estimators=config.importance["n_estimators"],
                min_samples_leaf=config.importance["min_samples_leaf"])
            scores = importance(train, config.importance["n_terms"], regressor,
                                base_seed=imp_seed)
            for j, name in enumerate(scores.names):
                row = {"replicate": replicate, "statistic": name,
                       "u": float(scores.u[j])}
                row.update({f"u_{i + 1}": float(scores.breakdown[i, j])
                            for i in range(scores.n_terms)})
                imp_rows.append(row)

    return {"replicate": replicate, "losses": losses, "comparisons": comparisons,
            "selections": selections, "curves": curves, "importance": imp_rows}


# canonical leading columns per table; anything extra follows alphabetically
_TABLE_ORDER = {
    "losses": ["replicate", "estimator", "surrogate_value", "surrogate_se",
               "true_ise", "acceptance_rate", "B", "B_prime", "epsilon",
               "target", "seed"],
    "comparisons": ["replicate", "target", "estimator_1", "estimator_2",
                    "delta", "ci_low", "ci_high", "decision", "true_ise_1",
                    "true_ise_2", "agree"],
    "selections": ["replicate", "target", "selected", "selected_true", "agree"],
    "curves": ["replicate", "target", "estimator", "theta", "density"],
    "importance": ["replicate", "statistic", "u"],
}


def _assemble(out_dir, results, config, failed, wall_time):
    tables = {key: [] for key in _TABLE_ORDER}
    for res in sorted(results, key=lambda r: r["replicate"]):
        for key in tables:
            tables[key].extend(res.get(key, []))
    for key, rows in tables.items():
        if not rows:
            continue
        frame = pd.DataFrame(rows)
        if key == "losses":
            frame = frame.drop(columns=["tuning"]).join(
                pd.json_normalize(frame["tuning"]).add_prefix("tuning_"))
        lead = [c for c in _TABLE_ORDER[key] if c in frame.columns]
        rest = sorted(c for c in frame.columns if c not in lead)
        frame = frame[lead + rest]
        frame.to_csv(out_dir / f"{key}.csv", index=False)
    meta = {"version": __version__, "seed": config.seed,
            "replicates": config.replicates, "failed": failed,
            "kernel_backend": backend(), "wall_time_s": wall_time,
            "config": config.raw}
    with open(out_dir / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True, default=str)


def run_experiment(config, out_dir, threads=1):
    """Run all replicates and write the result bundle; returns the out path.

    Completed replicates (part files under ``parts/``) are not recomputed.
    Raises :class:`RunFailedError` when more than 10% of replicates fail.
    """
    t0 = time.time()
    out_dir = Path(out_dir)
    parts = out_dir / "parts"
    parts.mkdir(parents=True, exist_ok=True)
    model = config.build_model()

    def part_path(r):
        return parts / f"replicate_{r:05d}.json"

    pending = [r for r in range(config.replicates) if not part_path(r).exists()]
    results, failed = [], []
    for r in range(config.replicates):
        if part_path(r).exists():
            with open(part_path(r)) as fh:
                results.append(json.load(fh))

    def compute(r):
        return run_replicate(config, model, r)

    if pending:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            futures = {pool.submit(compute, r): r for r in pending}
            for fut in concurrent.futures.as_completed(futures):
                r = futures[fut]
                try:
                    res = fut.result()
                except Exception as exc:  # noqa: BLE001 - replicate isolation
                    failed.append({"replicate": r, "error": f"{type(exc).__name__}: {exc}"})
                    continue
                # single-writer: part files are written only from this loop
                with open(part_path(r), "w") as fh:
                    json.dump(res, fh, sort_keys=True)
                results.append(res)

    if len(failed) > MAX_FAILED_FRACTION * config.replicates:
        raise RunFailedError(
            f"{len(failed)}/{config.replicates} replicates failed: {failed}")
    _assemble(out_dir, results, config, failed, round(time.time() - t0, 3))
    return out_dir
