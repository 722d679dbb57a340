"""Experiment configuration: a strict YAML schema.

Configs are single structured files so experiment definitions diff cleanly
and archive well.  Validation is strict -- unknown keys anywhere are
rejected before any simulation starts -- and happens entirely up front.
"""

import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigurationError
from .models import MODEL_NAMES, build_model
from .summaries import ROSTER

SCHEMA_VERSION = 1

_ESTIMATOR_KEYS = {
    "abc_kde": {"kind", "bandwidth"},
    "nn_kde": {"kind", "k_grid", "h_grid"},
    "series": {"kind", "regressor", "max_terms", "k_grid", "grid_size",
               "n_estimators", "min_samples_leaf"},
    "adjusted_kde": {"kind", "bandwidth"},
}

_MODEL_KEYS = {
    "gaussian_mean": {"prior_sd", "prior_mean", "obs_sd", "n_obs"},
    "normal_gamma": {"alpha0", "beta0", "tau_sd", "mu0", "nu0", "n_obs", "target"},
    "gaussian_mixture_mean": {"weights", "means", "sds", "obs_sd", "n_obs"},
    "bivariate_gaussian_mean": {"prior_mean", "prior_cov", "obs_cov", "n_obs",
                                "target"},
}


@dataclass
class ExperimentConfig:
    seed: int
    replicates: int
    model_name: str
    model_params: dict
    roster: list
    noise_count: int
    observed_kind: str
    observed_values: list | None
    mode: str
    targets: list          # rates or epsilons
    B: int
    validation_fraction: float
    fresh_validation: int | None
    proposal_cap: int
    estimators: list       # list of dicts with 'kind'
    labels: list           # unique per-estimator labels
    alpha: float
    importance: dict | None
    density_curves: bool
    curve_points: int
    grid_size: int
    output_dir: str | None
    raw: dict = field(default_factory=dict, repr=False)

    def build_model(self):
        return build_model(self.model_name, **self.model_params)


def _require_keys(section, data, allowed, required=()):
    if not isinstance(data, dict):
        raise ConfigurationError(f"section '{section}' must be a mapping")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown keys in '{section}': {sorted(unknown)}")
    missing = set(required) - set(data)
    if missing:
        raise ConfigurationError(f"missing keys in '{section}': {sorted(missing)}")


def _positive_int(section, key, value):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigurationError(f"{section}.{key} must be a positive integer")
    return value


def load_config(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return validate_config(data)


def validate_config(data):
    """Validate a parsed config mapping and return an ExperimentConfig."""
    top_allowed = {"schema_version", "seed", "replicates", "output_dir",
                   "model", "observed", "summaries", "distance", "sampling",
                   "estimators", "importance", "comparisons", "outputs"}
    _require_keys("config", data, top_allowed,
                  required={"schema_version", "seed", "model", "summaries",
                            "sampling", "estimators"})
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"schema_version {data['schema_version']} unsupported "
            f"(expected {SCHEMA_VERSION})")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigurationError("seed must be a nonnegative integer")
    replicates = _positive_int("config", "replicates", data.get("replicates", 1))

    model = dict(data["model"])
    name = model.pop("name", None)
    if name not in MODEL_NAMES:
        raise ConfigurationError(f"model.name must be one of {MODEL_NAMES}")
    _require_keys("model", model, _MODEL_KEYS[name])
    build_model(name, **model)  # constructor validates hyperparameters

    observed = data.get("observed", {"kind": "standard_normal"})
    _require_keys("observed", observed, {"kind", "values"}, required={"kind"})
    obs_kind = observed["kind"]
    obs_values = None
    if obs_kind == "fixed_means":
        obs_values = observed.get("values")
        if not obs_values or not all(isinstance(v, (int, float)) for v in obs_values):
            raise ConfigurationError("observed.values must be a list of numbers")
        obs_values = [float(v) for v in obs_values]
    elif obs_kind != "standard_normal":
        raise ConfigurationError(
            "observed.kind must be 'standard_normal' or 'fixed_means'")
    elif "values" in observed:
        raise ConfigurationError("observed.values only applies to fixed_means")

    summ = data["summaries"]
    _require_keys("summaries", summ, {"roster", "noise_count"}, required={"roster"})
    roster = list(summ["roster"])
    bad = [s for s in roster if s not in ROSTER]
    if bad:
        raise ConfigurationError(f"unknown summary statistics {bad}; roster is {ROSTER}")
    noise_count = summ.get("noise_count", 0)
    if not isinstance(noise_count, int) or noise_count < 0:
        raise ConfigurationError("summaries.noise_count must be a nonnegative integer")
    if not roster and noise_count == 0:
        raise ConfigurationError("summaries.roster empty with no noise statistics")
    if obs_kind == "fixed_means" and roster != ["mean"]:
        raise ConfigurationError("fixed_means requires roster [mean]")

    distance = data.get("distance", "euclidean-standardized")
    if distance != "euclidean-standardized":
        raise ConfigurationError("distance must be 'euclidean-standardized'")

    samp = data["sampling"]
    _require_keys("sampling", samp,
                  {"mode", "rates", "epsilons", "B", "validation_fraction",
                   "fresh_validation", "proposal_cap"},
                  required={"mode", "B"})
    mode = samp["mode"]
    if mode == "rate":
        targets = samp.get("rates")
        if "epsilons" in samp:
            raise ConfigurationError("mode 'rate' does not take epsilons")
        if not targets or not all(0 < float(r) <= 1 for r in targets):
            raise ConfigurationError("sampling.rates must be numbers in (0, 1]")
    elif mode == "epsilon":
        targets = samp.get("epsilons")
        if "rates" in samp:
            raise ConfigurationError("mode 'epsilon' does not take rates")
        if not targets or not all(float(e) > 0 for e in targets):
            raise ConfigurationError("sampling.epsilons must be positive numbers")
    else:
        raise ConfigurationError("sampling.mode must be 'rate' or 'epsilon'")
    targets = [float(t) for t in targets]
    B = _positive_int("sampling", "B", samp["B"])
    fraction = float(samp.get("validation_fraction", 0.5))
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError("sampling.validation_fraction must be in (0, 1)")
    fresh = samp.get("fresh_validation")
    if fresh is not None:
        fresh = _positive_int("sampling", "fresh_validation", fresh)
    cap = _positive_int("sampling", "proposal_cap",
                        samp.get("proposal_cap", 10_000_000))

    est_list = data["estimators"]
    if not isinstance(est_list, list) or not est_list:
        raise ConfigurationError("estimators must be a non-empty list")
    estimators = []
    for i, spec in enumerate(est_list):
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigurationError(f"estimators[{i}] needs a 'kind'")
        kind = spec["kind"]
        if kind not in _ESTIMATOR_KEYS:
            raise ConfigurationError(
                f"unknown estimator kind '{kind}'; "
                f"choose from {sorted(_ESTIMATOR_KEYS)}")
        _require_keys(f"estimators[{i}]", spec, _ESTIMATOR_KEYS[kind])
        if kind == "series" and spec.get("regressor") not in (
                None, "nearest-neighbors", "tree-ensemble"):
            raise ConfigurationError(
                "series.regressor must be nearest-neighbors or tree-ensemble")
        estimators.append(dict(spec))
    total = {}
    for spec in estimators:
        total[spec["kind"]] = total.get(spec["kind"], 0) + 1
    counts = {}
    labels = []
    for spec in estimators:
        k = spec["kind"]
        if total[k] == 1:
            labels.append(k)
        else:
            counts[k] = counts.get(k, 0) + 1
            labels.append(f"{k}_{counts[k]}")

    imp = data.get("importance")
    if imp is not None:
        _require_keys("importance", imp,
                      {"enabled", "n_terms", "n_estimators", "min_samples_leaf"})
        if not imp.get("enabled", False):
            imp = None
        else:
            imp = {"n_terms": _positive_int("importance", "n_terms",
                                            imp.get("n_terms", 10)),
                   "n_estimators": _positive_int("importance", "n_estimators",
                                                 imp.get("n_estimators", 100)),
                   "min_samples_leaf": _positive_int("importance", "min_samples_leaf",
                                                     imp.get("min_samples_leaf", 5))}

    comp = data.get("comparisons", {})
    _require_keys("comparisons", comp, {"alpha"})
    alpha = float(comp.get("alpha", 0.05))
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("comparisons.alpha must be in (0, 1)")

    outputs = data.get("outputs", {})
    _require_keys("outputs", outputs, {"density_curves", "curve_points", "grid_size"})
    curves = bool(outputs.get("density_curves", False))
    curve_points = _positive_int("outputs", "curve_points",
                                 outputs.get("curve_points", 256))
    grid_size = _positive_int("outputs", "grid_size",
                              outputs.get("grid_size", 1024))
    if grid_size < 16:
        raise ConfigurationError("outputs.grid_size must be at least 16")

    return ExperimentConfig(
        seed=seed, replicates=replicates, model_name=name, model_params=model,
        roster=roster, noise_count=noise_count, observed_kind=obs_kind,
        observed_values=obs_values, mode=mode, targets=targets, B=B,
        validation_fraction=fraction, fresh_validation=fresh, proposal_cap=cap,
        estimators=estimators, labels=labels, alpha=alpha, importance=imp,
        density_curves=curves, curve_points=curve_points, grid_size=grid_size,
        output_dir=data.get("output_dir"), raw=data)


def resolve_output_dir(config, override=None, config_path=None):
    """Output directory: CLI flag > config > $LFCDE_RESULTS_DIR/<stem> > ./results."""
    if override:
        return str(override)
    if config.output_dir:
        return config.output_dir
    root = os.environ.get("LFCDE_RESULTS_DIR", "results")
    stem = "run"
    if config_path is not None:
        stem = os.path.splitext(os.path.basename(str(config_path)))[0]
    return os.path.join(root, stem)
