"""Command-line front end: ``mtd {simulate,fit,predict,residuals,acf,repro-sim}``.

Each subcommand reads a JSON config (optionally layered on a named preset),
validates it strictly, and writes CSV/JSON artifacts to ``--out``.
Exit codes: 0 success, 2 config/schema error, 3 numeric failure, 4 data error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys

import jsonschema
import numpy as np

from . import diagnostics, experiments
from .errors import ContractError, DomainError, NumericalFailure, ParameterError, UnsupportedOperation
from .mcmc import FitConfig, HarmonicDesign, PosteriorSamples, SeriesData, run_fit
from .mtd import Fixed, FromMarginal, MtdModel, acf, simulate, weak_stationarity_check
from .priors import GaussianPrior, LomaxPrior, PoissonPrior, weight_prior_from_config
from .transitions import FAMILY_TAGS, LomaxT

log = logging.getLogger("stationary_mtd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


# --------------------------------------------------------------------------
# schemas
# --------------------------------------------------------------------------

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_num_or_list = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}

MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family", "weights", "params"],
    "properties": {
        "family": {"enum": sorted(FAMILY_TAGS)},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "params": {"type": "object", "additionalProperties": _num_or_list},
    },
}

WEIGHT_PRIOR_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["type", "alpha_s"],
         "properties": {"type": {"const": "sb"}, "alpha_s": {"type": "number", "exclusiveMinimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["type", "alpha0", "a0", "b0"],
         "properties": {"type": {"const": "cdp"}, "alpha0": {"type": "number", "exclusiveMinimum": 0},
                        "a0": {"type": "number", "exclusiveMinimum": 0},
                        "b0": {"type": "number", "exclusiveMinimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["type"],
         "properties": {"type": {"const": "dir"},
                        "shape": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}}},
    ]
}

_PARAM_PRIOR_KEYS = {
    "gaussian": ("mu0", "s0sq", "u0", "v0"),
    "poisson": ("u_lam", "v_lam", "u_gam", "v_gam"),
    "lomax": ("u_alpha", "v_alpha", "u_phi", "v_phi", "beta_sd"),
}

PARAM_PRIOR_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {k: _num for keys in _PARAM_PRIOR_KEYS.values() for k in keys},
}

COVARIATE_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {"period": {"type": "number", "exclusiveMinimum": 0}, "harmonics": _pos_int},
}

_FIT_PROPS = {
    "family": {"type": "string"},
    "L": _pos_int,
    "data": {"type": "string"},
    "weight_prior": WEIGHT_PRIOR_SCHEMA,
    "param_prior": PARAM_PRIOR_SCHEMA,
    "iters": _pos_int,
    "burnin": {"type": "integer", "minimum": 0},
    "thin": _pos_int,
    "seed": {"type": "integer", "minimum": 0},
    "chains": _pos_int,
    "workers": _pos_int,
    "covariates": COVARIATE_SCHEMA,
    "step_sizes": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
    "adapt": {"type": "boolean"},
    "init": {"enum": ["prior_mean", "prior_sample"]},
    "store_z": {"type": "boolean"},
}

SCHEMAS = {
    "simulate": {
        "type": "object", "additionalProperties": False, "required": ["model", "n"],
        "properties": {
            "model": MODEL_SCHEMA,
            "n": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "init": {"oneOf": [{"const": "marginal"},
                               {"type": "object", "additionalProperties": False, "required": ["fixed"],
                                "properties": {"fixed": {"type": "array", "items": _num}}}]},
        },
    },
    "fit": {"type": "object", "additionalProperties": False,
            "required": ["family", "L", "data", "weight_prior"], "properties": _FIT_PROPS},
    "predict": {
        "type": "object", "additionalProperties": False, "required": ["family", "L", "data", "draws", "k"],
        "properties": {
            "family": {"type": "string"}, "L": _pos_int, "data": {"type": "string"},
            "draws": {"type": "string"}, "k": _pos_int, "seed": {"type": "integer", "minimum": 0},
            "levels": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
            "covariates": COVARIATE_SCHEMA,
        },
    },
    "residuals": {
        "type": "object", "additionalProperties": False, "required": ["family", "L", "data", "draws"],
        "properties": {
            "family": {"type": "string"}, "L": _pos_int, "data": {"type": "string"},
            "draws": {"type": "string"}, "seed": {"type": "integer", "minimum": 0},
            "max_draws": _pos_int, "covariates": COVARIATE_SCHEMA,
        },
    },
    "acf": {
        "type": "object", "additionalProperties": False, "required": ["model", "H"],
        "properties": {
            "model": MODEL_SCHEMA, "H": {"type": "integer", "minimum": 0},
            "init": {"enum": ["monte_carlo", "linear"]}, "mc_length": _pos_int,
            "seed": {"type": "integer", "minimum": 0},
        },
    },
    "repro-sim": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "scenarios": {"type": "array", "items": {"enum": [1, 2]}, "minItems": 1},
            "orders": {"type": "array", "items": _pos_int, "minItems": 1},
            "priors": {"type": "array", "items": {"enum": ["sb", "cdp", "dir"]}, "minItems": 1},
            "n": _pos_int, "seed": {"type": "integer", "minimum": 0},
            "fit_preset": {"enum": ["sim", "real", "desk"]},
            "iters": _pos_int, "burnin": {"type": "integer", "minimum": 0}, "thin": _pos_int,
            "workers": _pos_int,
        },
    },
}


def _scenario_model_config(k):
    s = experiments.SCENARIOS[k]
    return {"family": "gaussian", "weights": list(s["weights"]),
            "params": {"mu": s["mu"], "sigma2": s["sigma2"], "rho": list(s["rho"])}}


PRESETS = {
    "sim-scenario1": ("simulate", {"model": _scenario_model_config(1), "n": 2000, "seed": 1}),
    "sim-scenario2": ("simulate", {"model": _scenario_model_config(2), "n": 2000, "seed": 2}),
    "crime-poisson": ("fit", {
        "family": "poisson", "L": 20, "weight_prior": {"type": "sb", "alpha_s": 2},
        "param_prior": {"u_lam": 2, "v_lam": 1, "u_gam": 2, "v_gam": 1},
        "iters": 85000, "burnin": 5000, "thin": 10, "seed": 0, "adapt": True,
    }),
    "precip-lomax": ("fit", {
        "family": "lomax", "L": 10, "weight_prior": {"type": "sb", "alpha_s": 1},
        "param_prior": {"u_alpha": 6, "v_alpha": 1, "u_phi": 3, "v_phi": 20},
        "covariates": {"period": 52, "harmonics": 3},
        "iters": 85000, "burnin": 5000, "thin": 10, "seed": 0, "adapt": True,
    }),
    "repro-sim-desk": ("repro-sim", {"scenarios": [1, 2], "orders": [5, 15, 25],
                                     "priors": ["sb", "cdp", "dir"], "n": 2000, "fit_preset": "desk"}),
}


def validate(command, cfg):
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(f"config error at {pointer}: {err.message}")


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("weight_prior", "model", "params"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(command, path=None, preset=None, seed=None):
    cfg = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
        pcmd, pcfg = PRESETS[preset]
        if pcmd != command:
            raise ConfigError(f"preset {preset!r} belongs to the {pcmd!r} subcommand")
        cfg = copy.deepcopy(pcfg)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
    if seed is not None:
        cfg["seed"] = seed
    validate(command, cfg)
    return cfg


# --------------------------------------------------------------------------
# builders and I/O
# --------------------------------------------------------------------------

def build_model(spec) -> MtdModel:
    L = len(spec["weights"])
    params = spec["params"]
    for k, v in params.items():
        if isinstance(v, list) and len(v) != L:
            raise ConfigError(f"config error at /model/params/{k}: expected {L} values, got {len(v)}")
    per_lag = [{k: (v[l] if isinstance(v, list) else v) for k, v in params.items()} for l in range(L)]
    family = spec["family"]
    try:
        if family == "lomax" and set(params) <= {"phi", "alpha"}:
            comps = [LomaxT.special(p["phi"], p["alpha"]) for p in per_lag]
        else:
            comps = [FAMILY_TAGS[family](**p) for p in per_lag]
        return MtdModel(spec["weights"], comps)
    except TypeError as exc:
        raise ConfigError(f"config error at /model/params: {exc}")
    except (ParameterError, ContractError) as exc:
        raise ConfigError(f"config error at /model: {exc}")


def read_series(path):
    """CSV with a 'value' column (optionally 't' for ordering), or a headerless numeric column."""
    if not os.path.exists(path):
        raise DataError(f"data file {path} does not exist")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        return np.empty(0)
    head = [c.strip() for c in rows[0]]
    try:
        if "value" in head:
            vi = head.index("value")
            body = rows[1:]
            vals = np.array([float(r[vi]) for r in body])
            if "t" in head:
                ti = head.index("t")
                order = np.argsort(np.array([float(r[ti]) for r in body]), kind="stable")
                vals = vals[order]
        else:
            vals = np.array([float(r[-1]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"could not parse {path}: {exc}")
    return vals


def write_series(path, x, discrete):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["value"])
        for v in x:
            wr.writerow([int(v) if discrete else repr(float(v))])


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.generic,)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(type(obj))


def _param_prior(family, cfg):
    pp = cfg or {}
    allowed = _PARAM_PRIOR_KEYS.get(family, ())
    extra = sorted(set(pp) - set(allowed))
    if extra:
        raise ConfigError(f"config error at /param_prior/{extra[0]}: not a {family} prior hyperparameter")
    cls = {"gaussian": GaussianPrior, "poisson": PoissonPrior, "lomax": LomaxPrior}[family]
    try:
        return cls(**pp)
    except ParameterError as exc:
        raise ConfigError(f"config error at /param_prior: {exc}")


def _series_data(cfg):
    x = read_series(cfg["data"])
    design = None
    if "covariates" in cfg:
        c = cfg["covariates"]
        design = HarmonicDesign(c.get("period", 52.0), c.get("harmonics", 3))
    try:
        return SeriesData(x, cfg["L"], design=design)
    except ContractError as exc:
        raise DataError(str(exc))


def _check_fit_family(family):
    from .mcmc import FIT_FAMILIES
    if family not in FIT_FAMILIES:
        if family in FAMILY_TAGS:
            raise ConfigError(f"config error at /family: {family!r} is a simulation-only family "
                              f"(fits exist for {sorted(FIT_FAMILIES)})")
        raise ConfigError(f"config error at /family: unknown family {family!r}")


def _load_draws(cfg):
    if not os.path.exists(cfg["draws"]):
        raise DataError(f"draws file {cfg['draws']} does not exist")
    try:
        return PosteriorSamples.from_csv(cfg["draws"], cfg["family"], cfg["L"])
    except (ContractError, ValueError) as exc:
        raise DataError(f"could not read draws: {exc}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(cfg, out):
    m = build_model(cfg["model"])
    seed = cfg.get("seed", 0)
    init = cfg.get("init", "marginal")
    init_mode = FromMarginal() if init == "marginal" else Fixed(tuple(init["fixed"]))
    try:
        x, meta = simulate(m, cfg["n"], np.random.default_rng(seed), init_mode)
    except ContractError as exc:
        raise ConfigError(f"config error at /init: {exc}")
    write_series(os.path.join(out, "series.csv"), x, m.discrete)
    meta.update({"seed": seed, "weights": list(m.weights), "params": cfg["model"]["params"]})
    _dump(os.path.join(out, "metadata.json"), meta)
    return meta


def cmd_fit(cfg, out):
    family = cfg["family"]
    _check_fit_family(family)
    data = _series_data(cfg)
    wp = weight_prior_from_config(cfg["weight_prior"])
    pp = _param_prior(family, cfg.get("param_prior"))
    keys = ("iters", "burnin", "thin", "seed", "chains", "workers", "step_sizes", "adapt", "init", "store_z")
    try:
        fc = FitConfig(**{k: cfg[k] for k in keys if k in cfg})
    except ParameterError as exc:
        raise ConfigError(f"config error at /: {exc}")
    samples = run_fit(data, family, wp, pp, fc)
    samples.to_csv(os.path.join(out, "draws.csv"))
    summary = diagnostics.summarize(samples)
    if family == "poisson":
        # marginal mean of the count process
        summary["lam_plus_gamma"] = diagnostics.summarize_array(
            samples.draws["lam"] + samples.draws["gamma"], samples.chain)
    _dump(os.path.join(out, "summary.json"), summary)
    samples.meta.update({"data": cfg["data"], "n": data.n})
    samples.write_metadata(os.path.join(out, "metadata.json"))
    return summary


def cmd_predict(cfg, out):
    _check_fit_family(cfg["family"])
    data = _series_data(cfg)
    samples = _load_draws(cfg)
    fc = diagnostics.predict(samples, data, cfg["k"], seed=cfg.get("seed", 0),
                             levels=tuple(cfg.get("levels", (0.5, 0.8, 0.9, 0.95))))
    diagnostics.write_forecast(os.path.join(out, "forecast.csv"), os.path.join(out, "forecast.json"), fc)
    return fc.summary()


def cmd_residuals(cfg, out):
    _check_fit_family(cfg["family"])
    data = _series_data(cfg)
    samples = _load_draws(cfg)
    draws = None
    if "max_draws" in cfg and cfg["max_draws"] < samples.n_draws:
        draws = np.linspace(0, samples.n_draws - 1, cfg["max_draws"]).round().astype(int)
    res = diagnostics.quantile_residuals(samples, data, np.random.default_rng(cfg.get("seed", 0)), draws)
    diagnostics.write_residuals_csv(os.path.join(out, "residuals.csv"), res)
    diagnostics.write_qq_csv(os.path.join(out, "qq.csv"), diagnostics.qq_table(res))
    ks = res.ks()
    d, crit, ok = res.pooled_ks(0.01)
    report = {"n_draws": int(res.r.shape[0]), "n_clamped": res.n_clamped,
              "ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
              "ks_critical_01": crit, "ks_pass_01": bool(ok)}
    _dump(os.path.join(out, "residuals.json"), report)
    return report


def cmd_acf(cfg, out):
    m = build_model(cfg["model"])
    kw = {k: cfg[k] for k in ("init", "mc_length", "seed") if k in cfg}
    res = acf(m, cfg["H"], **kw)
    rep = weak_stationarity_check(m)
    with open(os.path.join(out, "acf.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["h", "r"])
        for h, v in enumerate(res.r):
            wr.writerow([h, repr(float(v))])
    report = {
        "phi_const": res.phi_const, "mean": res.mean, "second_moment": res.second_moment,
        "init": res.init_method, "init_se": res.init_se,
        "roots": [[float(z.real), float(z.imag)] for z in rep.roots],
        "max_modulus": rep.max_modulus, "all_inside": rep.all_inside,
    }
    _dump(os.path.join(out, "acf.json"), report)
    return report


def cmd_repro_sim(cfg, out):
    kw = {k: cfg[k] for k in ("iters", "burnin", "thin") if k in cfg}
    report = experiments.recovery_grid(
        scenarios=tuple(cfg.get("scenarios", (1, 2))), orders=tuple(cfg.get("orders", (5, 15, 25))),
        priors=tuple(cfg.get("priors", ("sb", "cdp", "dir"))), n=cfg.get("n", 2000), seed=cfg.get("seed", 0),
        fit_preset=cfg.get("fit_preset", "desk"), workers=cfg.get("workers", 1), **kw)
    _dump(os.path.join(out, "recovery.json"), report)
    return report


COMMANDS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict,
    "residuals": cmd_residuals, "acf": cmd_acf, "repro-sim": cmd_repro_sim,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mtd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"named preset ({', '.join(sorted(PRESETS))})")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.preset, args.seed)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ParameterError, ContractError, UnsupportedOperation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
