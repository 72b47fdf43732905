"""
Run configuration files.

A YAML document with the sections below; every key is optional and defaults to the
matching constant in settings.py. Unknown sections or keys are rejected.
"""

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from src.config.settings import (
    DEFAULT_CHANGE_TOL, DEFAULT_CURVE_POINTS, DEFAULT_DT, DEFAULT_EVALUATOR_WEIGHTS, DEFAULT_FEAS_TOL,
    DEFAULT_FORECAST_A, DEFAULT_FORECAST_B, DEFAULT_FORECAST_C, DEFAULT_FORECAST_WINDOW,
    DEFAULT_FWL, DEFAULT_FWS_SOFT_PENALTY, DEFAULT_GA_CROSSOVER_PROB, DEFAULT_GA_ELITISM,
    DEFAULT_GA_GENERATIONS, DEFAULT_GA_MUTATION_PROB, DEFAULT_GA_POPULATION, DEFAULT_GA_STALL_GENERATIONS,
    DEFAULT_GA_TOURNAMENT_SIZE, DEFAULT_HORIZON, DEFAULT_INITIAL_LEVEL, DEFAULT_INITIAL_SPILL, DEFAULT_INITIAL_TURB,
    DEFAULT_LARGE_VALUE, DEFAULT_LWL, DEFAULT_MO_SPILL, DEFAULT_MO_TURB, DEFAULT_NHWL, DEFAULT_OPT_TOL,
    DEFAULT_S_L_LEVEL, DEFAULT_S_U_LEVEL, DEFAULT_SEED, DEFAULT_SH_LEVELS, DEFAULT_SPILLWAY_CREST,
    DEFAULT_W_SH, DEFAULT_W_SL, DEFAULT_W_SU, FIXED_SH_LEVEL, OUTPUT_DIR, RUN_DATABASE_URL,
    WORKER_THREADS,
)
from src.core.engine import ControlMode, FixedWeights, RunConfig
from src.core.planner import SolverSettings
from src.evaluation.evaluator import EvaluatorConfig, j4_emphasis
from src.forecast.generator import ForecastConfig
from src.hydro.curve import StageStorageCurve, storage_from_level
from src.hydro.reservoir import ReservoirSpec
from src.optimization.weight_search import GAConfig
from src.utils.exceptions import ConfigError, OutOfRangeError, ValidationError
from src.utils.file_utils import config_hash

logger = logging.getLogger(__name__)


def default_config() -> Dict[str, Dict[str, Any]]:
    """The fully resolved default configuration."""
    return {
        "reservoir": {
            "fwl": DEFAULT_FWL,
            "nhwl": DEFAULT_NHWL,
            "lwl": DEFAULT_LWL,
            "spillway_crest": DEFAULT_SPILLWAY_CREST,
            "mo_turb": DEFAULT_MO_TURB,
            "mo_spill": DEFAULT_MO_SPILL,
            "dt": DEFAULT_DT,
            "curve": [list(p) for p in DEFAULT_CURVE_POINTS],
        },
        "run": {
            "horizon": DEFAULT_HORIZON,
            "mode": ControlMode.PDMPC.value,
            "seed": DEFAULT_SEED,
            "initial_level": DEFAULT_INITIAL_LEVEL,
            "initial_turb": DEFAULT_INITIAL_TURB,
            "initial_spill": DEFAULT_INITIAL_SPILL,
            "change_tol": DEFAULT_CHANGE_TOL,
            "custom_genes": None,
            "custom_sh_level": FIXED_SH_LEVEL,
        },
        "forecast": {
            "a": DEFAULT_FORECAST_A,
            "b": DEFAULT_FORECAST_B,
            "c": DEFAULT_FORECAST_C,
            "window": DEFAULT_FORECAST_WINDOW,
            "certain": False,
        },
        "ga": {
            "population": DEFAULT_GA_POPULATION,
            "generations": DEFAULT_GA_GENERATIONS,
            "tournament_size": DEFAULT_GA_TOURNAMENT_SIZE,
            "crossover_prob": DEFAULT_GA_CROSSOVER_PROB,
            "mutation_prob": DEFAULT_GA_MUTATION_PROB,
            "elitism": DEFAULT_GA_ELITISM,
            "stall_generations": DEFAULT_GA_STALL_GENERATIONS,
            "workers": WORKER_THREADS,
        },
        "evaluator": {
            "weights": list(DEFAULT_EVALUATOR_WEIGHTS),
            "large_value": DEFAULT_LARGE_VALUE,
            "s_u_level": DEFAULT_S_U_LEVEL,
            "s_l_level": DEFAULT_S_L_LEVEL,
            "w_su": DEFAULT_W_SU,
            "w_sl": DEFAULT_W_SL,
            "w_sh": DEFAULT_W_SH,
            "j4_mode": "default",
        },
        "search": {
            "f": None,
            "sh_levels": list(DEFAULT_SH_LEVELS),
        },
        "solver": {
            "feas_tol": DEFAULT_FEAS_TOL,
            "opt_tol": DEFAULT_OPT_TOL,
            "fws_soft_penalty": DEFAULT_FWS_SOFT_PENALTY,
        },
        "output": {
            "dir": str(OUTPUT_DIR),
        },
        "database": {
            "url": RUN_DATABASE_URL or None,
        },
    }


# Sections and keys that do not change any computed number stay out of the hash
UNHASHED = {"output": None, "database": None, "ga": ("workers",)}


def merge_config(resolved: Dict[str, Dict[str, Any]], overrides: Dict[str, Any], source: str = "config"):
    """Merge a {section: {key: value}} mapping into `resolved`, rejecting unknown names."""
    if not isinstance(overrides, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections")
    for section, values in overrides.items():
        if section not in resolved:
            raise ConfigError(f"{source}: unknown section {section!r}")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: section {section!r} must be a mapping")
        for key, value in values.items():
            if key not in resolved[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            resolved[section][key] = value
    return resolved


def load_config(path: Optional[Union[str, Path]] = None) -> Dict[str, Dict[str, Any]]:
    """
    Read a YAML run configuration on top of the defaults.

    Args:
        path: YAML file; None or "" gives the defaults

    Returns:
        Fully resolved configuration dictionary
    """
    resolved = default_config()
    if path:
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                document = yaml.safe_load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse config {path}: {e}") from e
        merge_config(resolved, document or {}, source=str(path))
        logger.info(f"⚙️ Loaded run configuration from {path}")
    _resolve_curve(resolved)
    return resolved


def _resolve_curve(resolved: Dict[str, Dict[str, Any]]):
    curve = resolved["reservoir"]["curve"]
    if isinstance(curve, (str, Path)):
        points = StageStorageCurve.load(curve).points()
        resolved["reservoir"]["curve"] = [list(p) for p in points]


def hashable_config(resolved: Dict[str, Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    view = copy.deepcopy(resolved)
    for section, keys in UNHASHED.items():
        if keys is None:
            view.pop(section, None)
        else:
            for key in keys:
                view[section].pop(key, None)
    return view


@dataclass(frozen=True)
class RunSettings:
    """Typed objects built from a resolved configuration."""
    spec: ReservoirSpec
    run: RunConfig
    change_tol: float
    output_dir: Path
    database_url: Optional[str]
    resolved: Dict[str, Dict[str, Any]]
    config_hash: str


def build_settings(resolved: Dict[str, Dict[str, Any]]) -> RunSettings:
    """
    Turn a resolved configuration into the reservoir spec and run config.

    Raises:
        ConfigError: a value has the wrong type or violates its invariants
    """
    try:
        r = resolved["reservoir"]
        spec = ReservoirSpec(
            fwl=float(r["fwl"]), nhwl=float(r["nhwl"]), lwl=float(r["lwl"]),
            spillway_crest=float(r["spillway_crest"]), mo_turb=float(r["mo_turb"]),
            mo_spill=float(r["mo_spill"]), dt=float(r["dt"]),
            curve=StageStorageCurve.from_points((float(h), float(s)) for h, s in r["curve"]),
        )

        fc = resolved["forecast"]
        if fc["certain"]:
            forecast = ForecastConfig.certain()
        else:
            forecast = ForecastConfig(a=float(fc["a"]), b=float(fc["b"]), c=float(fc["c"]),
                                      window=int(fc["window"]))

        run = resolved["run"]
        g = resolved["ga"]
        ga = GAConfig(
            population=int(g["population"]), generations=int(g["generations"]),
            tournament_size=int(g["tournament_size"]), crossover_prob=float(g["crossover_prob"]),
            mutation_prob=float(g["mutation_prob"]), elitism=int(g["elitism"]),
            stall_generations=int(g["stall_generations"]),
            seed=int(run["seed"]), workers=int(g["workers"]),
        )

        e = resolved["evaluator"]
        evaluator = EvaluatorConfig.from_levels(
            spec, float(e["s_u_level"]), float(e["s_l_level"]),
            weights=tuple(float(w) for w in e["weights"]), large_value=float(e["large_value"]),
            w_su=float(e["w_su"]), w_sl=float(e["w_sl"]), w_sh=float(e["w_sh"]),
        )
        evaluator = j4_emphasis(evaluator, str(e["j4_mode"]))

        custom = None
        if run["custom_genes"] is not None:
            custom = FixedWeights(tuple(run["custom_genes"]), float(run["custom_sh_level"]))

        storage_from_level(spec.curve, float(run["initial_level"]))

        s = resolved["search"]
        sv = resolved["solver"]
        cfg = RunConfig(
            horizon=int(run["horizon"]),
            mode=ControlMode.parse(str(run["mode"])),
            forecast=forecast,
            ga=ga,
            evaluator=evaluator,
            initial_level=float(run["initial_level"]),
            initial_turb=float(run["initial_turb"]),
            initial_spill=float(run["initial_spill"]),
            seed=int(run["seed"]),
            sh_levels=tuple(float(h) for h in s["sh_levels"]),
            f=None if s["f"] is None else float(s["f"]),
            custom=custom,
            solver=SolverSettings(
                feas_tol=float(sv["feas_tol"]), opt_tol=float(sv["opt_tol"]),
                soft_penalty=float(sv["fws_soft_penalty"]),
            ),
        )
    except ConfigError:
        raise
    except (ValidationError, OutOfRangeError) as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"configuration value has the wrong type: {e}") from e

    return RunSettings(
        spec=spec,
        run=cfg,
        change_tol=float(run["change_tol"]),
        output_dir=Path(resolved["output"]["dir"]),
        database_url=resolved["database"]["url"] or None,
        resolved=resolved,
        config_hash=config_hash(hashable_config(resolved)),
    )
