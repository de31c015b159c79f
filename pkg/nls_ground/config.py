"""Experiment configuration: one JSON document per run.

A minimal document::

    {
      "schema": 1,
      "scenario": "solve",
      "dimension": 3,
      "components": 1,
      "terms": [{"tag": "separable_power", "component": 0, "mu": 1, "p": 4}],
      "solver": {"rho": [1.0]}
    }

See ``docs-md/config.md`` for every key.

"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .nonlinearity import (
    CouplingProduct,
    LogPower,
    NonlinearitySpec,
    NormPower,
    PiecewisePower,
    SeparablePower,
    SobolevCritical,
)
from .solver import SolveConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SCENARIOS = (
    "solve",
    "sweep-rho",
    "sweep-beta",
    "audit",
    "gn",
    "threshold",
    "bubbles",
    "refine",
)

TERM_TAGS = {
    "separable_power": (SeparablePower, ("component", "mu", "p")),
    "log_power": (LogPower, ("component", "mu", "p")),
    "piecewise_power": (
        PiecewisePower,
        ("component", "mu", "p_small", "p_large"),
    ),
    "norm_power": (NormPower, ("mu", "p")),
    "coupling": (CouplingProduct, ("beta", "exponents")),
    "sobolev_critical": (SobolevCritical, ("theta",)),
}

SOLVER_KEYS = {
    f.name for f in dataclasses.fields(SolveConfig)
} - {"r_max", "n_intervals", "autoscale"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    r_max: float = 20.0
    n_intervals: int = 4000
    autoscale: bool = False

    def __post_init__(self):
        if not self.r_max > 0:
            msg = f"grid.r_max must be positive, got {self.r_max!r}"
            raise ConfigError(msg)
        if self.n_intervals < 16:
            msg = f"grid.n_intervals must be at least 16, got {self.n_intervals!r}"
            raise ConfigError(msg)


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment.

    Attributes:
        scenario: which experiment to run, one of ``SCENARIOS``.
        spec: the nonlinearity.
        grid: the radial grid.
        solver: minimization parameters, grid fields included.
        rho_values: rho vectors of a sweep-rho run.
        betas: coupling strengths of a sweep-beta run.
        eps_values: bubble scales for the bubbles and threshold runs.
        exponents: p values of a gn run.
        refine_levels: number of grid doublings of a refine run.
        output: default output directory.

    """

    scenario: str
    spec: NonlinearitySpec
    grid: GridConfig = field(default_factory=GridConfig)
    solver: Optional[SolveConfig] = None
    rho_values: Tuple[Tuple[float, ...], ...] = ()
    betas: Tuple[float, ...] = ()
    eps_values: Tuple[float, ...] = ()
    exponents: Tuple[float, ...] = ()
    refine_levels: int = 3
    output: Optional[str] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            msg = (
                f"unknown scenario {self.scenario!r}, "
                f"must be one of {', '.join(SCENARIOS)}"
            )
            raise ConfigError(msg)
        required = {
            "sweep-rho": ("rho_values", "axes.rho"),
            "sweep-beta": ("betas", "axes.beta"),
            "bubbles": ("eps_values", "axes.eps"),
            "gn": ("exponents", "axes.p"),
        }
        if self.scenario in required:
            name, key = required[self.scenario]
            if not getattr(self, name):
                msg = f"scenario {self.scenario!r} needs a nonempty {key}"
                raise ConfigError(msg)
        if self.scenario in ("threshold", "bubbles"):
            if not self.spec.has_critical_part:
                msg = f"scenario {self.scenario!r} needs a sobolev_critical term"
                raise ConfigError(msg)
        if self.scenario == "bubbles" and self.spec.dimension not in (3, 4):
            msg = "scenario 'bubbles' needs dimension 3 or 4"
            raise ConfigError(msg)
        for rho in self.rho_values:
            if len(rho) != self.spec.n_components:
                msg = (
                    f"axes.rho entry {list(rho)!r} needs "
                    f"{self.spec.n_components} values"
                )
                raise ConfigError(msg)
        if self.refine_levels < 3:
            msg = "refine.levels must be at least 3"
            raise ConfigError(msg)

    def with_seed(self, seed):
        return dataclasses.replace(
            self, solver=dataclasses.replace(self.solver, seed=seed)
        )

    def with_threads(self, threads):
        return dataclasses.replace(
            self, solver=dataclasses.replace(self.solver, threads=threads)
        )


def term_from_record(record):
    """Build one nonlinearity term from its ``{"tag": ..., ...}`` record."""
    if not isinstance(record, dict) or "tag" not in record:
        msg = f"a term must be an object with a 'tag', got {record!r}"
        raise ConfigError(msg)
    tag = record["tag"]
    try:
        cls, keys = TERM_TAGS[tag]
    except KeyError as error:
        msg = f"unknown term tag {tag!r}, must be one of {sorted(TERM_TAGS)}"
        raise ConfigError(msg) from error
    extra = set(record) - set(keys) - {"tag"}
    if extra:
        msg = f"unexpected keys {sorted(extra)} in {tag} term"
        raise ConfigError(msg)
    try:
        kwargs = {key: record[key] for key in keys}
    except KeyError as error:
        msg = f"{tag} term is missing {error.args[0]!r}"
        raise ConfigError(msg) from error
    for key in ("exponents", "theta"):
        if key in kwargs:
            kwargs[key] = tuple(float(x) for x in kwargs[key])
    return cls(**kwargs)


def term_to_record(term):
    for tag, (cls, keys) in TERM_TAGS.items():
        if type(term) is cls:
            record = {"tag": tag}
            for key in keys:
                value = getattr(term, key)
                record[key] = list(value) if isinstance(value, tuple) else value
            return record
    msg = f"no record format for {term!r}"
    raise TypeError(msg)


def _section(document, key):
    value = document.get(key, {})
    if not isinstance(value, dict):
        msg = f"'{key}' must be an object, got {value!r}"
        raise ConfigError(msg)
    return value


def parse_config(document):
    """Validate a decoded JSON document into an ExperimentConfig."""
    if not isinstance(document, dict):
        msg = "the configuration must be a JSON object"
        raise ConfigError(msg)
    schema = document.get("schema")
    if schema != SCHEMA_VERSION:
        msg = f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}"
        raise ConfigError(msg)
    try:
        return _parse(document)
    except ConfigError:
        raise
    except (TypeError, ValueError) as error:
        raise ConfigError(str(error)) from error


def _parse(document):
    for key in ("scenario", "dimension", "components"):
        if key not in document:
            msg = f"missing required key '{key}'"
            raise ConfigError(msg)
    terms = document.get("terms", [])
    if not isinstance(terms, list):
        msg = "'terms' must be a list"
        raise ConfigError(msg)
    spec = NonlinearitySpec(
        int(document["dimension"]),
        int(document["components"]),
        tuple(term_from_record(record) for record in terms),
    )

    grid = GridConfig(**_section(document, "grid"))
    axes = _section(document, "axes")
    rho_values = tuple(
        tuple(float(x) for x in rho) for rho in axes.get("rho", [])
    )

    solver = dict(_section(document, "solver"))
    unknown = set(solver) - SOLVER_KEYS
    if unknown:
        msg = f"unknown solver keys {sorted(unknown)}"
        raise ConfigError(msg)
    if "rho" not in solver:
        solver["rho"] = (
            rho_values[0] if rho_values else (1.0,) * spec.n_components
        )
    for key in ("rho", "widths", "amplitudes"):
        if solver.get(key) is not None:
            solver[key] = tuple(float(x) for x in solver[key])
    solver = SolveConfig(
        **solver,
        r_max=grid.r_max,
        n_intervals=grid.n_intervals,
        autoscale=grid.autoscale,
    )
    if len(solver.rho) != spec.n_components:
        msg = f"solver.rho needs {spec.n_components} values"
        raise ConfigError(msg)

    refine = _section(document, "refine")
    return ExperimentConfig(
        scenario=document["scenario"],
        spec=spec,
        grid=grid,
        solver=solver,
        rho_values=rho_values,
        betas=tuple(float(b) for b in axes.get("beta", [])),
        eps_values=tuple(float(e) for e in axes.get("eps", [])),
        exponents=tuple(float(p) for p in axes.get("p", [])),
        refine_levels=int(refine.get("levels", 3)),
        output=document.get("output"),
    )


def load_config(path):
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        msg = f"cannot read configuration {str(path)!r}: {error}"
        raise ConfigError(msg) from error
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        msg = f"{path}: invalid JSON at line {error.lineno}: {error.msg}"
        raise ConfigError(msg) from error
    config = parse_config(document)
    logger.debug("loaded %s scenario from %s", config.scenario, path)
    return config


def config_to_dict(config):
    """The JSON document that parses back to ``config``."""
    solver = {
        key: getattr(config.solver, key)
        for key in sorted(SOLVER_KEYS)
        if getattr(config.solver, key) is not None
    }
    for key, value in solver.items():
        if isinstance(value, tuple):
            solver[key] = list(value)
    document = {
        "schema": SCHEMA_VERSION,
        "scenario": config.scenario,
        "dimension": config.spec.dimension,
        "components": config.spec.n_components,
        "terms": [term_to_record(term) for term in config.spec.terms],
        "grid": dataclasses.asdict(config.grid),
        "solver": solver,
        "axes": {
            "rho": [list(rho) for rho in config.rho_values],
            "beta": list(config.betas),
            "eps": list(config.eps_values),
            "p": list(config.exponents),
        },
        "refine": {"levels": config.refine_levels},
    }
    if config.output is not None:
        document["output"] = config.output
    return document
