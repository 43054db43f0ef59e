"""Experiment configuration files: JSON validated against a bundled schema."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .hypergroup import QuadratureSpec
from .specfun import JacobiParams
from .walk import HyperbolicSpaceSpec, StepDistribution, hyperbolic_params

DEFAULT_SEED = 20240601


def schema() -> dict:
    text = resources.files("jacobiwalk").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def validate(doc: dict) -> dict:
    """Check ``doc`` against the schema; unknown keys are errors."""
    validator = jsonschema.Draft202012Validator(schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is None:
        return doc
    # for oneOf branches report the failure inside the branch that matched best
    while err.context:
        err = jsonschema.exceptions.best_match(err.context)
    where = "/".join(str(x) for x in err.absolute_path) or "<root>"
    raise ConfigError(f"config invalid at {where}: {err.message}")


def load(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return validate(doc)


def params_of(doc: dict) -> JacobiParams:
    p = doc["params"]
    if "hyperbolic" in p:
        h = p["hyperbolic"]
        return hyperbolic_params(HyperbolicSpaceSpec(h["d"], h["k"]))
    return JacobiParams(p["alpha"], p["beta"])


def nu_of(doc: dict) -> StepDistribution:
    if "nu" not in doc:
        raise ConfigError("this experiment needs a step law 'nu'")
    return StepDistribution.from_dict(doc["nu"])


def quad_of(doc: dict) -> QuadratureSpec:
    q = doc.get("quadrature", {})
    base = QuadratureSpec()
    return QuadratureSpec(q.get("order_r", base.order_r), q.get("order_phi", base.order_phi),
                          q.get("grading", base.grading))


def grid(value) -> np.ndarray:
    """Expand a grid given as a list, ``{"linspace": [a, b, n]}`` or
    ``{"geomspace": [a, b, n]}``."""
    if isinstance(value, dict):
        if "linspace" in value:
            a, b, n = value["linspace"]
            return np.linspace(a, b, n)
        a, b, n = value["geomspace"]
        return np.geomspace(a, b, n)
    return np.asarray(value, dtype=float)


def require(exp: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in exp]
    if missing:
        raise ConfigError(f"experiment {exp.get('check') or exp.get('theorem') or exp['type']!r} "
                          f"needs {', '.join(missing)}")
