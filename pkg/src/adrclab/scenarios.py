"""Scenario file ingestion: JSON schema validation with actionable messages,
performed before any numerics run. Unknown fields are rejected everywhere."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .observer import EsoState, eso_gains
from .plant import PlantConfig, reference_from_json, uncertainty_from_json
from .controller import ControllerConfig
from .simulate import Scenario
from .stability import PhiVector

# Slack added to the measured initial estimate deviation when rho0 is not
# given: rho0 is a bound the run must satisfy, not a measured value.
RHO0_SLACK = 1e-6


class ScenarioError(ValueError):
    """A scenario file failed schema or invariant validation."""


def _require_keys(data: dict, required: set[str], optional: set[str],
                  where: str) -> None:
    if not isinstance(data, dict):
        raise ScenarioError(f"{where} must be a JSON object")
    unknown = set(data) - required - optional
    if unknown:
        raise ScenarioError(
            f"unknown field(s) {sorted(unknown)} in {where}; "
            f"allowed: {sorted(required | optional)}"
        )
    missing = required - set(data)
    if missing:
        raise ScenarioError(f"missing field(s) {sorted(missing)} in {where}")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number, got {value!r}")
    return float(value)


def _number_list(value: Any, where: str) -> list[float]:
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ScenarioError(f"{where} must be a list of numbers, got {value!r}")
    return [float(v) for v in value]


def _exact(value: Any, where: str) -> Fraction:
    """JSON numbers carry decimal intent: 0.5 becomes exactly 1/2."""
    if isinstance(value, bool):
        raise ScenarioError(f"{where} must be a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"{where}: cannot parse {value!r}: {exc}")
    raise ScenarioError(f"{where} must be a number, got {value!r}")


def scenario_from_dict(data: dict) -> Scenario:
    _require_keys(
        data,
        required={"plant", "controller", "reference", "eso_init", "horizon"},
        optional={"step"},
        where="scenario",
    )
    plant_data = data["plant"]
    _require_keys(
        plant_data,
        required={"n", "b_bar", "b_delta", "uncertainty", "x0"},
        optional=set(),
        where="plant",
    )
    if not isinstance(plant_data["n"], int) or isinstance(plant_data["n"], bool):
        raise ScenarioError("plant.n must be an integer")
    n = plant_data["n"]
    try:
        uncertainty = uncertainty_from_json(plant_data["uncertainty"])
    except ValueError as exc:
        raise ScenarioError(f"plant.uncertainty: {exc}") from exc
    try:
        plant = PlantConfig(
            n=n,
            b_bar=_number(plant_data["b_bar"], "plant.b_bar"),
            b_delta=_number(plant_data["b_delta"], "plant.b_delta"),
            uncertainty=uncertainty,
            x0=tuple(_number_list(plant_data["x0"], "plant.x0")),
        )
    except ValueError as exc:
        raise ScenarioError(f"plant: {exc}") from exc

    ctrl_data = data["controller"]
    _require_keys(
        ctrl_data,
        required={"K", "omega_o", "phi"},
        optional={"rho0", "t0"},
        where="controller",
    )
    try:
        phi = PhiVector([_exact(v, "controller.phi") for v in ctrl_data["phi"]])
    except ValueError as exc:
        raise ScenarioError(f"controller.phi: {exc}") from exc
    if phi.n != n:
        raise ScenarioError(
            f"controller.phi has {phi.n + 1} entries but order n={n} "
            f"requires {n + 1}"
        )

    eso_data = data["eso_init"]
    _require_keys(eso_data, required={"xhat", "fhat"}, optional=set(),
                  where="eso_init")
    eso_init = EsoState(
        xhat=tuple(_number_list(eso_data["xhat"], "eso_init.xhat")),
        fhat=_number(eso_data["fhat"], "eso_init.fhat"),
    )
    if eso_init.n != n:
        raise ScenarioError(
            f"eso_init.xhat has length {eso_init.n}, expected n={n}"
        )

    if "rho0" in ctrl_data:
        rho0 = _number(ctrl_data["rho0"], "controller.rho0")
    else:
        deviations = [
            abs(plant.x0[i] - eso_init.xhat[i]) for i in range(1, n)
        ]
        rho0 = (max(deviations) if deviations else 0.0) + RHO0_SLACK
    try:
        controller = ControllerConfig(
            K=tuple(_number_list(ctrl_data["K"], "controller.K")),
            b_bar=plant.b_bar,
            omega_o=_number(ctrl_data["omega_o"], "controller.omega_o"),
            phi=phi,
            rho0=rho0,
            t0=_number(ctrl_data.get("t0", 0.0), "controller.t0"),
        )
        # Gain headroom check at load time: fails early with a clear message
        # when omega_o^{n+1} leaves the accurate double range.
        eso_gains(phi, controller.omega_o)
    except ValueError as exc:
        raise ScenarioError(f"controller: {exc}") from exc

    try:
        reference = reference_from_json(data["reference"])
    except ValueError as exc:
        raise ScenarioError(f"reference: {exc}") from exc

    step = data.get("step", "auto")
    if step == "auto":
        step_value = None
    else:
        step_value = _number(step, "step")
    try:
        return Scenario(
            plant=plant,
            controller=controller,
            reference=reference,
            eso_init=eso_init,
            horizon=_number(data["horizon"], "horizon"),
            step=step_value,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "plant": {
            "n": sc.plant.n,
            "b_bar": sc.plant.b_bar,
            "b_delta": sc.plant.b_delta,
            "uncertainty": sc.plant.uncertainty.to_json_dict(),
            "x0": list(sc.plant.x0),
        },
        "controller": {
            "K": list(sc.controller.K),
            "omega_o": sc.controller.omega_o,
            "phi": [
                float(v) if v.denominator != 1 else v.numerator
                for v in sc.controller.phi.phi
            ],
            "rho0": sc.controller.rho0,
            "t0": sc.controller.t0,
        },
        "reference": sc.reference.to_json_dict(),
        "eso_init": {
            "xhat": list(sc.eso_init.xhat),
            "fhat": sc.eso_init.fhat,
        },
        "horizon": sc.horizon,
        "step": "auto" if sc.step is None else sc.step,
    }


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file. Raises ScenarioError with the
    offending field path on any schema or physical-invariant violation."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(data)
