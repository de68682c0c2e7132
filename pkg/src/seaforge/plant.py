"""Cable-driven SEA plant model and desired-impedance targets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .lti import Polynomial, RationalTF, is_stable, tf_minreal

__all__ = [
    "SeaPlant",
    "DesiredImpedance",
    "DEFAULT_PLANT_CONFIG",
    "default_plant",
    "plant_from_config",
    "load_plant",
    "plant_to_config",
    "desired_impedance",
    "factored_g1",
]

# Identified cable-driven SEA (monic form of G1, ascending coefficients).
DEFAULT_PLANT_CONFIG = {
    "Ks": 0.0484,
    "G1": {"num": [-279.4, -0.1064], "den": [1389.0, 5821.0, 81.64, 1.0]},
    "motor_sat": 44.0,
    "integrator_pole": 0.2394,
}


def factored_g1() -> RationalTF:
    """The second printed form of the identified G1: velocity loop x lag x Ks."""
    velocity = RationalTF([-5778.0, -2.200], [5802.0, 81.44, 1.0])
    lag = RationalTF([1.0], [0.2394, 1.0])
    return RationalTF((velocity.num * lag.num) * 0.04840, velocity.den * lag.den)


@dataclass(frozen=True)
class SeaPlant:
    """Linearized SEA seen from the desired motor velocity.

    Attributes
    ----------
    Ks : float
        Equivalent rotational spring stiffness [N m/rad].
    G1 : RationalTF
        Desired motor velocity -> interaction torque [N m per rad/s].
    V : RationalTF
        Velocity-controlled motor, desired -> actual velocity.
    integrator_pole : float
        Small pole [rad/s] standing in for the pure integrator.
    motor_sat : float
        Motor velocity saturation [rad/s].
    """

    Ks: float
    G1: RationalTF
    V: RationalTF
    integrator_pole: float
    motor_sat: float

    def __post_init__(self):
        _validate(self.Ks, self.G1, self.motor_sat, self.integrator_pole)


def _validate(Ks, G1, motor_sat, integrator_pole):
    if not (math.isfinite(Ks) and Ks > 0):
        raise ValidationError("Ks", f"must be a positive stiffness, got {Ks}")
    if not (math.isfinite(motor_sat) and motor_sat > 0):
        raise ValidationError("motor_sat", f"must be positive, got {motor_sat}")
    if not (math.isfinite(integrator_pole) and integrator_pole > 0):
        raise ValidationError("integrator_pole", f"must be positive, got {integrator_pole}")
    if not G1.is_proper():
        raise ValidationError("G1", "must be proper")
    if not is_stable(G1).stable:
        raise ValidationError("G1", "must be stable (the integrator is replaced by a small pole)")


def _velocity_loop(Ks: float, G1: RationalTF, integrator_pole: float) -> RationalTF:
    # drop the identified pole closest to -integrator_pole, then undo Ks
    poles = list(G1.poles())
    j = int(np.argmin([abs(p + integrator_pole) for p in poles]))
    poles.pop(j)
    den = Polynomial.from_roots(poles, G1.den.lead)
    return tf_minreal(RationalTF(G1.num * (1.0 / Ks), den))


def plant_from_config(config: dict) -> SeaPlant:
    """Build and validate a plant from a PlantConfig mapping."""
    try:
        Ks = float(config["Ks"])
        g = config["G1"]
        num, den = [float(c) for c in g["num"]], [float(c) for c in g["den"]]
        motor_sat = float(config["motor_sat"])
        integrator_pole = float(config["integrator_pole"])
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing from plant config") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError("config", f"malformed value ({exc})") from None
    try:
        G1 = RationalTF(num, den)
    except ValueError as exc:
        raise ValidationError("G1", str(exc)) from None
    _validate(Ks, G1, motor_sat, integrator_pole)
    V = _velocity_loop(Ks, G1, integrator_pole)
    return SeaPlant(Ks=Ks, G1=G1, V=V, integrator_pole=integrator_pole, motor_sat=motor_sat)


def default_plant() -> SeaPlant:
    return plant_from_config(DEFAULT_PLANT_CONFIG)


def load_plant(path) -> SeaPlant:
    with open(Path(path)) as fh:
        return plant_from_config(json.load(fh))


def plant_to_config(plant: SeaPlant) -> dict:
    return {
        "Ks": plant.Ks,
        "G1": {"num": plant.G1.num.coeffs.tolist(), "den": plant.G1.den.coeffs.tolist()},
        "motor_sat": plant.motor_sat,
        "integrator_pole": plant.integrator_pole,
    }


@dataclass(frozen=True)
class DesiredImpedance:
    """Pure-stiffness target ``Zd = alpha * Ks``."""

    alpha: float
    value: float

    @property
    def Zd(self) -> RationalTF:
        return RationalTF.constant(self.value)


def desired_impedance(plant: SeaPlant, alpha: float) -> DesiredImpedance:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"stiffness ratio alpha must lie in [0, 1], got {alpha}")
    return DesiredImpedance(alpha=alpha, value=alpha * plant.Ks)
