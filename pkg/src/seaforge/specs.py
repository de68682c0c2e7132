"""Restricted and full frequency-band specifications and their evaluation."""

from __future__ import annotations

import json
import math

import numpy as np
from dataclasses import dataclass, field
from pathlib import Path

from .errors import PoleInBandError
from .lti import FreqBand, band_hinf_norm
from .loop import ClosedLoopMaps, positive_real_check
from .plant import SeaPlant

__all__ = [
    "CHANNELS",
    "PASS_RTOL",
    "PUBLISHED_GAMMA1",
    "SpecItem",
    "ItemResult",
    "SpecReport",
    "default_spec_set",
    "reference_gamma1",
    "recalibrated_gamma1",
    "evaluate",
    "specs_to_json",
    "specs_from_json",
    "load_specs",
]

CHANNELS = ("phe_w", "phu", "dt", "du", "nt", "nu", "passivity")
PASS_RTOL = 1e-6

OMEGA_E = 12 * math.pi  # rendering band edge (6 Hz)
OMEGA_U = 12 * math.pi  # control-effort band edge (6 Hz)
OMEGA_N = 40 * math.pi  # noise band start (20 Hz)
GAMMA3 = 0.03
GAMMA5 = 0.3

# weighted rendering-error bounds reported for Zd = alpha*Ks
PUBLISHED_GAMMA1 = {0.0: 0.054, 0.3: 0.029, 0.6: 0.016, 0.9: 0.004}


@dataclass(frozen=True)
class SpecItem:
    """One gain bound ``|T(jw)| <= gamma`` for ``w`` in ``band``."""

    channel: str
    gamma: float
    band: FreqBand = FreqBand()
    hard: bool = False

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}; expected one of {CHANNELS}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if self.channel == "passivity":
            if self.gamma != 1.0 or self.band != FreqBand():
                raise ValueError("the passivity item is fixed to gamma = 1 on [0, inf)")
            object.__setattr__(self, "hard", True)

    @classmethod
    def passivity(cls) -> "SpecItem":
        return cls("passivity", 1.0, FreqBand(), True)

    def to_dict(self) -> dict:
        hi = "inf" if math.isinf(self.band.hi) else self.band.hi
        return {"channel": self.channel, "gamma": self.gamma, "band": [self.band.lo, hi], "hard": self.hard}

    @classmethod
    def from_dict(cls, d: dict) -> "SpecItem":
        lo, hi = d.get("band", [0.0, "inf"])
        hi = math.inf if (isinstance(hi, str) and hi.lower() in ("inf", "infinity")) else float(hi)
        return cls(str(d["channel"]), float(d["gamma"]), FreqBand(float(lo), hi), bool(d.get("hard", False)))


@dataclass(frozen=True)
class ItemResult:
    item: SpecItem
    achieved: float
    argmax_omega: float
    margin: float
    passed: bool

    @property
    def level(self) -> float:
        return self.achieved / self.item.gamma


@dataclass(frozen=True)
class SpecReport:
    items: tuple
    stable: bool
    abscissa: float
    all_pass: bool
    level: float
    passivity_cross_check: bool | None = None

    @property
    def overall_pass(self) -> bool:
        return self.all_pass

    @property
    def soft_level(self) -> float:
        """Worst normalized level over the soft items only."""
        return max((r.level for r in self.items if not r.item.hard), default=0.0)

    @property
    def hard_pass(self) -> bool:
        return all(r.passed for r in self.items if r.item.hard)

    def item(self, channel: str) -> ItemResult:
        for r in self.items:
            if r.item.channel == channel:
                return r
        raise KeyError(channel)

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "overall_pass": self.all_pass,
            "stable": self.stable,
            "spectral_abscissa": num(self.abscissa),
            "level": num(self.level),
            "soft_level": num(self.soft_level),
            "passivity_cross_check": self.passivity_cross_check,
            "items": [
                {
                    **r.item.to_dict(),
                    "achieved": num(r.achieved),
                    "argmax_omega": num(r.argmax_omega),
                    "margin": num(r.margin),
                    "normalized": num(r.level),
                    "pass": r.passed,
                }
                for r in self.items
            ],
        }


def default_spec_set(
    plant: SeaPlant,
    gamma1: float,
    *,
    gamma4: float | None = None,
    gamma6: float | None = None,
) -> list[SpecItem]:
    """Rendering, effort, disturbance, noise and passivity bounds.

    ``gamma4`` / ``gamma6`` add the optional disturbance->effort and
    noise->effort items.
    """
    if not gamma1 > 0:
        raise ValueError("gamma1 must be positive")
    items = [
        SpecItem("phe_w", gamma1, FreqBand(0.0, OMEGA_E)),
        SpecItem("phu", plant.motor_sat, FreqBand(0.0, OMEGA_U)),
        SpecItem("dt", GAMMA3, FreqBand()),
        SpecItem("nt", GAMMA5, FreqBand(OMEGA_N, math.inf)),
    ]
    if gamma4 is not None:
        items.append(SpecItem("du", gamma4, FreqBand()))
    if gamma6 is not None:
        items.append(SpecItem("nu", gamma6, FreqBand(OMEGA_N, math.inf)))
    items.append(SpecItem.passivity())
    return items


def reference_gamma1(plant: SeaPlant | None = None) -> float:
    """Achieved ``sup |T_phe|`` on the rendering band for the published
    third-order pair at ``Zd = 0.6 Ks`` with ``We = 1`` (channel units, N m/rad).
    """
    from .controllers import hinf3
    from .loop import build_generalized_plant, close_loop
    from .plant import default_plant, desired_impedance

    plant = plant or default_plant()
    G = build_generalized_plant(plant, desired_impedance(plant, 0.6))
    return band_hinf_norm(close_loop(G, hinf3()).T_phe, FreqBand(0.0, OMEGA_E)).value


def recalibrated_gamma1(plant: SeaPlant | None = None, alpha: float = 0.6) -> float:
    """Published per-ratio weighted bounds mapped to ``We = 1`` units.

    The table is scaled so its ``alpha = 0.6`` entry equals
    :func:`reference_gamma1`; other ratios are linearly interpolated.
    """
    keys = sorted(PUBLISHED_GAMMA1)
    if not keys[0] <= alpha <= keys[-1]:
        raise ValueError(f"alpha must lie in [{keys[0]}, {keys[-1]}] for a recalibrated gamma1")
    g = float(np.interp(alpha, keys, [PUBLISHED_GAMMA1[k] for k in keys]))
    return g * reference_gamma1(plant) / PUBLISHED_GAMMA1[0.6]


def evaluate(maps: ClosedLoopMaps, specs) -> SpecReport:
    """Evaluate every item on ``maps``; instability forces an overall fail.

    Raises
    ------
    PoleInBandError
        If a channel has an imaginary-axis pole inside an item's band; the
        error's ``item`` names the offending channel.
    """
    results = []
    cross = None
    for item in specs:
        H = maps.channel(item.channel)
        try:
            r = band_hinf_norm(H, item.band)
        except PoleInBandError as exc:
            raise PoleInBandError(exc.omega, item.channel) from None
        achieved, argmax = r.value, r.argmax_omega
        passed = achieved <= item.gamma * (1.0 + PASS_RTOL)
        if item.channel == "passivity":
            cross = positive_real_check(maps.Zbar).passed == passed
        results.append(ItemResult(item, achieved, argmax, item.gamma - achieved, passed))
    level = max((r.level for r in results), default=0.0)
    all_pass = bool(maps.stable and all(r.passed for r in results))
    return SpecReport(tuple(results), bool(maps.stable), maps.abscissa, all_pass, level, cross)


def specs_to_json(specs) -> str:
    return json.dumps([s.to_dict() for s in specs], indent=2)


def specs_from_json(text: str) -> list[SpecItem]:
    return [SpecItem.from_dict(d) for d in json.loads(text)]


def load_specs(path) -> list[SpecItem]:
    return specs_from_json(Path(path).read_text())
