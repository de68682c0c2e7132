"""Generalized plant assembly, loop closure and passivity maps.

Sign conventions
----------------
* Open loop: ``tau_h = -Ks*phi_h + G1*(d + u) + n`` (``n`` is torque-sensor
  noise, so ``tau_h`` here is the *measured* torque).
* ``tau_d = -Zd*phi_h``, ``e = tau_d - tau_h``, ``e_w = We*e``.
* Controller: ``u = K1*tau_h + K2*e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, IllPosedLoopError, ValidationError
from .lti import (
    FreqBand,
    Polynomial,
    RationalTF,
    _golden_max,
    _grid_limits,
    _scalar_response,
    freqresp,
    is_stable,
    poly_roots,
    tf_minreal,
)
from .plant import DesiredImpedance, SeaPlant

__all__ = [
    "INPUTS",
    "OUTPUTS",
    "GeneralizedPlant",
    "Controller",
    "ClosedLoopMaps",
    "PositiveRealReport",
    "build_generalized_plant",
    "close_loop",
    "passivity_map",
    "positive_real_check",
]

INPUTS = ("phi_h", "d", "n", "u")
OUTPUTS = ("e_w", "u", "tau_h", "e")
PR_TOL = 1e-8
# the scattering map sits within ~1e-8 of unit gain wherever |Zbar| << 1, so
# only (numerically) exact cancellations are allowed there
PASSIVITY_MINREAL_TOL = 1e-12


@dataclass(frozen=True)
class GeneralizedPlant:
    plant: SeaPlant
    target: DesiredImpedance
    We: RationalTF
    channels: dict = field(repr=False)

    def __getitem__(self, key) -> RationalTF:
        out, inp = key
        return self.channels[(out, inp)]


def build_generalized_plant(plant: SeaPlant, target: DesiredImpedance, We=None) -> GeneralizedPlant:
    We = RationalTF.constant(1.0) if We is None else RationalTF.coerce(We)
    if not We.is_proper():
        raise ValidationError("We", "weighting function must be proper")
    if not is_stable(We).stable:
        raise ValidationError("We", "weighting function must be stable")
    Ks, G1, Zd = plant.Ks, plant.G1, target.value
    one, zero = RationalTF.constant(1.0), RationalTF.constant(0.0)
    tau = {"phi_h": RationalTF.constant(-Ks), "d": G1, "n": one, "u": G1}
    e = {"phi_h": RationalTF.constant(Ks - Zd), "d": -G1, "n": -one, "u": -G1}
    ch = {}
    for inp in INPUTS:
        ch[("tau_h", inp)] = tau[inp]
        ch[("e", inp)] = e[inp]
        ch[("e_w", inp)] = We * e[inp]
        ch[("u", inp)] = one if inp == "u" else zero
    return GeneralizedPlant(plant=plant, target=target, We=We, channels=ch)


@dataclass(frozen=True)
class Controller:
    """Two-input output-feedback controller ``u = K1*tau_h + K2*e``."""

    K1: RationalTF
    K2: RationalTF

    def __post_init__(self):
        object.__setattr__(self, "K1", RationalTF.coerce(self.K1))
        object.__setattr__(self, "K2", RationalTF.coerce(self.K2))

    @property
    def order(self) -> int:
        return max(self.K1.den.degree, self.K2.den.degree)

    @classmethod
    def zero(cls) -> "Controller":
        return cls(RationalTF.constant(0.0), RationalTF.constant(0.0))

    def is_proper(self) -> bool:
        return self.K1.is_proper() and self.K2.is_proper()

    def stability(self):
        return is_stable(self.K1), is_stable(self.K2)

    def to_dict(self) -> dict:
        return {
            "K1": {"num": self.K1.num.coeffs.tolist(), "den": self.K1.den.coeffs.tolist()},
            "K2": {"num": self.K2.num.coeffs.tolist(), "den": self.K2.den.coeffs.tolist()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Controller":
        try:
            return cls(
                RationalTF(data["K1"]["num"], data["K1"]["den"]),
                RationalTF(data["K2"]["num"], data["K2"]["den"]),
            )
        except KeyError as exc:
            raise ValidationError(str(exc.args[0]), "missing from controller file") from None


@dataclass(frozen=True)
class ClosedLoopMaps:
    """Closed-loop channels (all minreal'd).

    ``T_nt`` is noise -> measured torque (the literal open-loop output);
    ``T_nt_true`` is noise -> physical interaction torque, which is what
    noise-rejection bounds constrain.
    """

    T_phe_w: RationalTF
    T_phe: RationalTF
    T_phu: RationalTF
    T_dt: RationalTF
    T_du: RationalTF
    T_nt: RationalTF
    T_nt_true: RationalTF
    T_nu: RationalTF
    T_pht: RationalTF
    Z: RationalTF
    Zbar: RationalTF
    W_pass: RationalTF
    stable: bool
    abscissa: float
    char_poly: Polynomial
    Zd: float
    Ks: float

    def channel(self, name: str) -> RationalTF:
        return getattr(self, _CHANNEL_ATTR[name])


_CHANNEL_ATTR = {
    "phe_w": "T_phe_w",
    "phe": "T_phe",
    "phu": "T_phu",
    "dt": "T_dt",
    "du": "T_du",
    "nt": "T_nt_true",
    "nt_meas": "T_nt",
    "nu": "T_nu",
    "pht": "T_pht",
    "Z": "Z",
    "Zbar": "Zbar",
    "W_pass": "W_pass",
    "passivity": "W_pass",
}


def close_loop(G: GeneralizedPlant, K: Controller) -> ClosedLoopMaps:
    """Close the SEA loop with ``K`` and return every named channel.

    Raises
    ------
    IllPosedLoopError
        If ``1 - G1*(K1 - K2)`` vanishes identically.
    """
    Ks, Zd = G.plant.Ks, G.target.value
    gn, gd = G.plant.G1.num, G.plant.G1.den
    k1n, k1d = K.K1.num, K.K1.den
    k2n, k2d = K.K2.num, K.K2.den

    kdiff = k1n * k2d - k2n * k1d  # numerator of K1 - K2 over k1d*k2d
    open_den = gd * k1d * k2d
    delta = open_den - gn * kdiff
    scale = max(np.max(np.abs(open_den.coeffs)), np.max(np.abs((gn * kdiff).coeffs)))
    if delta.is_zero() or np.max(np.abs(delta.coeffs)) <= 1e-14 * scale:
        raise IllPosedLoopError("1 - G1*(K1 - K2) is identically zero")

    def tf(num):
        return tf_minreal(RationalTF(num, delta))

    pht_num = -((gd * k2d) * Ks + (gn * k2n) * Zd) * k1d
    T_pht = tf(pht_num)
    T_phe = tf(delta * (-Zd) - pht_num)
    Z = tf(-pht_num)
    Zbar = tf_minreal(RationalTF(-pht_num, delta * Polynomial([0.0, 1.0])))
    stab = is_stable(delta)
    return ClosedLoopMaps(
        T_phe_w=G.We * T_phe,
        T_phe=T_phe,
        T_phu=tf(-(kdiff * Ks + (k2n * k1d) * Zd) * gd),
        T_dt=tf(gn * k1d * k2d),
        T_du=tf(gn * kdiff),
        T_nt=tf(open_den),
        T_nt_true=tf(gn * kdiff),
        T_nu=tf(gd * kdiff),
        T_pht=T_pht,
        Z=Z,
        Zbar=Zbar,
        W_pass=passivity_map(Zbar),
        stable=stab.stable,
        abscissa=stab.max_real,
        char_poly=delta,
        Zd=Zd,
        Ks=Ks,
    )


def passivity_map(maps_or_zbar) -> RationalTF:
    """Bilinear (scattering) image ``(Zbar - 1) / (Zbar + 1)``."""
    Zbar = maps_or_zbar.Zbar if isinstance(maps_or_zbar, ClosedLoopMaps) else RationalTF.coerce(maps_or_zbar)
    num = Zbar.num - Zbar.den
    den = Zbar.num + Zbar.den
    if den.is_zero():
        raise DegenerateInputError("Zbar is identically -1")
    return tf_minreal(RationalTF(num, den), PASSIVITY_MINREAL_TOL)


@dataclass(frozen=True)
class PositiveRealReport:
    passed: bool
    rhp_free: bool
    imag_poles_simple: bool
    min_real: float
    worst_omega: float
    imag_axis_poles: tuple
    grid_points: int


def positive_real_check(
    Zbar,
    band: FreqBand = FreqBand(),
    points_per_decade: int = 400,
    tol: float = PR_TOL,
) -> PositiveRealReport:
    """Grid test of the positive-real conditions for ``Zbar``.

    Checks (a) no open right-half-plane poles, (b) imaginary-axis poles are
    simple, (c) ``Re Zbar(jw) >= -tol`` at every non-pole frequency.
    """
    Zbar = RationalTF.coerce(Zbar)
    stab = is_stable(Zbar)
    simple = all(m == 1 for _, m in stab.imag_axis_poles)
    pole_w = np.asarray([w for w, _ in stab.imag_axis_poles], dtype=float)

    lo, hi = _grid_limits(Zbar, band)
    pts = [band.lo] + ([band.hi] if math.isfinite(band.hi) else [])
    if lo < hi:
        n = max(2, int(math.ceil(math.log10(hi / lo) * points_per_decade)) + 1)
        pts.extend(np.logspace(math.log10(lo), math.log10(hi), n))
    poles = Zbar.poles()
    pts.extend(w for w in np.abs(poles.imag) if band.lo <= w <= band.hi)
    grid = np.unique(np.asarray(pts, dtype=float))

    def off_pole(w):
        if pole_w.size == 0:
            return np.ones(np.shape(w), dtype=bool)
        w = np.atleast_1d(w)
        d = np.abs(w[:, None] - pole_w[None, :])
        return np.all(d > 1e-6 * np.maximum(1.0, pole_w[None, :]), axis=1)

    grid = grid[off_pole(grid)]
    re = np.real(freqresp(Zbar, grid))
    re = np.where(np.isfinite(re), re, np.inf)

    ev = _scalar_response(Zbar)

    def neg_re(w):
        if not off_pole(np.asarray([w]))[0]:
            return -math.inf
        v = ev(w).real
        return -v if math.isfinite(v) else -math.inf

    worst_i = int(np.argmin(re)) if grid.size else 0
    min_re = float(re[worst_i]) if grid.size else math.inf
    worst_w = float(grid[worst_i]) if grid.size else math.nan
    n = grid.size
    for i in range(n):
        left = re[i - 1] if i > 0 else math.inf
        right = re[i + 1] if i < n - 1 else math.inf
        if re[i] > left or re[i] > right:
            continue
        a = grid[i - 1] if i > 0 else grid[i]
        b = grid[i + 1] if i < n - 1 else grid[i]
        if a == b:
            continue
        w, v = _golden_max(neg_re, a, b, log=a > 0)
        if -v < min_re:
            min_re, worst_w = -v, w

    if math.isinf(band.hi) and Zbar.is_proper():
        lim = 0.0
        if not Zbar.is_zero() and Zbar.relative_degree == 0:
            lim = Zbar.num.lead / Zbar.den.lead
        if lim < min_re:
            min_re, worst_w = lim, math.inf

    passed = stab.rhp_free and simple and min_re >= -tol
    return PositiveRealReport(
        passed=bool(passed),
        rhp_free=stab.rhp_free,
        imag_poles_simple=simple,
        min_real=min_re,
        worst_omega=worst_w,
        imag_axis_poles=stab.imag_axis_poles,
        grid_points=int(n),
    )
