"""Time-domain closed-loop simulation and the scalar performance metrics.

Each closed-loop channel is realized separately, balanced, and discretized
exactly under a sample-and-hold (triangle hold by default, since the hand
motion is smooth); responses to hand motion, disturbance and
sensor noise are superposed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm, matrix_balance

from .errors import UnstableLoopError, ValidationError
from .lti import RationalTF, StateSpaceLTI, tf_to_ss
from .loop import ClosedLoopMaps

log = logging.getLogger(__name__)

__all__ = [
    "DiscreteLTI",
    "Signal",
    "SimScenario",
    "SimResult",
    "discretize",
    "simulate",
    "metrics",
    "calibrate_amplitude",
    "scenario_from_dict",
    "load_scenario",
    "write_csv",
    "write_metrics",
    "ROLLOFF_POLE",
    "CSV_HEADER",
]

ROLLOFF_POLE = 1000.0
CSV_HEADER = ("t_s", "phi_h_rad", "tau_h_Nm", "tau_d_Nm", "e_Nm", "omega_d_rad_s")


@dataclass(frozen=True)
class DiscreteLTI:
    """``x[k+1] = Ad x[k] + Bd u[k]``, ``y[k] = C x[k] + D u[k]`` (SISO)."""

    Ad: np.ndarray
    Bd: np.ndarray
    C: np.ndarray
    D: float
    dt: float
    # triangle hold: the stored state is x - shift*u, so a zero initial
    # physical state starts at -shift*u[0]
    shift: np.ndarray | None = None

    def response(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        n = self.Ad.shape[0]
        if n == 0 or u.size == 0:
            return self.D * u
        Ad, bd, c = self.Ad, self.Bd[:, 0], self.C[0]
        x = np.zeros(n) if self.shift is None else -self.shift[:, 0] * u[0]
        y = np.empty_like(u)
        for k in range(u.size):
            y[k] = c @ x
            x = Ad @ x + bd * u[k]
        return y + self.D * u


def _balanced(ss: StateSpaceLTI) -> StateSpaceLTI:
    if ss.order == 0:
        return ss
    _, (scale, _) = matrix_balance(ss.A, permute=False, separate=True)
    A = ss.A * scale[None, :] / scale[:, None]
    return StateSpaceLTI(A, ss.B / scale[:, None], ss.C * scale[None, :], ss.D)


def discretize(ss: StateSpaceLTI, dt: float, method: str = "zoh") -> DiscreteLTI:
    """Exact hold-equivalent discretization.

    ``zoh``: ``expm([[A, B], [0, 0]] * dt) = [[Ad, Bd], [0, I]]``.
    ``foh``: triangle hold (exact for piecewise-linear inputs), realized with
    the shifted state ``x - G2 u`` so the stepper keeps the same form.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if ss.B.shape[1] != 1 or ss.C.shape[0] != 1:
        raise ValueError("discretize expects a SISO realization")
    n = ss.order
    D = float(ss.D[0, 0])
    if method == "zoh":
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = ss.A
        M[:n, n:] = ss.B
        E = expm(M * dt)
        return DiscreteLTI(E[:n, :n], E[:n, n:], ss.C.copy(), D, float(dt))
    if method != "foh":
        raise ValueError(f"unknown hold {method!r}")
    M = np.zeros((n + 2, n + 2))
    M[:n, :n] = ss.A * dt
    M[:n, n : n + 1] = ss.B * dt
    M[n, n + 1] = 1.0
    E = expm(M)
    Ad, G1, G2 = E[:n, :n], E[:n, n : n + 1], E[:n, n + 1 :]
    Bd = G1 - G2 + Ad @ G2
    return DiscreteLTI(Ad, Bd, ss.C.copy(), D + (ss.C @ G2).item(), float(dt), G2)


# -- signals --------------------------------------------------------------------


@dataclass(frozen=True)
class Signal:
    """Excitation: ``chirp``, ``sinusoid``, ``samples`` or ``zero``.

    ``chirp`` sweeps linearly from ``f0`` to ``f1`` Hz over ``sweep`` seconds
    (the scenario duration when unset), starting at zero phase.
    """

    kind: str = "zero"
    amplitude: float = 1.0
    f0: float = 0.0
    f1: float = 0.0
    sweep: float | None = None
    freq: float = 0.0
    phase: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("chirp", "sinusoid", "samples", "zero"):
            raise ValidationError("kind", f"unknown signal kind {self.kind!r}")
        if self.kind == "chirp" and not (0 <= self.f0 <= self.f1):
            raise ValidationError("f0", "chirp needs 0 <= f0 <= f1")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def sample(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(2 * np.pi * self.freq * t + self.phase)
        if self.kind == "chirp":
            T = self.sweep if self.sweep else float(t[-1]) if t.size and t[-1] > 0 else 1.0
            tt = np.minimum(t, T)
            # instantaneous frequency f0 + (f1 - f0) t / T, frozen at f1 after the sweep
            ph = 2 * np.pi * (self.f0 * tt + 0.5 * (self.f1 - self.f0) * tt ** 2 / T + self.f1 * (t - tt))
            return self.amplitude * np.sin(ph)
        out = np.zeros_like(t)
        v = np.asarray(self.values, dtype=float)[: t.size] * self.amplitude
        out[: v.size] = v
        return out

    def scaled(self, k: float) -> "Signal":
        return replace(self, amplitude=self.amplitude * k)

    @classmethod
    def from_dict(cls, d: dict | None) -> "Signal":
        if d is None:
            return cls()
        known = {"kind", "amplitude", "f0", "f1", "sweep", "freq", "phase", "values"}
        extra = set(d) - known
        if extra:
            raise ValidationError(sorted(extra)[0], "unknown signal field")
        return cls(**d)


@dataclass(frozen=True)
class SimScenario:
    hand_motion: Signal
    duration: float
    dt: float = 1e-3
    noise_std: float = 0.0
    disturbance: Signal = Signal()
    seed: int = 0
    hold: str = "foh"

    def __post_init__(self):
        if self.hold not in ("zoh", "foh"):
            raise ValidationError("hold", "must be 'zoh' or 'foh'")
        if not self.dt > 0:
            raise ValidationError("dt", "must be positive")
        if not self.duration >= self.dt:
            raise ValidationError("duration", "must be at least one step")
        if self.noise_std < 0:
            raise ValidationError("noise_std", "must be nonnegative")

    @property
    def time(self) -> np.ndarray:
        n = int(round(self.duration / self.dt)) + 1
        return np.arange(n) * self.dt


def scenario_from_dict(d: dict) -> SimScenario:
    try:
        return SimScenario(
            hand_motion=Signal.from_dict(d["hand_motion"]),
            duration=float(d["duration"]),
            dt=float(d.get("dt", 1e-3)),
            noise_std=float(d.get("noise_std", 0.0)),
            disturbance=Signal.from_dict(d.get("disturbance")),
            seed=int(d.get("seed", 0)),
            hold=str(d.get("hold", "foh")),
        )
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing from scenario") from None
    except TypeError as exc:
        raise ValidationError("scenario", str(exc)) from None


def load_scenario(path) -> SimScenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


# -- simulation -----------------------------------------------------------------


@dataclass(frozen=True)
class SimResult:
    t: np.ndarray
    phi_h: np.ndarray
    tau_h: np.ndarray
    tau_d: np.ndarray
    e: np.ndarray
    omega_d: np.ndarray
    metrics: dict
    provenance: dict = field(default_factory=dict)

    def rows(self):
        return np.column_stack([self.t, self.phi_h, self.tau_h, self.tau_d, self.e, self.omega_d])


def _proper(H: RationalTF, name: str, notes: list) -> RationalTF:
    k = -H.relative_degree if not H.is_zero() else 0
    if k <= 0:
        return H
    roll = RationalTF([ROLLOFF_POLE], [ROLLOFF_POLE, 1.0])
    for _ in range(k):
        H = RationalTF(H.num * roll.num, H.den * roll.den)
    notes.append(f"{name}: {k} roll-off pole(s) at {ROLLOFF_POLE:g} rad/s")
    log.info("simulation only: %s gets %d roll-off pole(s) at %g rad/s", name, k, ROLLOFF_POLE)
    return H


def _respond(H: RationalTF, u: np.ndarray, dt: float, hold: str) -> np.ndarray:
    if H.is_zero() or not np.any(u):
        return np.zeros_like(u)
    return discretize(_balanced(tf_to_ss(H)), dt, hold).response(u)


def _run(maps: ClosedLoopMaps, phi, d, n, dt, hold, notes):
    # tau_h is the physical interaction torque (sensor noise excluded)
    pairs = {
        "tau_h": (("T_pht", phi), ("T_dt", d), ("T_nt_true", n)),
        "omega_d": (("T_phu", phi), ("T_du", d), ("T_nu", n)),
    }
    out = {}
    for key, terms in pairs.items():
        y = np.zeros_like(phi)
        for attr, u in terms:
            y = y + _respond(_proper(getattr(maps, attr), attr, notes), u, dt, hold)
        out[key] = y
    return out["tau_h"], out["omega_d"]


def simulate(maps: ClosedLoopMaps, scenario: SimScenario, *, allow_unstable: bool = False) -> SimResult:
    """Superpose the closed-loop responses to hand motion, disturbance and noise.

    Sensor noise is drawn as white deflection noise with standard deviation
    ``noise_std`` rad and enters the torque measurement as ``Ks * noise``.
    ``snr_wd`` compares against an identical noise-free run.

    Raises
    ------
    UnstableLoopError
        When the closed loop is unstable and ``allow_unstable`` is false.
    """
    if not maps.stable and not allow_unstable:
        raise UnstableLoopError(f"closed loop is unstable (spectral abscissa {maps.abscissa:.4g})")
    t = scenario.time
    phi = scenario.hand_motion.sample(t)
    d = scenario.disturbance.sample(t)
    rng = np.random.default_rng(scenario.seed)
    n = maps.Ks * scenario.noise_std * rng.standard_normal(t.size) if scenario.noise_std > 0 else np.zeros_like(t)
    notes: list = []
    with np.errstate(over="ignore", invalid="ignore"):
        tau_h, wd = _run(maps, phi, d, n, scenario.dt, scenario.hold, notes)
        wd_ref = wd if not np.any(n) else _run(maps, phi, d, np.zeros_like(t), scenario.dt, scenario.hold, [])[1]
    tau_d = -maps.Zd * phi
    e = tau_d - tau_h
    prov = {"dt": scenario.dt, "hold": scenario.hold, "samples": int(t.size), "rolloff": sorted(set(notes)), "seed": scenario.seed}
    return SimResult(t, phi, tau_h, tau_d, e, wd, metrics(e, wd, wd_ref), prov)


def metrics(e, omega_d, omega_d_ref) -> dict:
    """Scalar metrics; the SNR reference is the noise-free ``omega_d``."""
    e = np.asarray(e, dtype=float)
    wd = np.asarray(omega_d, dtype=float)
    ref = np.asarray(omega_d_ref, dtype=float)
    if not (e.shape == wd.shape == ref.shape):
        raise ValueError("series lengths differ")
    noise = float(np.sum((wd - ref) ** 2))
    signal = float(np.sum(ref ** 2))
    if noise == 0.0:
        snr = math.inf
    elif signal == 0.0:
        snr = -math.inf
    else:
        snr = 10.0 * math.log10(signal / noise)
    return {
        "max_abs_e": float(np.max(np.abs(e))) if e.size else 0.0,
        "sse": float(np.sum(e ** 2)),
        "max_abs_wd": float(np.max(np.abs(wd))) if wd.size else 0.0,
        "snr_wd": snr,
    }


def calibrate_amplitude(maps: ClosedLoopMaps, scenario: SimScenario, target_wd: float = 16.7) -> SimScenario:
    """Rescale the hand motion so the noise-free peak ``|omega_d|`` hits ``target_wd``.

    The loop is linear, so one unit-amplitude run fixes the scale.
    """
    probe = replace(scenario, hand_motion=replace(scenario.hand_motion, amplitude=1.0),
                    noise_std=0.0, disturbance=Signal())
    peak = simulate(maps, probe).metrics["max_abs_wd"]
    if not peak > 0:
        raise ValueError("hand motion does not reach omega_d")
    return replace(scenario, hand_motion=replace(scenario.hand_motion, amplitude=target_wd / peak))


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))


def write_csv(result: SimResult, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in result.rows():
            w.writerow([f"{v:.17g}" for v in row])
    return path


def write_metrics(result: SimResult, path) -> Path:
    path = Path(path)
    m = {k: (v if math.isfinite(v) else _fmt(v)) for k, v in result.metrics.items()}
    path.write_text(json.dumps({"metrics": m, "provenance": result.provenance}, indent=2))
    return path
