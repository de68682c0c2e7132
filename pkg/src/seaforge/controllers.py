"""Published controllers for the identified SEA.

Coefficients are ascending powers of ``s``.
"""

from __future__ import annotations

from .loop import Controller
from .lti import RationalTF

# third-order pair synthesized for Zd = 0.6 Ks
HINF3_K1 = ([-8.294e09, 4.346e10, 2.925e07, 4953.0], [8.026e09, 8.408e06, 3208.0, 1.0])
HINF3_K2 = ([-7.179e11, -1.984e09, -7.023e06, -2180.0], [4.533e08, 2.133e06, 1444.0, 1.0])

# passivity-tuned PID: {Kp, Ki, Kd}
PID_GAINS = (1000.0, 10.0, 20.0)
# PID with filtered derivative: {Kp, Ki, Kd, pole}
HPID_GAINS = (1333.0, 0.0002, 403.0, 8.0)


def hinf3() -> Controller:
    return Controller(RationalTF(*HINF3_K1), RationalTF(*HINF3_K2))


def pid(kp: float, ki: float, kd: float) -> Controller:
    """``K1 = 0``, ``K2 = -(kp + ki/s + kd*s)``."""
    return Controller(RationalTF.constant(0.0), RationalTF([-ki, -kp, -kd], [0.0, 1.0]))


def filtered_pid(kp: float, ki: float, kd: float, pole: float) -> Controller:
    """``K1 = 0``, ``K2 = -(kp + ki/s + kd*s/(s + pole))``."""
    # common denominator s*(s + pole)
    num = [-ki * pole, -(kp * pole + ki), -(kp + kd)]
    return Controller(RationalTF.constant(0.0), RationalTF(num, [0.0, pole, 1.0]))


PUBLISHED = {
    "hinf3": hinf3,
    "pid": lambda: pid(*PID_GAINS),
    "hpid": lambda: filtered_pid(*HPID_GAINS),
}


def published(name: str) -> Controller:
    try:
        return PUBLISHED[name]()
    except KeyError:
        raise ValueError(f"unknown published controller {name!r}; choose from {sorted(PUBLISHED)}") from None
