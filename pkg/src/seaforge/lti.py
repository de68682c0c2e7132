"""Continuous-time SISO LTI primitives.

Polynomials are stored with ascending powers of ``s``. Rational transfer
functions are immutable; every arithmetic operator returns a new,
minreal'd object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    IllPosedLoopError,
    ImproperError,
    PoleInBandError,
    PoleProximityError,
)

__all__ = [
    "Polynomial",
    "RationalTF",
    "StateSpaceLTI",
    "FreqBand",
    "BandNormResult",
    "StabilityReport",
    "poly_roots",
    "tf_eval",
    "freqresp",
    "tf_add",
    "tf_sub",
    "tf_mul",
    "tf_feedback",
    "tf_minreal",
    "tf_to_ss",
    "ss_freqresp",
    "is_stable",
    "band_hinf_norm",
    "MINREAL_TOL",
]

MINREAL_TOL = 1e-6
STABILITY_MARGIN = 1e-9
GRID_LO = 1e-2
GRID_HI = 1e5
POINTS_PER_DECADE = 400
REFINE_RTOL = 1e-6


def _as_coeffs(c) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c, dtype=float)).copy()
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("polynomial coefficients must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("polynomial coefficients must be finite")
    nz = np.flatnonzero(arr)
    arr = arr[: nz[-1] + 1] if nz.size else arr[:1] * 0.0
    arr.flags.writeable = False
    return arr


class Polynomial:
    """Real polynomial in ``s``, coefficients in ascending powers."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if isinstance(coeffs, Polynomial):
            coeffs = coeffs.coeffs
        object.__setattr__(self, "coeffs", _as_coeffs(coeffs))

    def __reduce__(self):
        return (Polynomial, (self.coeffs,))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead: float = 1.0) -> "Polynomial":
        roots = np.asarray(list(roots), dtype=complex)
        if roots.size == 0:
            return cls([lead])
        desc = np.poly(roots)
        return cls(lead * np.real(desc[::-1]))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self.coeffs)

    def __add__(self, other):
        other = Polynomial(other if isinstance(other, Polynomial) else np.atleast_1d(other))
        return Polynomial(np.polynomial.polynomial.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-Polynomial(other if isinstance(other, Polynomial) else np.atleast_1d(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.polynomial.polynomial.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def roots(self) -> np.ndarray:
        return poly_roots(self)

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def poly_roots(p) -> np.ndarray:
    """Roots of ``p`` as eigenvalues of its companion matrix.

    Raises
    ------
    DegenerateInputError
        If ``p`` is the zero polynomial.
    """
    p = Polynomial(p)
    if p.is_zero():
        raise DegenerateInputError("cannot take roots of the zero polynomial")
    c = p.coeffs
    # exact roots at the origin
    nzero = int(np.argmax(c != 0.0))
    c = c[nzero:]
    n = c.size - 1
    if n == 0:
        return np.zeros(nzero, dtype=complex)
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    r = np.linalg.eigvals(comp).astype(complex)
    return np.concatenate([np.zeros(nzero, dtype=complex), r])


@dataclass(frozen=True)
class FreqBand:
    """Frequency interval ``[lo, hi]`` in rad/s; ``hi`` may be ``inf``."""

    lo: float = 0.0
    hi: float = math.inf

    def __post_init__(self):
        if not (self.lo >= 0.0):
            raise ValueError(f"band lower edge must be >= 0, got {self.lo}")
        if not (self.lo < self.hi):
            raise ValueError(f"band must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        return (omega >= self.lo) & (omega <= self.hi)

    def __contains__(self, omega) -> bool:
        return bool(self.contains(omega))


@dataclass(frozen=True)
class BandNormResult:
    value: float
    argmax_omega: float
    grid_points: int


@dataclass(frozen=True)
class StabilityReport:
    """Pole-location summary.

    ``stable`` is strict (every pole strictly left of ``-margin``).
    ``rhp_free`` ignores poles on the imaginary axis, which are listed in
    ``imag_axis_poles`` as ``(omega, multiplicity)`` pairs.
    """

    stable: bool
    rhp_free: bool
    max_real: float
    imag_axis_poles: tuple = ()

    def __bool__(self):
        return self.stable


class RationalTF:
    """Real-coefficient rational transfer function ``num(s)/den(s)``."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        num = Polynomial(num if isinstance(num, Polynomial) else np.atleast_1d(num))
        den = Polynomial(den if isinstance(den, Polynomial) else np.atleast_1d(den))
        if den.is_zero():
            raise DegenerateInputError("transfer function denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __reduce__(self):
        return (RationalTF, (self.num, self.den))

    def __setattr__(self, name, value):
        raise AttributeError("RationalTF is immutable")

    @classmethod
    def constant(cls, k: float) -> "RationalTF":
        return cls([float(k)], [1.0])

    @classmethod
    def s(cls) -> "RationalTF":
        return cls([0.0, 1.0], [1.0])

    @classmethod
    def zpk(cls, zeros, poles, gain) -> "RationalTF":
        return cls(Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles))

    @staticmethod
    def coerce(x) -> "RationalTF":
        if isinstance(x, RationalTF):
            return x
        if isinstance(x, Polynomial):
            return RationalTF(x, [1.0])
        return RationalTF.constant(float(x))

    # -- structure -------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    @property
    def relative_degree(self) -> int:
        if self.is_zero():
            return 0
        return self.den.degree - self.num.degree

    def is_proper(self) -> bool:
        return self.is_zero() or self.num.degree <= self.den.degree

    def is_strictly_proper(self) -> bool:
        return self.is_zero() or self.num.degree < self.den.degree

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        if self.is_zero() or self.num.degree == 0:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.num)

    def high_freq_gain(self) -> float:
        """``lim |H(jw)|`` as ``w -> inf`` (``inf`` when improper)."""
        if self.is_zero():
            return 0.0
        rd = self.relative_degree
        if rd > 0:
            return 0.0
        if rd < 0:
            return math.inf
        return abs(self.num.lead / self.den.lead)

    def normalized(self) -> "RationalTF":
        """Same system with a monic denominator."""
        lead = self.den.lead
        if lead == 1.0:
            return self
        return RationalTF(self.num * (1.0 / lead), self.den * (1.0 / lead))

    # -- evaluation ------------------------------------------------------
    def __call__(self, s):
        return self.num(s) / self.den(s)

    def freqresp(self, omega) -> np.ndarray:
        return freqresp(self, omega)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        return tf_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return tf_sub(self, other)

    def __rsub__(self, other):
        return tf_sub(RationalTF.coerce(other), self)

    def __mul__(self, other):
        return tf_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return RationalTF(-self.num, self.den)

    def __truediv__(self, other):
        other = RationalTF.coerce(other)
        if other.is_zero():
            raise DegenerateInputError("division by the zero transfer function")
        return tf_minreal(RationalTF(self.num * other.den, self.den * other.num))

    def __rtruediv__(self, other):
        return RationalTF.coerce(other) / self

    def feedback(self, loop=1.0) -> "RationalTF":
        return tf_feedback(self, loop)

    def __repr__(self):
        return f"RationalTF(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"


def _pole_guard(den: Polynomial, s: np.ndarray) -> np.ndarray:
    """Boolean mask of evaluation points numerically sitting on a pole."""
    c = np.abs(den.coeffs)
    scale = np.polynomial.polynomial.polyval(np.abs(s), c)
    return np.abs(den(s)) <= 1e-13 * np.maximum(scale, np.finfo(float).tiny)


def freqresp(H, omega) -> np.ndarray:
    """Vectorized ``H(jw)``; points on a pole evaluate to ``inf``."""
    H = RationalTF.coerce(H)
    omega = np.asarray(omega, dtype=float)
    s = 1j * omega
    with np.errstate(divide="ignore", invalid="ignore"):
        out = H.num(s) / H.den(s)
    bad = _pole_guard(H.den, s)
    if np.any(bad):
        out = np.where(bad, complex(math.inf, 0.0), out)
    return out


def tf_eval(H, omega: float) -> complex:
    """``H(jw)`` at a single frequency.

    Raises
    ------
    PoleProximityError
        If ``jw`` is (numerically) a pole of ``H``.
    """
    H = RationalTF.coerce(H)
    s = 1j * float(omega)
    if _pole_guard(H.den, np.asarray(s)):
        raise PoleProximityError(omega)
    return complex(H.num(s) / H.den(s))


def _vanishes(p: Polynomial, root: complex, tol: float) -> bool:
    """Guard against spurious matches between inaccurately computed roots."""
    scale = float(np.polynomial.polynomial.polyval(abs(root), np.abs(p.coeffs)))
    return abs(p(root)) <= 10.0 * tol * max(scale, np.finfo(float).tiny)


def tf_minreal(H, tol: float = MINREAL_TOL) -> RationalTF:
    """Cancel numerator/denominator roots closer than ``tol`` (relative).

    A candidate pair is only cancelled if the numerator also nearly vanishes
    at the denominator root (relative residual below ``10*tol``).

    The result has a monic denominator. When nothing cancels the original
    coefficients are kept (up to that normalization).
    """
    H = RationalTF.coerce(H)
    if H.is_zero():
        return RationalTF([0.0], [1.0])
    if H.num.degree == 0 or H.den.degree == 0:
        return H.normalized()
    zn = list(poly_roots(H.num))
    zd = list(poly_roots(H.den))
    kept_n = []
    cancelled = 0
    for z in sorted(zn, key=lambda r: (abs(r), r.imag)):
        if not zd:
            kept_n.append(z)
            continue
        dist = np.abs(np.asarray(zd) - z)
        j = int(np.argmin(dist))
        if dist[j] <= tol * max(1.0, abs(zd[j])) and _vanishes(H.num, zd[j], tol):
            zd.pop(j)
            cancelled += 1
        else:
            kept_n.append(z)
    if cancelled == 0:
        return H.normalized()
    gain = H.num.lead / H.den.lead
    return RationalTF(Polynomial.from_roots(kept_n, gain), Polynomial.from_roots(zd))


def tf_add(H, G) -> RationalTF:
    H, G = RationalTF.coerce(H), RationalTF.coerce(G)
    if H.den == G.den:
        return tf_minreal(RationalTF(H.num + G.num, H.den))
    return tf_minreal(RationalTF(H.num * G.den + G.num * H.den, H.den * G.den))


def tf_sub(H, G) -> RationalTF:
    return tf_add(H, -RationalTF.coerce(G))


def tf_mul(H, G) -> RationalTF:
    H, G = RationalTF.coerce(H), RationalTF.coerce(G)
    return tf_minreal(RationalTF(H.num * G.num, H.den * G.den))


def tf_feedback(H, G=1.0) -> RationalTF:
    """Negative feedback ``H / (1 + H G)``.

    Raises
    ------
    IllPosedLoopError
        If ``1 + H G`` vanishes identically.
    """
    H, G = RationalTF.coerce(H), RationalTF.coerce(G)
    den = H.den * G.den + H.num * G.num
    if den.is_zero() or np.max(np.abs(den.coeffs)) <= 1e-14 * max(
        np.max(np.abs((H.den * G.den).coeffs)), np.max(np.abs((H.num * G.num).coeffs))
    ):
        raise IllPosedLoopError("1 + H*G is identically zero")
    return tf_minreal(RationalTF(H.num * G.den, den))


@dataclass(frozen=True)
class StateSpaceLTI:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A, B, C, D = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (self.A, self.B, self.C, self.D))
        n = A.shape[0] if A.size else 0
        if A.size == 0:
            A = np.zeros((0, 0))
            B = np.zeros((0, D.shape[1]))
            C = np.zeros((D.shape[0], 0))
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise ValueError("inconsistent state-space dimensions")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError("inconsistent state-space dimensions")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def order(self) -> int:
        return self.A.shape[0]


def tf_to_ss(H) -> StateSpaceLTI:
    """Controllable canonical realization of a proper ``H``."""
    H = RationalTF.coerce(H).normalized()
    if not H.is_proper():
        raise ImproperError(
            f"transfer function has relative degree {H.relative_degree}; add roll-off before realizing it"
        )
    n = H.den.degree
    a = H.den.coeffs
    b = np.zeros(n + 1)
    b[: H.num.coeffs.size] = H.num.coeffs
    d = b[n] if n < b.size else 0.0
    if n == 0:
        return StateSpaceLTI(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[b[0] / a[0]]])
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -a[:-1]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = (b[:-1] - d * a[:-1]).reshape(1, n)
    return StateSpaceLTI(A, B, C, [[d]])


def ss_freqresp(ss: StateSpaceLTI, omega) -> np.ndarray:
    """``C (jwI - A)^-1 B + D`` for a SISO realization."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = ss.order
    out = np.empty(omega.shape, dtype=complex)
    for i, w in enumerate(omega):
        if n == 0:
            out[i] = ss.D[0, 0]
            continue
        x = np.linalg.solve(1j * w * np.eye(n) - ss.A, ss.B[:, 0])
        out[i] = ss.C[0] @ x + ss.D[0, 0]
    return out


def _classify_poles(poles: np.ndarray, margin: float):
    imag = [p for p in poles if abs(p.real) <= margin]
    groups: list[list[float]] = []
    for p in sorted(imag, key=lambda z: z.imag):
        w = p.imag
        if w < -margin:
            continue  # conjugate of a positive-frequency pole
        for g in groups:
            if abs(g[0] - w) <= MINREAL_TOL * max(1.0, abs(w)):
                g[1] += 1
                break
        else:
            groups.append([abs(w), 1])
    return tuple((g[0], g[1]) for g in groups)


def is_stable(H, margin: float = STABILITY_MARGIN) -> StabilityReport:
    """Pole-location check of ``H`` (or of a bare denominator polynomial)."""
    den = H if isinstance(H, Polynomial) else RationalTF.coerce(H).den
    if den.degree == 0:
        return StabilityReport(True, True, -math.inf, ())
    p = poly_roots(den)
    max_real = float(np.max(p.real))
    imag = _classify_poles(p, margin)
    stable = bool(np.all(p.real < -margin))
    rhp_free = bool(np.all(p.real <= margin))
    return StabilityReport(stable, rhp_free, max_real, imag)


def _scalar_response(H: RationalTF):
    """Fast ``w -> H(jw)`` for refinement loops (Horner on Python complex)."""
    num = [complex(c) for c in H.num.coeffs[::-1]]
    den = [complex(c) for c in H.den.coeffs[::-1]]

    def ev(w: float) -> complex:
        s = 1j * w
        a = 0j
        for c in num:
            a = a * s + c
        b = 0j
        for c in den:
            b = b * s + c
        return a / b if b != 0 else complex(math.inf, 0.0)

    return ev


def _grid_limits(H: RationalTF, band: FreqBand) -> tuple[float, float]:
    lo, hi = GRID_LO, GRID_HI
    crit = np.concatenate([np.abs(H.poles()), np.abs(H.zeros())])
    crit = crit[crit > 0]
    if crit.size:
        lo = min(lo, crit.min() / 100.0)
        hi = max(hi, crit.max() * 100.0)
    lo = max(lo, band.lo) if band.lo > 0 else lo
    hi = min(hi, band.hi)
    return lo, hi


def _golden_max(f, a: float, b: float, log: bool) -> tuple[float, float]:
    """Maximize scalar ``f`` on ``[a, b]`` by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    if log:
        fwd, back = math.log, math.exp
    else:
        fwd = back = lambda x: x
    x0, x1 = fwd(a), fwd(b)
    c = x1 - invphi * (x1 - x0)
    d = x0 + invphi * (x1 - x0)
    fc, fd = f(back(c)), f(back(d))
    for _ in range(200):
        width = abs(back(x1) - back(x0))
        if width <= REFINE_RTOL * max(abs(back(x1)), 1e-300):
            break
        if fc >= fd:
            x1, d, fd = d, c, fc
            c = x1 - invphi * (x1 - x0)
            fc = f(back(c))
        else:
            x0, c, fc = c, d, fd
            d = x0 + invphi * (x1 - x0)
            fd = f(back(d))
    if fc >= fd:
        return back(c), fc
    return back(d), fd


def band_hinf_norm(H, band: FreqBand = FreqBand(), points_per_decade: int = POINTS_PER_DECADE) -> BandNormResult:
    """Supremum of ``|H(jw)|`` over ``band``.

    Log-spaced sweep (plus both edges and the natural frequencies of all
    poles and zeros) followed by golden-section refinement of every local
    maximum.

    Raises
    ------
    PoleInBandError
        If ``H`` has a pole on the imaginary axis inside ``band``.
    """
    H = RationalTF.coerce(H)
    if H.is_zero():
        return BandNormResult(0.0, band.lo, 1)
    poles = H.poles()
    for p in poles:
        if abs(p.real) <= 1e-9 * max(1.0, abs(p)) and band.lo <= abs(p.imag) <= band.hi:
            raise PoleInBandError(abs(p.imag))

    lo, hi = _grid_limits(H, band)
    pts = [band.lo]
    if math.isfinite(band.hi):
        pts.append(band.hi)
    if lo < hi:
        ndec = math.log10(hi / lo)
        npts = max(2, int(math.ceil(ndec * points_per_decade)) + 1)
        pts.extend(np.logspace(math.log10(lo), math.log10(hi), npts))
    crit = np.concatenate([np.abs(poles), np.abs(poles.imag), np.abs(H.zeros().imag)])
    pts.extend(w for w in crit if band.lo <= w <= band.hi)
    grid = np.unique(np.asarray(pts, dtype=float))
    mag = np.abs(freqresp(H, grid))

    ev = _scalar_response(H)

    def f(w):
        return abs(ev(w))

    best_w = float(grid[int(np.argmax(mag))])
    best = float(np.max(mag))
    n = grid.size
    for i in range(n):
        left = mag[i - 1] if i > 0 else -1.0
        right = mag[i + 1] if i < n - 1 else -1.0
        if mag[i] < left or mag[i] < right:
            continue
        a = grid[i - 1] if i > 0 else grid[i]
        b = grid[i + 1] if i < n - 1 else grid[i]
        if a == b:
            continue
        w, v = _golden_max(f, a, b, log=a > 0)
        if v > best:
            best, best_w = v, w

    if math.isinf(band.hi):
        hf = H.high_freq_gain()
        if hf > best:
            best, best_w = hf, math.inf
    return BandNormResult(best, best_w, int(n))
