"""Acceptance battery shared by ``seaforge repro`` and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .controllers import hinf3, published
from .loop import build_generalized_plant, close_loop, passivity_map, positive_real_check
from .lti import FreqBand, RationalTF, band_hinf_norm, freqresp, is_stable
from .plant import default_plant, desired_impedance, factored_g1
from .simulator import SimScenario, Signal, calibrate_amplitude, simulate
from .specs import PUBLISHED_GAMMA1, default_spec_set, evaluate, recalibrated_gamma1, reference_gamma1
from .synthesis import SynthesisOptions, encode, synthesize

__all__ = ["CriterionResult", "CRITERIA", "run_all", "random_stable_tf", "random_pr_candidate", "chirp_scenario"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    skipped: bool = False


def _timed(number, name, limit, fn) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None and dt > limit:
        ok, detail = False, f"{detail}; runtime {dt:.1f} s exceeds {limit:g} s"
    return CriterionResult(number, name, bool(ok), detail, dt)


def random_stable_tf(rng: np.random.Generator, max_degree: int = 4, strictly_proper: bool = False) -> RationalTF:
    """Random stable real rational function with poles spread over 1e-2..1e3 rad/s."""
    n = int(rng.integers(1, max_degree + 1))
    poles = []
    while len(poles) < n:
        mag = 10.0 ** rng.uniform(-2, 3)
        if n - len(poles) >= 2 and rng.random() < 0.5:
            zeta = rng.uniform(0.05, 1.0)
            wd = mag * math.sqrt(1 - zeta ** 2)
            poles += [complex(-zeta * mag, wd), complex(-zeta * mag, -wd)]
        else:
            poles.append(-mag)
    den = np.real(np.poly(poles))[::-1]
    m = n - 1 if strictly_proper else int(rng.integers(0, n + 1))
    num = rng.normal(size=m + 1) * (10.0 ** rng.uniform(-1, 1, size=m + 1)) * np.abs(den[: m + 1]).max()
    return RationalTF(num, den)


def random_pr_candidate(rng: np.random.Generator) -> RationalTF:
    """Sum of positive-real sections (degree <= 4), sometimes nudged off the boundary.

    First-order ``r/(s+p)`` and biquad ``(a s + b)/(s^2 + c s + d)`` with
    ``a c >= b`` are positive real, and so are their sums.
    """
    H = RationalTF.constant(abs(rng.normal()) * (rng.random() < 0.5))
    deg = 0
    while deg < 4:
        if deg <= 2 and rng.random() < 0.5:
            w0 = 10.0 ** rng.uniform(-1, 2)
            c = 2 * rng.uniform(0.05, 1.0) * w0
            a = 10.0 ** rng.uniform(-1, 1)
            b = a * c * rng.uniform(0.2, 1.0)
            if rng.random() < 0.3:
                b = a * c * rng.uniform(1.05, 3.0)  # violates a c >= b
            H = H + RationalTF([b, a], [w0 ** 2, c, 1.0])
            deg += 2
        else:
            H = H + RationalTF([10.0 ** rng.uniform(-1, 1)], [10.0 ** rng.uniform(-1, 2), 1.0])
            deg += 1
        if rng.random() < 0.4:
            break
    return H


def chirp_scenario(dt: float = 1e-3, duration: float = 10.0) -> SimScenario:
    return SimScenario(Signal("chirp", 1.0, f0=0.0, f1=6.0), duration=duration, dt=dt)


# -- criteria -------------------------------------------------------------------


def c1_plant():
    p = default_plant()
    g0 = abs(p.G1(0.0))
    f = factored_g1()
    a = p.G1.normalized()
    b = f.normalized()
    num_err = np.max(np.abs(a.num.coeffs - b.num.coeffs) / np.abs(a.num.coeffs))
    den_err = np.max(np.abs(a.den.coeffs - b.den.coeffs) / np.abs(a.den.coeffs))
    ok = abs(g0 - 0.2012) <= 1e-3 and max(num_err, den_err) <= 5e-3
    return ok, f"|G1(0)| = {g0:.5f}; factored vs monic coefficient mismatch {max(num_err, den_err):.2e}"


def c2_published():
    p = default_plant()
    G = build_generalized_plant(p, desired_impedance(p, 0.6))
    m = close_loop(G, hinf3())
    phu = band_hinf_norm(m.T_phu, FreqBand(0.0, 12 * math.pi)).value
    dt = band_hinf_norm(m.T_dt).value
    nt = band_hinf_norm(m.T_nt_true, FreqBand(40 * math.pi, math.inf)).value
    wp = band_hinf_norm(m.W_pass).value
    w = np.logspace(-4, 7, 4401)
    phase = np.degrees(np.angle(freqresp(m.Zbar, w)))
    z0 = m.Z(0.0).real / p.Ks
    g1 = reference_gamma1(p)
    again = reference_gamma1(p)
    ok = (m.stable and phu <= 44 and dt <= 0.03 and nt <= 0.3 and wp <= 1 + 1e-3
          and np.all(np.abs(phase) <= 90.0) and abs(z0 - 0.6) <= 0.06 and g1 == again)
    detail = (f"stable={m.stable} phu={phu:.4g} dt={dt:.4g} nt={nt:.4g} |W|inf={wp:.10g} "
              f"max|phase Zbar|={np.max(np.abs(phase)):.3f} deg Z(0)/Ks={z0:.4f} "
              f"gamma1'={g1 / p.Ks:.6g} (x Ks = {g1:.6g}) rerun bitwise={g1 == again}")
    return ok, detail


def _bilinear_passive(Zbar, tol=1e-8) -> bool:
    W = passivity_map(Zbar)
    if not is_stable(W).stable:
        return False
    return band_hinf_norm(W).value <= 1.0 + tol


def c3_passivity_equivalence():
    rng = np.random.default_rng(20240503)
    disagree = 0
    n_passive = 0
    for _ in range(200):
        Z = random_pr_candidate(rng) if rng.random() < 0.5 else random_stable_tf(rng, 4)
        a = _bilinear_passive(Z)
        b = positive_real_check(Z).passed
        n_passive += b
        disagree += a != b
    return disagree == 0, f"200 random Zbar, {n_passive} positive real, {disagree} disagreements"


def c4_band_norm_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        H = random_stable_tf(rng, 4)
        lo = 0.0 if rng.random() < 0.5 else 10.0 ** rng.uniform(-2, 1)
        hi = math.inf if rng.random() < 0.5 else lo + 10.0 ** rng.uniform(0, 3)
        band = FreqBand(lo, hi)
        w = np.logspace(-4, 6, 10 ** 6)
        w = np.concatenate([[lo], w[(w >= lo) & (w <= min(hi, 1e6))], [hi] if math.isfinite(hi) else []])
        brute = float(np.max(np.abs(freqresp(H, w))))
        if math.isinf(hi) and H.is_proper():
            brute = max(brute, abs(H.high_freq_gain()))
        got = band_hinf_norm(H, band).value
        worst = max(worst, abs(got - brute) / max(brute, 1e-300))
    return worst <= 0.01, f"worst relative gap {worst:.2e} over 100 systems"


def c5_synthesis(starts=8, budget=4000, seed=0):
    p = default_plant()
    G = build_generalized_plant(p, desired_impedance(p, 0.6))
    specs = default_spec_set(p, reference_gamma1(p))
    res = synthesize(G, "free_pair", specs, SynthesisOptions(starts=starts, budget=budget, seed=seed))
    warm0 = evaluate(close_loop(G, hinf3()), specs)
    theta0 = encode("free_pair", hinf3()).theta
    warm = synthesize(G, "free_pair", specs, SynthesisOptions(starts=1, budget=1500, seed=seed), theta0=theta0)
    descent = (warm.report.all_pass or not warm0.all_pass) and warm.report.soft_level <= warm0.soft_level + 1e-9
    ok = res.report.all_pass and descent
    return ok, (f"random starts: overall_pass={res.report.all_pass} soft L={res.report.soft_level:.4f} "
                f"({res.evaluations} evals); warm start L {warm0.soft_level:.6f} -> {warm.report.soft_level:.6f}")


def c6_pid():
    p = default_plant()
    G = build_generalized_plant(p, desired_impedance(p, 0.6))
    specs = default_spec_set(p, reference_gamma1(p))
    reps = {n: evaluate(close_loop(G, published(n)), specs) for n in ("hinf3", "hpid", "pid")}
    pas = {n: reps[n].item("passivity") for n in ("pid", "hpid")}
    peak = {n: reps[n].item("phe_w").achieved for n in reps}
    order = peak["hinf3"] < peak["hpid"] < peak["pid"]
    ok = pas["pid"].passed and pas["hpid"].passed and order
    return ok, (f"|W|inf pid={pas['pid'].achieved:.8g} hpid={pas['hpid'].achieved:.8g}; "
                f"rendering peaks hinf3={peak['hinf3']:.5g} hpid={peak['hpid']:.5g} pid={peak['pid']:.5g}")


def c7_simulation():
    p = default_plant()
    G = build_generalized_plant(p, desired_impedance(p, 0.6))
    m = close_loop(G, hinf3())
    worst = 0.0
    for f in (0.1, 0.5, 1.0, 3.0, 6.0):
        T = max(20.0, 10.0 / f)
        r = simulate(m, SimScenario(Signal("sinusoid", 1.0, freq=f), duration=T))
        tail = r.t > T - 2.0 / f
        ratio = np.max(np.abs(r.tau_h[tail])) / abs(m.T_pht(2j * math.pi * f))
        worst = max(worst, abs(ratio - 1.0))
    sc = calibrate_amplitude(m, chirp_scenario())
    e = simulate(m, sc).metrics["max_abs_e"]
    ok = worst <= 0.02 and 0.004 <= e <= 0.011
    return ok, f"worst sinusoid gain error {100 * worst:.3f}%; calibrated amplitude {sc.hand_motion.amplitude:.4f} rad, max|e| = {e:.5f} Nm"


TREND_NOISE_STD = 1e-4  # rad


def c8_trend(starts=8, budget=4000, seed=0):
    p = default_plant()
    G6 = build_generalized_plant(p, desired_impedance(p, 0.6))
    sc = calibrate_amplitude(close_loop(G6, hinf3()), chirp_scenario())
    sc = replace(sc, noise_std=TREND_NOISE_STD, seed=11)
    rows = []
    for alpha in sorted(PUBLISHED_GAMMA1):
        G = build_generalized_plant(p, desired_impedance(p, alpha))
        specs = default_spec_set(p, recalibrated_gamma1(p, alpha))
        res = synthesize(G, "free_pair", specs, SynthesisOptions(starts=starts, budget=budget, seed=seed))
        m = simulate(close_loop(G, res.controller), sc).metrics
        rows.append((alpha, res.report.all_pass, m))
    ok = True
    for key in ("max_abs_e", "sse", "max_abs_wd"):
        vals = [r[2][key] for r in rows]
        ok &= all(b <= a for a, b in zip(vals, vals[1:]))
    detail = "; ".join(
        f"a={a}: pass={ps} max|e|={m['max_abs_e']:.4g} SSE={m['sse']:.4g} max|wd|={m['max_abs_wd']:.4g} SNR={m['snr_wd']:.3g} dB"
        for a, ps, m in rows
    )
    return ok, detail


CRITERIA = (
    (1, "plant fidelity", 1.0, c1_plant, False),
    (2, "published controller verification", 10.0, c2_published, False),
    (3, "passivity / small-gain equivalence", 30.0, c3_passivity_equivalence, False),
    (4, "band-norm oracle", 60.0, c4_band_norm_oracle, False),
    (5, "synthesis feasibility", 600.0, c5_synthesis, True),
    (6, "PID comparisons", 30.0, c6_pid, False),
    (7, "simulation consistency", 60.0, c7_simulation, False),
    (8, "stiffness-ratio trend", None, c8_trend, True),
)


def run_all(quick: bool = False) -> list:
    out = []
    for number, name, limit, fn, slow in CRITERIA:
        if quick and slow:
            out.append(CriterionResult(number, name, False, "skipped (--quick)", 0.0, skipped=True))
            continue
        out.append(_timed(number, name, limit, fn))
    return out
