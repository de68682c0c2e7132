import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seaforge.controllers import HINF3_K1, HINF3_K2, HPID_GAINS, hinf3
from seaforge.errors import NoStabilizerError, SynthesisError
from seaforge.loop import Controller, build_generalized_plant, close_loop
from seaforge.lti import RationalTF, freqresp
from seaforge.plant import desired_impedance
from seaforge.specs import default_spec_set, evaluate, recalibrated_gamma1
from seaforge.synthesis import (
    ControllerStructure,
    FastObjective,
    SynthesisOptions,
    decode,
    encode,
    objective,
    random_theta,
    stabilize_phase,
    synthesize,
    theta_length,
    verify_published,
)


@pytest.fixture(scope="module")
def specs(plant):
    return default_spec_set(plant, recalibrated_gamma1(plant, 0.6))


def _same(H1, H2, w=np.logspace(-2, 3, 40)):
    np.testing.assert_allclose(freqresp(H1, w), freqresp(H2, w), rtol=1e-12)


# -- structures ------------------------------------------------------------------


def test_decode_pid():
    K = decode(ControllerStructure("pid", (1000.0, 10.0, 20.0)))
    assert K.K1.is_zero()
    w = np.logspace(-1, 2, 9)
    s = 1j * w
    np.testing.assert_allclose(freqresp(K.K2, w), -(1000 + 10 / s + 20 * s), rtol=1e-12)


def test_decode_filtered_pid():
    K = decode(ControllerStructure("filtered_pid", HPID_GAINS))
    w = np.logspace(-1, 2, 9)
    s = 1j * w
    kp, ki, kd, p = HPID_GAINS
    np.testing.assert_allclose(freqresp(K.K2, w), -(kp + ki / s + kd * s / (s + p)), rtol=1e-12)


def test_decode_published_pair_exactly():
    K = decode(encode("free_pair", hinf3()))
    assert K.K1.num.coeffs.tolist() == HINF3_K1[0] and K.K1.den.coeffs.tolist() == HINF3_K1[1]
    assert K.K2.num.coeffs.tolist() == HINF3_K2[0] and K.K2.den.coeffs.tolist() == HINF3_K2[1]


def test_shape_error():
    with pytest.raises(ValueError):
        ControllerStructure("pid", (1.0, 2.0))
    with pytest.raises(ValueError):
        ControllerStructure("lead_lag", (1.0,))


@pytest.mark.parametrize("kind, order", [("free_pair", 1), ("free_pair", 3), ("pid", 3), ("filtered_pid", 3)])
def test_encode_decode_identity(kind, order):
    rng = np.random.default_rng(5)
    for _ in range(20):
        theta = random_theta(kind, order, rng)
        back = encode(kind, decode(ControllerStructure(kind, tuple(theta), order)), order).theta
        np.testing.assert_allclose(back, theta, rtol=1e-12, atol=1e-12 * np.max(np.abs(theta)))


def test_theta_lengths():
    assert theta_length("free_pair", 3) == 14
    assert theta_length("pid") == 3 and theta_length("filtered_pid") == 4


def test_random_start_distribution():
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = random_theta("free_pair", 3, rng)
        mags = np.abs(t)
        assert np.all((mags >= 0.1) & (mags <= 1e4))
        K = decode(ControllerStructure("free_pair", tuple(t)))
        assert np.all(K.K1.poles().real < 0) and np.all(K.K2.poles().real < 0)


# -- objective ---------------------------------------------------------------------


def test_objective_published_pair(G06, specs):
    assert objective(G06, encode("free_pair", hinf3()), specs) <= 1 + 1e-6


def test_objective_open_loop(G06, specs):
    v = objective(G06, ControllerStructure("free_pair", (0.0,) * 14), specs)
    assert v == pytest.approx(0.2012 / 0.03, rel=5e-3)


def test_objective_unstable(G06, specs):
    v = objective(G06, ControllerStructure("pid", (-100.0, -1.0, 0.0)), specs)
    assert v > 1e6


@given(st.integers(0, 10_000))
def test_fast_channels_match_exact_closure(seed):
    from seaforge.plant import default_plant

    plant = default_plant()
    G = build_generalized_plant(plant, desired_impedance(plant, 0.6))
    theta = random_theta("free_pair", 2, np.random.default_rng(seed))
    f = FastObjective(G, [], "free_pair", 2)
    m = close_loop(G, decode(ControllerStructure("free_pair", tuple(theta), 2)))
    w = np.logspace(-1, 3, 17)
    ch = f.channels(theta, base=f._plant_on(w))
    for key, attr in [("phu", "T_phu"), ("dt", "T_dt"), ("nt", "T_nt_true"), ("phe_w", "T_phe_w")]:
        ref = freqresp(getattr(m, attr), w)
        np.testing.assert_allclose(ch[key], ref, rtol=1e-5, atol=1e-5 * np.max(np.abs(ref)))


def test_objective_upper_bounded_by_exact(G06, specs):
    # grid peaks can only under-estimate the exact band norms
    struct = encode("free_pair", hinf3())
    rep = evaluate(close_loop(G06, decode(struct)), specs)
    f = FastObjective(G06, specs, "free_pair")
    pk = f.peaks(np.asarray(struct.theta), f.poles(np.asarray(struct.theta)))
    for i, r in enumerate(rep.items):
        assert pk[i] <= r.achieved * (1 + 1e-9)
        assert pk[i] >= r.achieved * (1 - 1e-3)


# -- stabilization and search ----------------------------------------------------


def test_stabilize_phase(G06, specs):
    start = ControllerStructure("pid", (-100.0, -1.0, 0.0))
    out = stabilize_phase(G06, start, specs, budget=2000)
    assert close_loop(G06, decode(out)).abscissa < -1e-3


def test_stabilize_phase_budget(G06, specs):
    with pytest.raises(NoStabilizerError) as exc:
        stabilize_phase(G06, ControllerStructure("pid", (-100.0, -1.0, 0.0)), specs, budget=2)
    assert exc.value.best_abscissa > -1e-3


def test_history_is_monotone_and_report_exact(G06, specs):
    res = synthesize(G06, "pid", specs, SynthesisOptions(starts=2, budget=300, seed=1))
    h = np.asarray(res.objective_history)
    assert np.all(np.diff(h) <= 0)
    assert res.report == evaluate(close_loop(G06, res.controller), specs)
    assert res.evaluations > 0 and res.seed == 1


def test_deterministic(G06, specs):
    opts = SynthesisOptions(starts=2, budget=300, seed=3)
    a = synthesize(G06, "filtered_pid", specs, opts)
    b = synthesize(G06, "filtered_pid", specs, opts)
    assert a.structure == b.structure and a.report == b.report and a.objective_history == b.objective_history


def test_warm_start_never_worse(G06, specs):
    theta0 = encode("free_pair", hinf3()).theta
    start = evaluate(close_loop(G06, hinf3()), specs)
    res = synthesize(G06, "free_pair", specs, SynthesisOptions(starts=1, budget=400, seed=0), theta0=theta0)
    assert res.report.soft_level <= start.soft_level + 1e-9
    assert res.report.all_pass


def test_overall_pass_implies_hard_constraints(G06, specs):
    res = synthesize(G06, "pid", specs, SynthesisOptions(starts=2, budget=300, seed=2))
    if res.report.all_pass:
        assert res.report.stable and res.report.item("passivity").achieved <= 1 + 1e-3


def test_infeasible_target_reported_honestly(plant):
    G = build_generalized_plant(plant, desired_impedance(plant, 0.9))
    specs = default_spec_set(plant, recalibrated_gamma1(plant, 0.9) / 100)
    try:
        res = synthesize(G, "free_pair", specs, SynthesisOptions(starts=1, budget=400, seed=0))
    except SynthesisError:
        return
    assert not res.report.all_pass and res.report.level > 1


def test_starts_must_be_positive(G06, specs):
    with pytest.raises(ValueError):
        synthesize(G06, "pid", specs, SynthesisOptions(starts=0))


# -- published controllers -----------------------------------------------------


def test_verify_published_pair():
    rep = verify_published("hinf3", 0.6)
    assert rep.all_pass


def test_verify_published_pid_passive():
    assert verify_published("pid", 0.6).item("passivity").passed


def test_verify_published_filtered_pid_ordering():
    # the filtered PID's rendering peak sits between the other two
    levels = {n: verify_published(n, 0.6).item("phe_w").achieved for n in ("hinf3", "hpid", "pid")}
    assert levels["hinf3"] < levels["hpid"] < levels["pid"]


def test_verify_published_unknown():
    with pytest.raises(ValueError):
        verify_published("lqr")
