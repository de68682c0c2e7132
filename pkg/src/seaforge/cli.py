"""``seaforge`` command line: verify, bode, synth, sim and repro.

Exit codes: 0 pass, 1 spec failure, 2 bad input, 3 synthesis failure,
4 unstable closure refused by ``sim``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .controllers import PUBLISHED, published
from .errors import SeaforgeError, SynthesisError, UnstableLoopError, ValidationError
from .loop import _CHANNEL_ATTR, Controller, build_generalized_plant, close_loop
from .lti import freqresp
from .plant import default_plant, desired_impedance, load_plant
from .simulator import SimScenario, Signal, calibrate_amplitude, load_scenario, simulate, write_csv, write_metrics
from .specs import default_spec_set, evaluate, load_specs, recalibrated_gamma1
from .synthesis import SynthesisOptions, encode, synthesize

log = logging.getLogger("seaforge")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SYNTH, EXIT_UNSTABLE = 0, 1, 2, 3, 4
BODE_CHANNELS = tuple(k for k in _CHANNEL_ATTR if k != "passivity")


@dataclass
class RunManifest:
    command: str
    config_paths: dict
    seed: int | None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    outputs: list = field(default_factory=list)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2))
        return path


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _json_num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_num(v) for v in x]
    return x


def _dump(obj) -> str:
    # Python floats serialize with repr, i.e. shortest exact round-trip
    return json.dumps(_json_num(obj), indent=2)


def _plant(args):
    return load_plant(args.plant) if getattr(args, "plant", None) else default_plant()


def _controller(spec: str) -> Controller:
    if spec in PUBLISHED:
        return published(spec)
    path = spec[5:] if spec.startswith("file:") else spec
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"controller file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"controller file {path} is not valid JSON ({exc})") from None
    return Controller.from_dict(data)


def _gamma1(args, plant) -> float:
    if args.gamma1 is not None:
        return args.gamma1
    try:
        return recalibrated_gamma1(plant, args.alpha)
    except ValueError as exc:
        raise InputError(f"{exc}; pass --gamma1") from None


def _specs(args, plant):
    if getattr(args, "specs", None):
        return load_specs(args.specs)
    return default_spec_set(plant, _gamma1(args, plant))


def _seed(args) -> int:
    env = os.environ.get("SEAFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"SEAFORGE_SEED must be an integer, got {env!r}") from None
    return args.seed


def _closed(args):
    plant = _plant(args)
    G = build_generalized_plant(plant, desired_impedance(plant, args.alpha))
    return plant, G, close_loop(G, _controller(args.controller))


# -- commands -------------------------------------------------------------------


def cmd_verify(args) -> int:
    plant, G, maps = _closed(args)
    report = evaluate(maps, _specs(args, plant))
    print(_dump(report.to_dict()))
    return EXIT_OK if report.all_pass else EXIT_FAIL


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:points_per_decade`` -> log grid including both edges."""
    try:
        lo, hi, ppd = text.split(":")
        lo, hi, ppd = float(lo), float(hi), int(ppd)
    except ValueError:
        raise InputError(f"grid must be lo:hi:points_per_decade, got {text!r}") from None
    if not (0 < lo < hi and ppd > 0):
        raise InputError("grid needs 0 < lo < hi and a positive density")
    n = int(round(math.log10(hi / lo) * ppd)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), max(n, 2))


def cmd_bode(args) -> int:
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    bad = [c for c in channels if c not in BODE_CHANNELS]
    if bad:
        raise InputError(f"unknown channel(s) {bad}; choose from {list(BODE_CHANNELS)}")
    w = parse_grid(args.grid)
    _, _, maps = _closed(args)
    cols = [w]
    header = ["omega_rad_s"]
    for ch in channels:
        with np.errstate(divide="ignore"):
            h = freqresp(maps.channel(ch), w)
            mag = np.abs(h)
            cols += [mag, 20 * np.log10(mag), np.degrees(np.angle(h))]
        header += [f"{ch}_mag_abs", f"{ch}_mag_db", f"{ch}_phase_deg"]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        wr = csv.writer(out)
        wr.writerow(header)
        for row in np.column_stack(cols):
            wr.writerow([f"{v:.17g}" for v in row])
    finally:
        if args.out:
            out.close()
    if args.out:
        RunManifest("bode", _paths(args), None, outputs=[args.out]).write(args.out + ".manifest.json")
    return EXIT_OK


def _paths(args) -> dict:
    keys = ("plant", "specs", "scenario", "controller")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None)}


def cmd_synth(args) -> int:
    plant = _plant(args)
    G = build_generalized_plant(plant, desired_impedance(plant, args.alpha))
    specs = _specs(args, plant)
    seed = _seed(args)
    opts = SynthesisOptions(starts=args.starts, budget=args.budget, seed=seed, workers=args.workers)
    theta0 = None
    if args.warm_start:
        theta0 = encode(args.structure, _controller(args.warm_start), args.order).theta
    try:
        res = synthesize(G, args.structure, specs, opts, order=args.order, theta0=theta0)
    except SynthesisError as exc:
        print(_dump({"error": str(exc), "diagnostics": getattr(exc, "diagnostics", {})}))
        return EXIT_SYNTH
    doc = {
        **res.controller.to_dict(),
        "structure": {"kind": res.structure.kind, "order": res.structure.order, "theta": list(res.structure.theta)},
        "alpha": args.alpha,
        "evaluations": res.evaluations,
        "seed": seed,
        "report": res.report.to_dict(),
    }
    text = _dump(doc)
    if args.out:
        Path(args.out).write_text(text)
        RunManifest("synth", _paths(args), seed, outputs=[args.out]).write(args.out + ".manifest.json")
    print(_dump(res.report.to_dict()))
    return EXIT_OK if res.report.all_pass else EXIT_FAIL


def default_chirp(duration: float = 10.0, dt: float = 1e-3) -> SimScenario:
    return SimScenario(Signal("chirp", 1.0, f0=0.0, f1=6.0), duration=duration, dt=dt)


def cmd_sim(args) -> int:
    _, _, maps = _closed(args)
    scenario = load_scenario(args.scenario) if args.scenario else default_chirp()
    if args.calibrate_wd is not None:
        scenario = calibrate_amplitude(maps, scenario, args.calibrate_wd)
    try:
        result = simulate(maps, scenario, allow_unstable=args.allow_unstable)
    except UnstableLoopError as exc:
        print(f"refused: {exc} (use --allow-unstable)", file=sys.stderr)
        return EXIT_UNSTABLE
    prefix = args.out
    outs = []
    if prefix:
        outs = [str(write_csv(result, prefix + ".csv")), str(write_metrics(result, prefix + "_metrics.json"))]
        RunManifest("sim", _paths(args), scenario.seed, outputs=outs).write(prefix + ".manifest.json")
    print(_dump({"metrics": result.metrics, "amplitude": scenario.hand_motion.amplitude,
                 "provenance": result.provenance}))
    return EXIT_OK


def cmd_repro(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        tag = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
        print(f"{tag}  {r.number}. {r.name:<{width}}  {r.detail}  [{r.seconds:.1f} s]")
    return EXIT_OK if all(r.passed or r.skipped for r in results) else EXIT_FAIL


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seaforge", description="Stiffness-rendering controller toolkit for a cable-driven SEA.")
    p.add_argument("--version", action="version", version=f"seaforge {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, controller=True):
        sp.add_argument("--plant", help="plant config JSON (default: identified SEA)")
        sp.add_argument("--alpha", type=float, default=0.6, help="target stiffness ratio Zd/Ks")
        if controller:
            sp.add_argument("--controller", default="hinf3",
                            help="hinf3, pid, hpid, or a controller JSON path (optionally prefixed file:)")

    v = sub.add_parser("verify", help="check a controller against the spec set")
    common(v)
    v.add_argument("--gamma1", type=float)
    v.add_argument("--specs", help="spec set JSON (overrides the defaults)")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bode", help="frequency response CSV")
    common(b)
    b.add_argument("--channels", default="Zbar,W_pass", help=f"comma list from {','.join(BODE_CHANNELS)}")
    b.add_argument("--grid", default="1e-2:1e5:50", help="lo:hi:points_per_decade")
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bode)

    s = sub.add_parser("synth", help="fixed-structure synthesis")
    common(s, controller=False)
    s.add_argument("--structure", choices=("free_pair", "pid", "filtered_pid"), default="free_pair")
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--gamma1", type=float)
    s.add_argument("--specs")
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--budget", type=int, default=4000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int)
    s.add_argument("--warm-start", help="controller to use as start 0")
    s.add_argument("--out", help="controller JSON path")
    s.set_defaults(func=cmd_synth)

    m = sub.add_parser("sim", help="time-domain simulation")
    common(m)
    m.add_argument("--scenario", help="scenario JSON (default: 10 s chirp 0-6 Hz)")
    m.add_argument("--calibrate-wd", type=float, help="rescale hand motion so max |omega_d| equals this")
    m.add_argument("--allow-unstable", action="store_true")
    m.add_argument("--out", help="output prefix for CSV, metrics JSON and manifest")
    m.set_defaults(func=cmd_sim)

    r = sub.add_parser("repro", help="run the acceptance battery")
    r.add_argument("--quick", action="store_true", help="skip the slow synthesis criteria")
    r.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, ValidationError, ValueError) as exc:
        print(f"seaforge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SeaforgeError as exc:
        print(f"seaforge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
