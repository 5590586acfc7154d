"""Command-line front end.

Usage::

    python3 -m opo_cqfc <subcommand> --config run.yaml [--seed N] [--threads N]
                                     [--out PATH] [--result PATH]

Subcommands: spectrum, optimize, bandwidth, sweep, hessian, montecarlo,
stability. Config files are YAML; frequencies are given in MHz (ω/2π),
phases in radians, cavity lengths in millimetres and powers in watts.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .analysis import (
    HessianError,
    detect_regime_switch,
    monte_carlo_phase,
    phase_hessian,
    sweep,
)
from .netmodel import (
    FixedSetup,
    SingleOpoParams,
    TwoOpoParams,
    build_single_opo,
    build_two_opo,
    mhz_to_rad,
    pump_power,
    rad_to_mhz,
)
from .objective import BoundBox, Problem, encode, in_bounds
from .optim import AlgorithmSpec, HybridConfig, default_islands, hybrid_optimize
from .spectrum import extremal_spectra
from .stability import StabilityError, check_stability

log = logging.getLogger("opo_cqfc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
THREADS_ENV = "OPO_CQFC_THREADS"

SUBCOMMANDS = ("spectrum", "optimize", "bandwidth", "sweep", "hessian", "montecarlo", "stability")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration document."""


class NumericalError(RuntimeError):
    """A computation could not produce a meaningful result."""


# ---------------------------------------------------------------- config schema

_SCHEMA = {
    "problem": {
        "topology": "two_opo", "kind": "point", "omega_opt_mhz": 0.0,
        "L_in": 0.01, "L_out": 0.05, "L_c": None, "L1": None, "L2": None, "L3": None,
        "omega_B_mhz": 100.0, "h_B_mhz": 1.0, "g": 0.001, "penalty": 1e6,
    },
    "bounds": {"omega_u_mhz": 100.0, "T_u": 0.9, "x_u": 0.3},
    "setup": {
        "l_eff_mm": 87.0, "controller_l_eff_mm": None, "P_th_w": 14.86,
        "pump_wavelength_nm": 775.0, "signal_wavelength_nm": 1550.0,
    },
    "optimizer": {"n_pop": 30, "n_ev": 30, "seed": 0, "islands": None},
    "network": None,  # free-form, validated per topology
    "spectrum": {"f_min_mhz": 0.0, "f_max_mhz": 100.0, "points": 401},
    "sweep": {"axes": None, "detect_switch": False},
    "hessian": {"step": 1e-3},
    "montecarlo": {"sigma": [0.1], "samples": 10000},
}

_SINGLE_NET = {"T1", "T2", "L", "omega0_mhz", "x", "theta_xi", "L_tl"}
_TWO_NET = {"Tp1", "Tp2", "Lp", "Tc1", "Tc2", "Lc", "omega_p_mhz", "omega_c_mhz", "x_p", "x_c",
            "theta_p", "theta_c", "phi1", "phi2", "L1", "L2", "L3"}
_SWEEP_AXES = {"omega_opt_mhz", "omega_u_mhz", "x_u", "T_u", "L_in", "L_out", "L_c", "L1", "L2", "L3"}


def _merge_section(name, given):
    defaults = _SCHEMA[name]
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return {**defaults, **given}


@dataclass(frozen=True)
class RunConfig:
    """Normalized configuration document."""

    problem: dict
    bounds: dict
    setup: dict
    optimizer: dict
    network: Optional[dict]
    spectrum: dict
    sweep: dict
    hessian: dict
    montecarlo: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in _SCHEMA}
        if out["network"] is None:
            del out["network"]
        return json.loads(json.dumps(out))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def fixed_setup(self) -> FixedSetup:
        s = self.setup
        ctrl = s["controller_l_eff_mm"]
        return FixedSetup(
            effective_cavity_length=s["l_eff_mm"] * 1e-3,
            controller_cavity_length=None if ctrl is None else ctrl * 1e-3,
            threshold_power=s["P_th_w"],
            pump_wavelength=s["pump_wavelength_nm"] * 1e-9,
            signal_wavelength=s["signal_wavelength_nm"] * 1e-9,
        )

    def to_problem(self, kind: Optional[str] = None) -> Problem:
        p, b = self.problem, self.bounds
        try:
            return Problem(
                topology=p["topology"],
                kind=kind or p["kind"],
                bounds=BoundBox(omega_u=mhz_to_rad(b["omega_u_mhz"]), T_u=b["T_u"], x_u=b["x_u"]),
                L_in=p["L_in"], L_out=p["L_out"], L_c=p["L_c"], L1=p["L1"], L2=p["L2"], L3=p["L3"],
                omega_opt=mhz_to_rad(p["omega_opt_mhz"]),
                omega_B=mhz_to_rad(p["omega_B_mhz"]),
                h_B=mhz_to_rad(p["h_B_mhz"]),
                g=p["g"], penalty=p["penalty"],
                setup=self.fixed_setup(),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid problem: {exc}") from exc

    def hybrid_config(self, workers: int = 1) -> HybridConfig:
        o = self.optimizer
        try:
            islands = default_islands() if o["islands"] is None else tuple(
                AlgorithmSpec(spec["kind"], dict(spec.get("params", {}))) for spec in o["islands"]
            )
            return HybridConfig(islands=islands, n_pop=int(o["n_pop"]), n_ev=int(o["n_ev"]),
                                master_seed=int(o["seed"]), workers=workers)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid optimizer settings: {exc}") from exc

    def network_params(self):
        if self.network is None:
            raise ConfigError("this subcommand needs a 'network' section or --result")
        net = dict(self.network)
        topo = self.problem["topology"]
        allowed = _SINGLE_NET if topo == "single" else _TWO_NET
        unknown = set(net) - allowed
        missing = allowed - set(net) - {"L_tl"}
        if unknown or missing:
            raise ConfigError(f"network section for {topo}: unknown {sorted(unknown)}, missing {sorted(missing)}")
        for key in [k for k in net if k.endswith("_mhz")]:
            net[key[:-4]] = mhz_to_rad(net.pop(key))
        try:
            return SingleOpoParams(**net) if topo == "single" else TwoOpoParams(**net)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid network parameters: {exc}") from exc


def parse_config(doc) -> RunConfig:
    """Validate a config mapping (as loaded from YAML) and fill in defaults."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(doc) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    sections = {name: _merge_section(name, doc.get(name)) for name in _SCHEMA if name != "network"}
    net = doc.get("network")
    if net is not None and not isinstance(net, dict):
        raise ConfigError("section 'network' must be a mapping")
    axes = sections["sweep"]["axes"]
    if axes is not None:
        if not isinstance(axes, dict) or set(axes) - _SWEEP_AXES:
            raise ConfigError(f"sweep axes must be a mapping over {sorted(_SWEEP_AXES)}")
    cfg = RunConfig(network=None if net is None else dict(net), **sections)
    cfg.to_problem()
    cfg.hybrid_config()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    return parse_config(doc)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


# ---------------------------------------------------------------- helpers


def _axis_values(spec) -> list:
    if isinstance(spec, dict):
        if set(spec) != {"start", "stop", "step"}:
            raise ConfigError("range axes need exactly start, stop, step")
        start, stop, step = (float(spec[k]) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ConfigError("axis step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    if isinstance(spec, (list, tuple)) and spec:
        return [float(v) for v in spec]
    raise ConfigError("axis must be a nonempty list or a {start, stop, step} range")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    _emit(path, buf.getvalue())


def _write_json(path, payload):
    _emit(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _z_from_result(path, prob: Problem) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
        z = np.asarray(data["best_z"], dtype=float)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read result file {path}: {exc}") from exc
    if z.shape != (prob.dim,) or not in_bounds(z, prob):
        raise ConfigError("result best_z does not fit the configured problem")
    return z


def _network_problem(cfg: RunConfig, params) -> Problem:
    """The configured problem with its fixed losses taken from the network section."""
    prob = cfg.to_problem()
    if prob.topology == "single":
        return prob.with_(L_in=float(params.L), L_out=float(params.L_tl))
    return prob.with_(L_in=float(params.Lp), L_c=float(params.Lc), L1=float(params.L1),
                      L2=float(params.L2), L3=float(params.L3))


def _decision_vector(cfg: RunConfig, args):
    """(z, problem) from --result or from the network section."""
    prob = cfg.to_problem()
    if args.result:
        return _z_from_result(args.result, prob), prob
    params = cfg.network_params()
    prob = _network_problem(cfg, params)
    z = encode(params, prob)
    if not in_bounds(z, prob):
        raise ConfigError("network parameters lie outside the configured bounds")
    return z, prob


def _model(cfg: RunConfig, args):
    prob = cfg.to_problem()
    if args.result:
        from .objective import build
        return build(_z_from_result(args.result, prob), prob)
    params = cfg.network_params()
    setup = cfg.fixed_setup()
    return build_single_opo(params, setup) if prob.topology == "single" else build_two_opo(params, setup)


def _result_payload(cfg: RunConfig, res, prob: Problem) -> dict:
    out = res.to_dict()
    out["config_hash"] = cfg.config_hash()
    out["variables"] = list(prob.variables)
    x_names = [v for v in prob.variables if v.startswith("x")]
    out["pump_power_w"] = {v: pump_power(res.best_z[prob.variables.index(v)], prob.setup.threshold_power)
                           for v in x_names}
    return out


# ---------------------------------------------------------------- subcommands


def cmd_spectrum(cfg, args, workers):
    ss = _model(cfg, args)
    sp = cfg.spectrum
    f = np.linspace(sp["f_min_mhz"], sp["f_max_mhz"], int(sp["points"]))
    if not check_stability(ss).stable:
        raise NumericalError("network is unstable; spectra are undefined")
    res = extremal_spectra(ss, mhz_to_rad(f))
    if np.any(res.P_minus <= 0):
        raise NumericalError("non-positive spectral density")
    rows = zip(f, 10 * np.log10(res.P_minus), 10 * np.log10(res.P_plus), res.theta_opt)
    _write_csv(args.out, ["omega_mhz", "Q_minus_db", "Q_plus_db", "theta_opt_rad"], rows)


def _optimize(cfg, args, workers, kind):
    prob = cfg.to_problem(kind)
    res = hybrid_optimize(prob, cfg.hybrid_config(workers))
    payload = _result_payload(cfg, res, prob)
    _write_json(args.out, payload)
    if res.all_unstable:
        raise NumericalError("no stable network found")


def cmd_optimize(cfg, args, workers):
    _optimize(cfg, args, workers, "point")


def cmd_bandwidth(cfg, args, workers):
    _optimize(cfg, args, workers, "band")


_SWEEP_COLUMNS = {
    "two_opo": ("Tp1", "Tp2", "Tc1", "Tc2", "omega_p_mhz", "omega_c_mhz", "x_p", "x_c",
                "theta_p", "theta_c", "phi1", "phi2"),
    "single": ("T1", "T2", "omega0_mhz", "x", "theta_xi"),
}


def cmd_sweep(cfg, args, workers):
    axes = cfg.sweep["axes"]
    if not axes:
        raise ConfigError("sweep needs 'sweep.axes'")
    grid = {}
    for name, spec in axes.items():
        vals = _axis_values(spec)
        if name.endswith("_mhz"):
            grid[name[:-4]] = [float(v) for v in mhz_to_rad(np.array(vals))]
        else:
            grid[name] = vals
    prob = cfg.to_problem()
    table = sweep(prob, grid, cfg.hybrid_config(), workers=workers)
    topo = prob.topology
    header = ["omega_opt_mhz", "x_u", "T_u", "L_in", "L_out", "Q_minus_db", *_SWEEP_COLUMNS[topo], "seed"]
    rows = []
    for r in table.rows:
        q = r.point
        p = prob.with_(**q)
        vals = [rad_to_mhz(p.omega_opt), p.bounds.x_u, p.bounds.T_u, p.L_in, p.L_out, r.Q_minus_db]
        for col in _SWEEP_COLUMNS[topo]:
            if col.endswith("_mhz"):
                vals.append(rad_to_mhz(r.params.get(col[:-4], float("nan"))))
            else:
                vals.append(r.params.get(col, float("nan")))
        rows.append(vals + [r.seed])
    _write_csv(args.out, header, rows)
    if cfg.sweep["detect_switch"]:
        try:
            star = detect_regime_switch(table)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        msg = "no switch detected" if star is None else f"regime switch at {rad_to_mhz(star)!r} MHz"
        print(msg, file=sys.stderr)
    if not any(r.ok for r in table.rows):
        raise NumericalError("every sweep point failed")


def cmd_hessian(cfg, args, workers):
    z, prob = _decision_vector(cfg, args)
    rep = phase_hessian(z, prob, step=float(cfg.hessian["step"]))
    _write_json(args.out, {
        "config_hash": cfg.config_hash(),
        "variables": list(rep.variables),
        "H": rep.H.tolist(),
        "eigenvalues": rep.eigenvalues.tolist(),
        "eigenvectors": rep.eigenvectors.T.tolist(),
        "step": rep.step,
        "objective": "J",
    })


def cmd_montecarlo(cfg, args, workers):
    z, prob = _decision_vector(cfg, args)
    sigmas = cfg.montecarlo["sigma"]
    sigmas = [sigmas] if np.isscalar(sigmas) else list(sigmas)
    n = int(cfg.montecarlo["samples"])
    seed = int(cfg.optimizer["seed"])
    out = []
    for k, s in enumerate(sigmas):
        try:
            r = monte_carlo_phase(z, prob, float(s), n, seed=seed + k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        out.append({
            "sigma": float(s), "mean_Q_minus_db": r.mean_Q_minus_db,
            "hessian_prediction_db": r.hessian_prediction_db, "samples": r.n_samples,
            "excluded": r.n_excluded, "warning": r.warning,
        })
    _write_json(args.out, {"config_hash": cfg.config_hash(), "seed": seed,
                           "hessian_of": "P_minus", "results": out})


def cmd_stability(cfg, args, workers):
    ss = _model(cfg, args)
    rep = check_stability(ss)
    _write_json(args.out, {
        "config_hash": cfg.config_hash(),
        "stable": bool(rep.stable),
        "stability_margin": float(rep.margin),
        "eigenvalues": [[float(e.real), float(e.imag)] for e in rep.eigenvalues],
    })


_COMMANDS = {
    "spectrum": cmd_spectrum, "optimize": cmd_optimize, "bandwidth": cmd_bandwidth,
    "sweep": cmd_sweep, "hessian": cmd_hessian, "montecarlo": cmd_montecarlo,
    "stability": cmd_stability,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opo-cqfc", description="Squeezing optimization for OPO networks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML run configuration")
        s.add_argument("--seed", type=int, default=None, help="override optimizer.seed")
        s.add_argument("--threads", type=int, default=None,
                       help=f"worker cap (default: ${THREADS_ENV} or 1)")
        s.add_argument("--out", default=None, help="output path (default: stdout)")
        s.add_argument("--result", default=None, help="optimize JSON whose best_z replaces 'network'")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if n < 1:
        raise ConfigError("thread count must be positive")
    return n


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, optimizer={**cfg.optimizer, "seed": args.seed})
        workers = _threads(args.threads)
        print(f"opo-cqfc {__version__} {args.command} seed={cfg.optimizer['seed']} "
              f"config={cfg.config_hash()}", file=sys.stderr)
        _COMMANDS[args.command](cfg, args, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, StabilityError, HessianError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(run())
