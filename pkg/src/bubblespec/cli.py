"""Command-line front end.

The config file is a flat JSON object holding exactly the physical keys
kappa, gamma, c_v, R_g, T_inf, p_inf_star, sigma, mu_l, rho_l and M, all
in SI units. Run options (truncation, tolerances, forcing, output
directory) are command-line flags. Every emitted file starts with the
SHA-256 of the canonical config: a ``#`` comment line in CSV and text
files, a ``config_sha256`` entry in JSON files.

Exit status: 0 on success, 1 on invalid input, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .integrator import StepSizeUnderflow
from .linear_evolution import evolve_linear, state_z
from .linear_operator import PoleError, TruncationError, build_operator
from .nonlinear_dynamics import ForcingSpec, RegimeExit, evolve_nonlinear, unforced
from .params import (EquilibriumError, ParameterError, PhysicalParams,
                     solve_equilibrium)
from .periodic_orbit import PeriodicOrbitError, find_periodic
from .rate_report import REPORT_COLUMNS, natural_frequency, sweep_chi
from .spectrum import RootFindingError, SectorViolation, find_roots, rate_lower_bound, sector_check
from .state import random_state

CONFIG_KEYS = ("kappa", "gamma", "c_v", "R_g", "T_inf", "p_inf_star", "sigma",
               "mu_l", "rho_l", "M")
DEFAULT_N = 64
COMMANDS = ("equilibrium", "spectrum", "rate-bound", "simulate-linear",
            "simulate-nonlinear", "periodic", "compare-rates")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class ConfigError(ValueError):
    """Unreadable or malformed configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def load_config(path: str | os.PathLike) -> dict[str, float]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat key to number map")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    missing = sorted(set(CONFIG_KEYS) - set(raw))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    if missing:
        raise ConfigError(f"missing config keys: {missing}")
    out = {}
    for k in CONFIG_KEYS:
        v = raw[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"config value for {k} must be a number")
        out[k] = float(v)
    return out


def config_hash(cfg: dict[str, float]) -> str:
    canon = ",".join(f"{k}={float(cfg[k]).hex()}" for k in CONFIG_KEYS)
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17e}"


class _Writer:
    def __init__(self, out_dir: Path, digest: str, command: str):
        self.dir = out_dir
        self.digest = digest
        self.command = command
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        return self.dir / name

    def csv(self, name: str, columns: Sequence[str], rows) -> Path:
        lines = [f"# config_sha256: {self.digest}", f"# command: {self.command}",
                 ",".join(columns)]
        lines += [",".join(_fmt(x) for x in row) for row in rows]
        return self._write(name, "\n".join(lines) + "\n")

    def json(self, name: str, payload: dict) -> Path:
        body = {"config_sha256": self.digest, "command": self.command}
        body.update(payload)
        floats: list[str] = []
        text = json.dumps(_jsonable(body, floats), indent=2)
        # floats travel as placeholder strings so they can be written as %.17e numbers
        for i, f in enumerate(floats):
            text = text.replace(f'"{_FLOAT_TOKEN}{i}"', f, 1)
        return self._write(name, text + "\n")

    def text(self, name: str, body: str) -> Path:
        return self._write(name, f"# config_sha256: {self.digest}\n{body.rstrip()}\n")

    def _write(self, name: str, content: str) -> Path:
        path = self._path(name)
        path.write_text(content)
        self.written.append(path)
        return path


_FLOAT_TOKEN = "@@float:"


def _jsonable(x, floats: list[str]):
    if isinstance(x, dict):
        return {k: _jsonable(v, floats) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v, floats) for v in x]
    if isinstance(x, complex):
        return {"re": _jsonable(x.real, floats), "im": _jsonable(x.imag, floats)}
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    v = float(x)
    if not np.isfinite(v):
        return None
    floats.append(_fmt(v))
    return f"{_FLOAT_TOKEN}{len(floats) - 1}"


def _equilibrium(cfg: dict[str, float]):
    params = PhysicalParams(**{k: cfg[k] for k in CONFIG_KEYS if k != "M"})
    return params, solve_equilibrium(params, cfg["M"])


def _eq_payload(eq) -> dict:
    return {"M": eq.M, "R_star": eq.R_star, "rho_star": eq.rho_star, "p_star": eq.p_star,
            "kappa_bar": eq.kappa_bar, "chi": eq.chi, "b": eq.b, "d": eq.d,
            "theta_gamma": eq.theta_gamma}


def cmd_equilibrium(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    w.json("equilibrium.json", {"equilibrium": _eq_payload(eq)})


def cmd_rate_bound(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    rb = rate_lower_bound(eq)
    w.json("rate_bound.json", {"beta": rb.beta, "epsilon_used": rb.epsilon_used,
                               "branch_terms": list(rb.branch_terms),
                               "delta_disc": rb.delta_disc,
                               "binding_branch": rb.binding_branch})


def cmd_spectrum(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    roots = find_roots(eq)
    phi = sector_check(roots)
    rb = rate_lower_bound(eq)
    digest_short = w.digest[:16]
    w.csv("roots.csv", ("tau_re", "tau_im", "residual", "param_hash"),
          [(r.tau.real, r.tau.imag, r.residual, digest_short) for r in roots])
    ev = build_operator(eq, args.N).eigenvalues()
    w.csv("eigenvalues.csv", ("re", "im"), [(z.real, z.imag) for z in ev])
    w.json("spectrum_summary.json", {"root_count": len(roots), "sector_angle": phi,
                                     "max_root_re": max(r.tau.real for r in roots),
                                     "beta": rb.beta, "N": args.N,
                                     "truncated_abscissa": ev[0].real})


def _times(args, eq) -> np.ndarray:
    t_end = args.t_end if args.t_end is not None else 20.0 / rate_lower_bound(eq).beta
    if not t_end > 0.0:
        raise ValueError("--t-end must be positive")
    if args.samples < 2:
        raise ValueError("--samples must be at least 2")
    return np.linspace(0.0, t_end, args.samples)


def _mode_columns(N: int) -> list[str]:
    return [f"c_{j}" for j in range(1, N + 1)]


def cmd_simulate_linear(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    t = _times(args, eq)
    w0 = random_state(eq, args.N, np.random.default_rng(args.seed), args.init_amplitude)
    tr = evolve_linear(build_operator(eq, args.N), w0, t)
    rows = [(ti, s.R_pert, s.R_dot, state_z(s, eq), e, n, m, *s.coeffs) for ti, s, e, n, m in
            zip(tr.times, tr.states, tr.energies, tr.norms, tr.mass_residuals)]
    w.csv("linear_trace.csv", ["t", "R_pert", "R_dot", "z", "energy", "norm", "mass_residual"]
          + _mode_columns(args.N), rows)


def _forcing(args, eq) -> ForcingSpec:
    if args.amplitude == 0.0 and args.omega is None:
        return unforced(natural_frequency(eq))
    omega = args.omega if args.omega is not None else natural_frequency(eq)
    return ForcingSpec(omega=omega, amplitude=args.amplitude, waveform=args.waveform)


def _nonlinear_rows(tr, eq) -> list[tuple]:
    return [(ti, eq.R_star + s.R_pert, s.R_dot, z, m, r, n, s.R_pert, *s.coeffs)
            for ti, s, z, m, r, n in
            zip(tr.times, tr.states, tr.z_values, tr.masses, tr.min_densities, tr.norms)]


_NONLINEAR_COLUMNS = ["t", "R", "R_dot", "z", "mass", "min_density", "norm", "R_pert"]


def cmd_simulate_nonlinear(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    t = _times(args, eq)
    w0 = random_state(eq, args.N, np.random.default_rng(args.seed), args.init_amplitude)
    tr = evolve_nonlinear(w0, _forcing(args, eq), float(t[-1]), args.tol, eq, t_out=t)
    w.csv("nonlinear_trace.csv", _NONLINEAR_COLUMNS + _mode_columns(args.N),
          _nonlinear_rows(tr, eq))


def cmd_periodic(args, cfg, w: _Writer) -> None:
    _, eq = _equilibrium(cfg)
    forcing = _forcing(args, eq)
    sol = find_periodic(forcing, eq, tol=args.tol, N=args.N, with_floquet=not args.no_floquet)
    w.csv("orbit.csv", _NONLINEAR_COLUMNS + _mode_columns(args.N),
          _nonlinear_rows(sol.orbit, eq))
    w.json("periodic.json", {
        "omega": forcing.omega, "amplitude": forcing.amplitude, "waveform": forcing.waveform,
        "period": sol.period, "residual": sol.residual, "method": sol.method,
        "iterations": sol.iterations, "quadrature_defect": sol.quadrature_defect,
        "w0": sol.w0.to_vector(), "floquet": [complex(m) for m in sol.floquet],
        "contraction_rate": sol.contraction_rate})


def cmd_compare_rates(args, cfg, w: _Writer) -> None:
    params, eq = _equilibrium(cfg)
    if args.points < 1:
        raise ValueError("--points must be positive")
    lo = args.chi_min if args.chi_min is not None else 1e-3 * eq.chi
    hi = args.chi_max if args.chi_max is not None else 1e3 * eq.chi
    if not (0.0 < lo <= hi):
        raise ValueError("need 0 < chi-min <= chi-max")
    grid = np.geomspace(lo, hi, args.points)
    rep = sweep_chi(params, cfg["M"], grid, omega=args.omega, N=args.N)
    w.csv("rates.csv", REPORT_COLUMNS, rep.rows())
    w.text("rates_summary.txt", rep.summary())


_HANDLERS = {"equilibrium": cmd_equilibrium, "spectrum": cmd_spectrum,
             "rate-bound": cmd_rate_bound, "simulate-linear": cmd_simulate_linear,
             "simulate-nonlinear": cmd_simulate_nonlinear, "periodic": cmd_periodic,
             "compare-rates": cmd_compare_rates}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bubblespec", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="flat JSON config file")
        sp.add_argument("-o", "--out", default=".", help="output directory")
        sp.add_argument("-N", type=int, default=DEFAULT_N, help="Galerkin truncation")
        if name in ("simulate-linear", "simulate-nonlinear"):
            sp.add_argument("--t-end", type=float, default=None,
                            help="duration in seconds (default 20/beta)")
            sp.add_argument("--samples", type=int, default=201)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--init-amplitude", type=float, default=1e-3,
                            help="initial perturbation relative to the state scales")
        if name in ("simulate-nonlinear", "periodic"):
            sp.add_argument("--omega", type=float, default=None,
                            help="forcing frequency in rad/s (default natural frequency)")
            sp.add_argument("--amplitude", type=float, default=0.0,
                            help="forcing pressure amplitude in Pa")
            sp.add_argument("--waveform", choices=("cos", "sin"), default="cos")
        if name == "simulate-nonlinear":
            sp.add_argument("--tol", type=float, default=1e-10)
        if name == "periodic":
            sp.add_argument("--tol", type=float, default=1e-9)
            sp.add_argument("--no-floquet", action="store_true")
        if name == "compare-rates":
            sp.add_argument("--chi-min", type=float, default=None)
            sp.add_argument("--chi-max", type=float, default=None)
            sp.add_argument("--points", type=int, default=21)
            sp.add_argument("--omega", type=float, default=None)
    return parser


_NUMERICAL = (RegimeExit, PeriodicOrbitError, EquilibriumError, RootFindingError,
              SectorViolation, StepSizeUnderflow, PoleError, TruncationError,
              np.linalg.LinAlgError, FloatingPointError, ArithmeticError)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.N < 1:
            raise ValueError("-N must be positive")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"bubblespec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    writer = _Writer(out, config_hash(cfg), args.command)
    try:
        _HANDLERS[args.command](args, cfg, writer)
    except _NUMERICAL as exc:
        print(f"bubblespec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParameterError, ValueError, OSError) as exc:
        print(f"bubblespec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for p in writer.written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
