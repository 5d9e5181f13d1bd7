"""Command line entry point: ``sdl run`` and ``sdl verify``.

Exit codes: 0 success, 1 failed in-run assertion, 2 configuration error,
3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

import sdl
from sdl.errors import (
    ConfigurationError,
    DomainError,
    InputError,
    NumericalError,
    UnsupportedTargetError,
)

logger = logging.getLogger("sdl")

EXPERIMENTS = ("energy", "flow", "hopf", "spectrum", "threshold", "surface2d",
               "homogeneous", "bound_sweep")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

TRAJECTORY_COLUMNS = {
    "step": "iteration index (0 is the initial map)",
    "E": "Dirichlet energy",
    "F": "symplectic Dirichlet energy",
    "total": "objective F + alpha E",
    "H": "Hopf invariant when evaluated (S^3 only)",
    "residual_norm": "L2 norm of d phi(sharp delta phi^* omega)",
    "dt": "accepted line-search step",
}


@dataclass
class ExperimentConfig:
    experiment: str = "hopf"
    resolution: int = 24
    t: float = 1.0
    alpha: float = 0.0
    seed: int = 0
    out: str = "sdl_out"
    k: int = 3
    alpha_grid: str = "0.0:2.0:0.1"
    n: int = 3
    pi0: str = ""
    pi0p: str = "a1"
    amplitude: float = 0.05
    steps: int = 300
    count: int = 20
    degree: int = 1
    rel_tol: float = 1e-2
    grad_tol: float = 1e-8

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not (8 <= self.resolution <= 64):
            raise ConfigurationError("resolution must lie in 8..64")
        if self.resolution % 2:
            raise ConfigurationError("resolution must be even")
        if not (0.0 < self.t <= 1.0):
            raise ConfigurationError("t must lie in (0, 1]")
        if self.alpha < 0 or self.k < 1 or self.steps < 1 or self.count < 1:
            raise ConfigurationError("alpha must be >= 0 and k, steps, count >= 1")

    def alphas(self) -> np.ndarray:
        try:
            lo, hi, step = (float(x) for x in self.alpha_grid.split(":"))
        except ValueError as exc:
            raise ConfigurationError(f"alpha grid must be lo:hi:step, got {self.alpha_grid!r}") from exc
        if step <= 0 or hi < lo:
            raise ConfigurationError("alpha grid needs step > 0 and hi >= lo")
        return np.round(np.arange(lo, hi + 0.5 * step, step), 12)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file and command-line flags (in that order)."""
    cfg = ExperimentConfig()
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    conv = {"int": int, "float": float, "str": str}
    merged = {}
    if args.config:
        merged.update(read_config_file(args.config))
    merged.update({k: v for k, v in vars(args).items() if k in types and v is not None})
    for key, value in merged.items():
        if key not in types:
            raise ConfigurationError(f"unknown configuration key {key!r}")
        try:
            setattr(cfg, key, conv[types[key]](value))
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {value!r}") from exc
    cfg.validate()
    return cfg


# ------------------------------------------------------------------ experiments


def _grid(cfg, t=None):
    from sdl.dec import build_s3_grid
    return build_s3_grid((cfg.resolution,) * 3, t=cfg.t if t is None else t)


def _close(a, b, tol):
    return abs(a - b) <= tol * abs(b)


def exp_energy(cfg):
    from sdl.maps import energy_total, hopf_map
    M = _grid(cfg)
    rep = energy_total(hopf_map(M), cfg.alpha)
    res = rep.as_dict()
    checks = {
        "F_equals_t_pi2": _close(rep.F, cfg.t * np.pi**2, cfg.rel_tol),
        "E_equals_2t_pi2": _close(rep.E, 2 * cfg.t * np.pi**2, cfg.rel_tol),
    }
    return res, checks, None


def exp_hopf(cfg):
    from sdl.maps import energy_symplectic, hopf_map
    from sdl.topology import check_energy_bound, hopf_invariant
    M = _grid(cfg)
    phi = hopf_map(M)
    if M.t == 1.0:
        res = check_energy_bound(phi).as_dict()
    else:
        res = {"H": hopf_invariant(phi), "F": energy_symplectic(phi)}
        res["H_normalized"] = res["H"] / np.pi**2
    checks = {
        "H_equals_pi2": _close(res["H"], np.pi**2, cfg.rel_tol),
        "F_equals_t_pi2": _close(res["F"], cfg.t * np.pi**2, cfg.rel_tol),
    }
    return res, checks, None


def exp_flow(cfg):
    from sdl.flow import FlowParams, gradient_flow
    from sdl.maps import energy_symplectic, hopf_map, perturbed_map
    from sdl.topology import hopf_invariant
    M = _grid(cfg)
    phi0 = perturbed_map(hopf_map(M), cfg.amplitude, cfg.seed)
    H0 = hopf_invariant(phi0)
    r = gradient_flow(phi0, FlowParams(alpha=cfg.alpha, max_steps=cfg.steps, grad_tol=cfg.grad_tol))
    last = r.trajectory[-1]
    res = {"F0": energy_symplectic(phi0), "H0": H0, "F": last.F, "E": last.E, "H": last.H,
           "steps": last.step, "converged": r.converged, "residual_norm": last.residual_norm}
    checks = {"hopf_drift": abs(last.H - H0) <= 1e-2 * np.pi**2}
    if cfg.alpha == 0.0:
        checks["F_equals_t_pi2"] = _close(last.F, cfg.t * np.pi**2, cfg.rel_tol)
    return res, checks, r.trajectory


def exp_spectrum(cfg):
    from sdl.spectral import coexact_one_form_spectrum
    r = coexact_one_form_spectrum(_grid(cfg), cfg.k)
    res = r.as_dict()
    lam = r.eigenvalues[0]
    checks = {"lambda1_bound_4t2": lam >= 4 * cfg.t**2 * (1 - 1e-6)}
    if cfg.t == 1.0:
        checks["lambda1_equals_4"] = _close(lam, 4.0, 2e-2)
    return res, checks, None


def exp_threshold(cfg):
    from sdl.maps import hopf_map
    from sdl.spectral import stability_threshold_scan
    if cfg.t != 1.0:
        raise ConfigurationError("the threshold experiment runs on the round sphere (t = 1)")
    scan = stability_threshold_scan(hopf_map(_grid(cfg)), cfg.alphas())
    res = scan.as_dict()
    res["operator_tag"] = "hessian_total"
    checks = {"monotone": scan.monotone,
              "alpha_star_near_1": scan.alpha_star is not None and abs(scan.alpha_star - 1) <= 0.05}
    return res, checks, None


def exp_surface2d(cfg):
    from sdl.acceptance import check_riemann_surface
    r = check_riemann_surface(res=max(cfg.resolution, 16), max_steps=cfg.steps)
    return r.details, {"density_constant_and_F_at_bound": r.passed}, None


def exp_homogeneous(cfg):
    from sdl import lie
    R = lie.build_root_system(cfg.n)
    F = lie.build_fibration(R, cfg.pi0, cfg.pi0p)
    rec = lie.fibration_record(F)
    return rec, {"all_checks": not rec["checks_failed"]}, None


def exp_bound_sweep(cfg):
    from sdl.acceptance import _random_map
    from sdl.topology import check_energy_bound
    M = _grid(cfg)
    if M.t != 1.0:
        raise ConfigurationError("the bound sweep runs on the round sphere (t = 1)")
    rows = []
    for s in range(cfg.seed, cfg.seed + cfg.count):
        b = check_energy_bound(_random_map(M, s), closed_tol=1e-2)
        rows.append({"seed": s, **b.as_dict()})
    worst = min(r["slack"] / r["F"] for r in rows)
    return {"maps": rows, "min_relative_slack": worst}, {"F_geq_H": worst >= -cfg.rel_tol}, None


RUNNERS = {
    "energy": exp_energy, "flow": exp_flow, "hopf": exp_hopf, "spectrum": exp_spectrum,
    "threshold": exp_threshold, "surface2d": exp_surface2d, "homogeneous": exp_homogeneous,
    "bound_sweep": exp_bound_sweep,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its artifacts; returns the exit code."""
    import scipy

    from sdl.flow import write_trajectory

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results, checks, traj = RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - t0
    record = {
        "experiment": cfg.experiment,
        "discretization": {"resolution": cfg.resolution, "t": cfg.t, "seed": cfg.seed},
        "results": _jsonable(results),
        "checks": {k: bool(v) for k, v in checks.items()},
    }
    (out / "results.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    if traj is not None:
        write_trajectory(out / "trajectory.csv", traj)
    manifest = {
        "config": vars(cfg),
        "versions": {"sdl": sdl.__version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": wall,
        "files": {"results.json": "experiment results and check outcomes"},
    }
    if traj is not None:
        manifest["files"]["trajectory.csv"] = {"columns": TRAJECTORY_COLUMNS}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    failed = [k for k, v in checks.items() if not v]
    for k in failed:
        logger.error("check failed: %s", k)
    return EXIT_ASSERT if failed else EXIT_OK


def verify() -> int:
    from sdl.acceptance import run_all
    results = run_all(echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} acceptance criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_ASSERT


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdl", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one named experiment")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--resolution", type=int)
    r.add_argument("--t", type=float)
    r.add_argument("--alpha", type=float,
                   help="coupling: energy reports E + alpha F; the flow minimizes F + alpha E")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--config", help="key = value file (flags take precedence)")
    r.add_argument("--k", type=int, help="number of eigenvalues")
    r.add_argument("--alpha-grid", dest="alpha_grid", help="lo:hi:step")
    r.add_argument("--n", type=int, help="su(n) rank parameter")
    r.add_argument("--pi0", help="simple roots of Pi0, e.g. 'a1,a2'")
    r.add_argument("--pi0p", help="simple roots of Pi0'")
    r.add_argument("--amplitude", type=float)
    r.add_argument("--steps", type=int)
    r.add_argument("--count", type=int)
    r.add_argument("--degree", type=int)
    r.add_argument("--rel-tol", dest="rel_tol", type=float)
    r.add_argument("--grad-tol", dest="grad_tol", type=float)
    sub.add_parser("verify", help="run the full acceptance suite")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return verify()
        return run(build_config(args))
    except (ConfigurationError, DomainError, InputError, UnsupportedTargetError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
