"""
End-to-end experiment runner.

A run builds the phantom, picks CGO illuminations for the domain-averaged
tensor, synthesizes the five magnetic fields, reconstructs from the clean
fields and (when ``alpha > 0``) from noisy copies, optionally regularizes the
six coefficient maps, and scores everything against the truth.

Clean and noisy data are processed differently by default
(``derivative = auto``): clean fields are differentiated with the plain
finite-difference stencils and regularized with ``rho_clean``, noisy fields
with Savitzky-Golay filters and ``rho``.
"""
from __future__ import annotations

import configparser
import contextlib
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cgo import DEFAULT_ANGLES, choose_illuminations
from .forward import solve_maxwell_many
from .grid import ComplexScalarField, Grid2D, PhysicsParams, make_grid, validate_ellipticity
from .io import read_field_csv, write_field_csv, write_pgm
from .metrics import error_table
from .noise import add_noise
from .phantoms import COEFFICIENTS, default_sim2_spec, discontinuity_mask, load_phantom, simulation1
from .phantoms import simulation1_coefficients
from .reconstruction import (
    build_M_system,
    compute_lambdas,
    field_derivatives,
    finalize,
    solve_gamma_pointwise,
)
from .regularization import RegConfig, regularize

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "StageError",
    "load_config",
    "run_experiment",
    "rerun_from_fields",
    "reference_tensor",
    "build_phantom",
    "write_outputs",
    "RHO_NOISY",
    "RHO_CLEAN",
]

log = logging.getLogger(__name__)

# calibrated on the two phantoms at N=80, alpha=1e-3 (noisy) and alpha=0 (clean)
RHO_NOISY = {"none": 0.0, "tikhonov": 3e-3, "tv": 5e-3}
RHO_CLEAN = {"none": 0.0, "tikhonov": 1e-5, "tv": 1e-3}

PHANTOMS = ("sim1", "sim2", "file")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: str = "sim1"
    phantom_file: str | None = None
    grid_n: int = 80
    omega: float = 1.0
    mu0: float = 1.0
    alpha: float = 0.0
    seed: int = 0
    angles: tuple | None = None
    # reconstruction
    c0_rel: float = 1e-6
    sigma_min_tol: float = 1e-8
    derivative: str = "auto"
    window: int = 25
    order: int = 4
    # regularization
    reg: str = "tikhonov"
    rho: float | None = None
    rho_clean: float | None = None
    bregman_mu: float | None = None
    reg_iters: int = 500
    reg_tol: float = 1e-6
    isotropic: bool = False
    # output
    out_dir: str | None = None
    dump_intermediate: bool = False
    pgm: bool = False

    def __post_init__(self):
        if self.phantom not in PHANTOMS:
            raise ValueError(f"phantom must be one of {PHANTOMS}, got {self.phantom!r}")
        if self.phantom == "file" and not self.phantom_file:
            raise ValueError("phantom = file needs phantom_file")
        if self.grid_n < 4 or self.grid_n % 2:
            raise ValueError(f"grid_n must be even and >= 4, got {self.grid_n}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.derivative not in ("auto", "fd", "savgol"):
            raise ValueError(f"unknown derivative method {self.derivative!r}")
        if self.reg not in RHO_NOISY:
            raise ValueError(f"unknown regularization {self.reg!r}")
        if self.angles is not None:
            object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def params(self) -> PhysicsParams:
        return PhysicsParams(self.omega, self.mu0)

    def derivative_for(self, noisy: bool) -> str:
        if self.derivative != "auto":
            return self.derivative
        return "savgol" if noisy else "fd"

    def rho_for(self, noisy: bool) -> float:
        if noisy:
            return RHO_NOISY[self.reg] if self.rho is None else self.rho
        if self.rho_clean is not None:
            return self.rho_clean
        return RHO_CLEAN[self.reg] if self.rho is None else self.rho

    def reg_config(self, noisy: bool) -> RegConfig:
        method = self.reg if self.rho_for(noisy) > 0 else "none"
        return RegConfig(rho=self.rho_for(noisy), method=method, bregman_mu=self.bregman_mu,
                         max_iters=self.reg_iters, tol=self.reg_tol, isotropic=self.isotropic)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["angles"] = None if self.angles is None else list(self.angles)
        return d


_SECTIONS = {
    "experiment": ("phantom", "phantom_file", "grid_n", "omega", "mu0", "alpha", "seed", "angles"),
    "reconstruction": ("c0_rel", "sigma_min_tol", "derivative", "window", "order"),
    "regularization": ("reg", "rho", "rho_clean", "bregman_mu", "reg_iters", "reg_tol",
                       "isotropic"),
    "output": ("out_dir", "dump_intermediate", "pgm"),
}


def _convert(name: str, text: str):
    ftype = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    text = text.strip()
    if text.lower() in ("", "none", "default"):
        return None
    if name == "angles":
        return tuple(float(t) for t in text.replace(",", " ").split())
    if "bool" in ftype:
        return text.lower() in ("1", "true", "yes", "on")
    if ftype.startswith("int"):
        return int(text)
    if ftype.startswith("float"):
        return float(text)
    return text


def load_config(path, **overrides) -> ExperimentConfig:
    """
    Read an INI experiment file.  ``overrides`` (e.g. from command-line flags)
    win over file values; ``None`` overrides are ignored.
    """
    cp = configparser.ConfigParser()
    path = Path(path)
    if not cp.read(path):
        raise FileNotFoundError(path)
    values = {}
    for section, keys in _SECTIONS.items():
        if section not in cp:
            continue
        unknown = set(cp[section]) - set(keys)
        if unknown:
            raise ValueError(f"[{section}] has unknown keys {sorted(unknown)}")
        for key in keys:
            if key in cp[section]:
                values[key] = _convert(key, cp[section][key])
    if values.get("phantom_file"):
        # relative phantom paths are relative to the config file
        p = Path(values["phantom_file"])
        values["phantom_file"] = str(p if p.is_absolute() else path.parent / p)
    values.update({k: v for k, v in overrides.items() if v is not None})
    values = {k: v for k, v in values.items() if v is not None}
    return ExperimentConfig(**values)


def reference_tensor(gamma) -> np.ndarray:
    """Domain average of ``gamma`` as a constant 2x2 matrix."""
    a11, a12, a22 = (c.mean() for c in gamma.components)
    return np.array([[a11, a12], [a12, a22]])


def build_phantom(cfg: ExperimentConfig, grid: Grid2D):
    if cfg.phantom == "sim1":
        X, Y = grid.mesh()
        return simulation1(grid, cfg.omega), simulation1_coefficients(X, Y)
    spec = default_sim2_spec() if cfg.phantom == "sim2" else load_phantom(cfg.phantom_file)
    return spec.gamma(grid, cfg.omega), spec.coefficients(grid)


@dataclass
class ReconRun:
    """One reconstruction pass (clean or noisy)."""

    raw: dict
    coefficients: dict
    lambdas: object
    mask: object
    info: object
    msys: object
    reg: RegConfig


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    grid: Grid2D
    truth: dict
    H_clean: list
    H_noisy: list | None
    clean: ReconRun
    noisy: ReconRun | None
    report: dict
    timings: dict = field(default_factory=dict)


class _Stages:
    def __init__(self):
        self.timings = {}

    @contextlib.contextmanager
    def __call__(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


def _reconstruct(H, cfg: ExperimentConfig, noisy: bool, stage) -> ReconRun:
    tag = "noisy" if noisy else "clean"
    params = cfg.params
    with stage(f"derivatives[{tag}]"):
        method = cfg.derivative_for(noisy)
        derivs = [field_derivatives(h, method, cfg.window, cfg.order) for h in H]
    with stage(f"compute_lambdas[{tag}]"):
        lambdas, mask = compute_lambdas(H, c0_rel=cfg.c0_rel, derivatives=derivs)
    with stage(f"build_M_system[{tag}]"):
        msys = build_M_system(H, lambdas, params, derivatives=derivs)
    with stage(f"solve_gamma_pointwise[{tag}]"):
        gamma_inv, info = solve_gamma_pointwise(msys, mask, cfg.sigma_min_tol)
    with stage(f"finalize[{tag}]"):
        sigma, eps, bad = finalize(gamma_inv, cfg.omega)
        info = dataclasses.replace(info, flagged=info.flagged | bad)
        raw = {}
        for name, t in (("sigma", sigma), ("eps", eps)):
            for k, c in enumerate(t.components, start=1):
                raw[f"{name}{k}"] = c.real
    reg = cfg.reg_config(noisy)
    with stage(f"regularization[{tag}]"):
        coeffs = {k: np.real(regularize(ComplexScalarField(H[0].grid, v), reg).values)
                  if reg.method != "none" else v for k, v in raw.items()}
    return ReconRun(raw, coeffs, lambdas, mask, info, msys, reg)


def _run_summary(run: ReconRun) -> dict:
    smin = run.info.sigma_min
    return {
        "derivative": None,
        "regularization": {"method": run.reg.method, "rho": run.reg.rho},
        "mask_fraction": run.mask.fraction,
        "c0": run.mask.c0,
        "flagged_nodes": int(run.info.flagged.sum()),
        "sigma_min": {"min": float(smin.min()), "median": float(np.median(smin)),
                      "max": float(smin.max())},
    }


def _finish(cfg, grid, truth, H_clean, H_noisy, stage, extra) -> ExperimentResult:
    clean = _reconstruct(H_clean, cfg, False, stage)
    noisy = _reconstruct(H_noisy, cfg, True, stage) if H_noisy is not None else None
    with stage("metrics"):
        rows = error_table(truth, clean.coefficients,
                           noisy.coefficients if noisy else None, clean.mask)
        report = {
            "config": cfg.to_dict(),
            "grid": {"N": grid.N, "n": grid.n, "h": grid.h},
            **extra,
            "errors": rows,
            "clean": _run_summary(clean),
        }
        report["clean"]["derivative"] = cfg.derivative_for(False)
        if noisy:
            report["noisy"] = _run_summary(noisy)
            report["noisy"]["derivative"] = cfg.derivative_for(True)
        if cfg.phantom != "sim1":
            edges = discontinuity_mask(truth, width=3)
            report["edge_error_fraction"] = {
                k: _edge_fraction(clean.coefficients[k], truth[k], edges) for k in truth
            }
    return ExperimentResult(cfg, grid, truth, H_clean, H_noisy, clean, noisy, report,
                            stage.timings)


def _edge_fraction(recon, truth, edges) -> float:
    err = np.abs(recon - truth) ** 2
    total = err.sum()
    return float(err[edges].sum() / total) if total > 0 else 0.0


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """
    Run the full pipeline.  Any failure is re-raised as :class:`StageError`
    naming the stage.  The report is a plain dict that depends only on the
    configuration (timings are kept separately).
    """
    stage = _Stages()
    with stage("phantom"):
        grid = make_grid(cfg.grid_n)
        params = cfg.params
        gamma, truth = build_phantom(cfg, grid)
        ell = validate_ellipticity(gamma, 5.0, cfg.omega)
        if not ell:
            log.warning("phantom violates ellipticity with kappa=5: %s", ell)
    with stage("choose_illuminations"):
        g_ref = reference_tensor(gamma)
        basis, traces, table = choose_illuminations(g_ref, params, grid, angles=cfg.angles)
    with stage("forward"):
        sols = solve_maxwell_many(gamma, params, traces)
        H_clean = [s.H for s in sols]
    H_noisy = None
    if cfg.alpha > 0:
        with stage("noise"):
            H_noisy = [add_noise(h, cfg.alpha, (cfg.seed, k)) for k, h in enumerate(H_clean)]
    angles = [float(np.arctan2(u[1].real, u[0].real)) for u in basis.u[2:]]
    extra = {
        "illumination": {
            "angles": angles,
            "default_angles": cfg.angles is None and np.allclose(angles, DEFAULT_ANGLES),
            "probe_sigma_min": float(table.min()),
        },
        "forward_residuals": [s.residual for s in sols],
    }
    return _finish(cfg, grid, truth, H_clean, H_noisy, stage, extra)


def rerun_from_fields(cfg: ExperimentConfig, fields_dir) -> ExperimentResult:
    """
    Repeat the reconstruction from magnetic fields dumped by a previous run
    with ``dump_intermediate``.  The illumination section of the report is
    not recomputed and is omitted.
    """
    stage = _Stages()
    fields_dir = Path(fields_dir)
    with stage("load_fields"):
        def load(tag):
            out = []
            for k in range(1, 6):
                values, grid, _ = read_field_csv(fields_dir / f"H{k}_{tag}.csv")
                out.append(ComplexScalarField(grid, values))
            return out
        H_clean = load("clean")
        H_noisy = load("noisy") if cfg.alpha > 0 else None
        grid = H_clean[0].grid
        if grid.N != cfg.grid_n:
            raise ValueError(f"dumped fields use N={grid.N}, config says {cfg.grid_n}")
        _, truth = build_phantom(cfg, grid)
    return _finish(cfg, grid, truth, H_clean, H_noisy, stage, {})


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write ``report.json``, ``timings.json`` and ``fields/*.csv`` (plus optional PGMs)."""
    cfg = result.config
    out = Path(out_dir)
    fields = out / "fields"
    fields.mkdir(parents=True, exist_ok=True)
    grid = result.grid
    with open(out / "report.json", "w") as fh:
        json.dump(result.report, fh, indent=2)
    with open(out / "timings.json", "w") as fh:
        json.dump(result.timings, fh, indent=2)

    runs = [("clean", result.clean)] + ([("noisy", result.noisy)] if result.noisy else [])
    for name in COEFFICIENTS:
        write_field_csv(fields / f"true_{name}.csv", result.truth[name], grid, f"true_{name}")
        for tag, run in runs:
            write_field_csv(fields / f"{tag}_{name}.csv", run.coefficients[name], grid,
                            f"{tag}_{name}")
    for tag, run in runs:
        write_field_csv(fields / f"{tag}_sigma_min.csv", run.info.sigma_min, grid,
                        f"{tag}_sigma_min")
        write_field_csv(fields / f"{tag}_mask.csv", run.mask.mask.astype(float), grid,
                        f"{tag}_mask")
        write_field_csv(fields / f"{tag}_flagged.csv", run.info.flagged.astype(float), grid,
                        f"{tag}_flagged")

    if cfg.dump_intermediate:
        sets = [("clean", result.H_clean)] + ([("noisy", result.H_noisy)] if result.H_noisy else [])
        for tag, H in sets:
            for k, h in enumerate(H, start=1):
                write_field_csv(fields / f"H{k}_{tag}.csv", h.values, grid, f"H{k}_{tag}")
        for tag, run in runs:
            for j, (l1, l2) in enumerate(run.lambdas.pairs, start=1):
                write_field_csv(fields / f"lambda{j}_1_{tag}.csv", l1.values, grid,
                                f"lambda{j}_1_{tag}")
                write_field_csv(fields / f"lambda{j}_2_{tag}.csv", l2.values, grid,
                                f"lambda{j}_2_{tag}")
                write_field_csv(fields / f"r{j}_{tag}.csv", run.msys.r[j - 1], grid,
                                f"r{j}_{tag}")
            for name, v in run.raw.items():
                write_field_csv(fields / f"{tag}_raw_{name}.csv", v, grid, f"{tag}_raw_{name}")

    if cfg.pgm:
        for name in COEFFICIENTS:
            t = result.truth[name]
            lo, hi = float(t.min()), float(t.max())
            if hi - lo < 1e-12:
                lo, hi = lo - 1, hi + 1
            write_pgm(out / f"true_{name}.pgm", t, lo, hi)
            for tag, run in runs:
                write_pgm(out / f"{tag}_{name}.pgm", run.coefficients[name], lo, hi)
    return out
