"""
Command-line entry point.

    python -m admittivity run --phantom sim1 --alpha 0.001 --out-dir out/sim1
    python -m admittivity cgo --phantom sim2
    python -m admittivity sweep --phantom sim1 --alpha 0.001 --rhos 1e-4,1e-3,1e-2

``run`` is the default subcommand, so ``python -m admittivity --phantom sim1``
works too.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .cgo import choose_illuminations
from .experiment import (
    ExperimentConfig,
    StageError,
    build_phantom,
    load_config,
    reference_tensor,
    rerun_from_fields,
    run_experiment,
    write_outputs,
)
from .grid import ComplexScalarField, make_grid
from .metrics import relative_l2
from .regularization import RegConfig, regularize

SUBCOMMANDS = ("run", "cgo", "sweep")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--config", help="INI experiment file; flags override its values")
    p.add_argument("--phantom", choices=("sim1", "sim2", "file"))
    p.add_argument("--phantom-file", help="phantom INI used with --phantom file")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--mu0", type=float)
    p.add_argument("--alpha", type=float, help="relative noise level (0 = clean only)")
    p.add_argument("--seed", type=int)
    p.add_argument("--angles", type=lambda s: tuple(float(t) for t in s.split(",")),
                   help="three comma-separated illumination angles in radians")
    p.add_argument("--c0-rel", type=float)
    p.add_argument("--sigma-min-tol", type=float)
    p.add_argument("--derivative", choices=("auto", "fd", "savgol"))
    p.add_argument("--window", type=int, help="Savitzky-Golay window (odd)")
    p.add_argument("--order", type=int, help="Savitzky-Golay polynomial order")
    p.add_argument("--reg", choices=("none", "tikhonov", "tv"))
    p.add_argument("--rho", type=float, help="regularization weight for noisy data")
    p.add_argument("--rho-clean", type=float, help="regularization weight for clean data")
    p.add_argument("--bregman-mu", type=float)
    p.add_argument("--reg-iters", type=int)
    p.add_argument("--reg-tol", type=float)
    p.add_argument("--isotropic", action="store_true", default=None)


def _config(args) -> ExperimentConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in ("phantom", "phantom_file", "grid_n", "omega", "mu0", "alpha", "seed", "angles",
                  "c0_rel", "sigma_min_tol", "derivative", "window", "order", "reg", "rho",
                  "rho_clean", "bregman_mu", "reg_iters", "reg_tol", "isotropic", "out_dir",
                  "dump_intermediate", "pgm")
    }
    if args.config:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="admittivity",
                                     description="Anisotropic admittivity reconstruction from "
                                                 "internal magnetic fields.")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run one experiment and write its report")
    _add_experiment_flags(run)
    run.add_argument("--out-dir")
    run.add_argument("--dump-intermediate", action="store_true", default=None)
    run.add_argument("--pgm", action="store_true", default=None, help="also write PGM heatmaps")
    run.add_argument("--from-fields", help="reconstruct from H*_clean/noisy.csv in this directory")

    cgo = sub.add_parser("cgo", help="print the CGO illumination set and its conditioning")
    _add_experiment_flags(cgo)
    cgo.add_argument("--identity", action="store_true", help="use gamma_ref = I")
    cgo.add_argument("--probe-n", type=int, default=10)

    sweep = sub.add_parser("sweep", help="regularization-weight sweep (L-curve data)")
    _add_experiment_flags(sweep)
    sweep.add_argument("--rhos", required=True,
                       type=lambda s: [float(t) for t in s.split(",")])
    return parser


def _cmd_run(args) -> int:
    cfg = _config(args)
    result = rerun_from_fields(cfg, args.from_fields) if args.from_fields else run_experiment(cfg)
    if cfg.out_dir:
        write_outputs(result, cfg.out_dir)
    print(f"{'coefficient':<12}{'clean':>10}{'noisy':>10}")
    for row in result.report["errors"]:
        noisy = row["noisy_error"]
        print(f"{row['coefficient']:<12}{100 * row['noiseless_error']:>9.2f}%"
              + (f"{100 * noisy:>9.2f}%" if noisy is not None else f"{'-':>10}"))
    if cfg.out_dir:
        print(f"report written to {cfg.out_dir}/report.json")
    return 0


def _cmd_cgo(args) -> int:
    cfg = _config(args)
    grid = make_grid(cfg.grid_n)
    if args.identity:
        g_ref = np.eye(2, dtype=complex)
    else:
        gamma, _ = build_phantom(cfg, grid)
        g_ref = reference_tensor(gamma)
    basis, _, table = choose_illuminations(g_ref, cfg.params, grid, angles=cfg.angles,
                                           probe_N=args.probe_n)
    np.set_printoptions(precision=4, suppress=True, linewidth=120)
    print("gamma_ref =\n", g_ref)
    print("Q =\n", basis.Q)
    for k, u in enumerate(basis.u, start=1):
        print(f"u{k} = {u.real}")
    print(f"relative sigma_min on {table.shape[0]}x{table.shape[1]} probe grid "
          f"(rows y = 1 .. -1):")
    print(table[::-1])
    print(f"min = {table.min():.4g}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    noisy = cfg.alpha > 0
    base = run_experiment(cfg.replace(reg="none"))
    run = base.noisy if noisy else base.clean
    grid = base.grid
    print(f"{'rho':>10} " + " ".join(f"{k:>8}" for k in base.truth) + f" {'misfit':>10} {'|Gf|_1':>10}")
    for rho in args.rhos:
        method = cfg.reg if cfg.reg != "none" else "tikhonov"
        rc = RegConfig(rho=rho, method=method, bregman_mu=cfg.bregman_mu,
                       max_iters=cfg.reg_iters, tol=cfg.reg_tol, isotropic=cfg.isotropic)
        errs, misfit, tv = [], 0.0, 0.0
        for k, t in base.truth.items():
            f = np.real(regularize(ComplexScalarField(grid, run.raw[k]), rc).values)
            errs.append(relative_l2(f, t))
            misfit += float(np.sum((f - run.raw[k]) ** 2) * grid.h**2)
            tv += float((np.abs(np.diff(f, axis=0)).sum() + np.abs(np.diff(f, axis=1)).sum())
                        * grid.h)
        print(f"{rho:>10.3g} " + " ".join(f"{100 * e:>7.2f}%" for e in errs)
              + f" {np.sqrt(misfit):>10.4g} {tv:>10.4g}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or (argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help")):
        argv = ["run"] + argv
    args = build_parser().parse_args(argv)
    if args.command is None:
        build_parser().print_help()
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": _cmd_run, "cgo": _cmd_cgo, "sweep": _cmd_sweep}[args.command](args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
