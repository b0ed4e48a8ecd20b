"""Command-line entry points: run, verify, diag.

Exit codes: 0 clean, 2 on configuration/numeric failure, 3 when a run
finishes but a monitor (overshoot or Hölder persistence) flagged it; the
run's outputs are fully written before a code-3 exit.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import inequalities as iq
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .diagnostics import append_csv, csv_columns, csv_row, record
from .errors import NumericError, SqgError
from .geometry import build_square_geometry
from .operators import PHI_SQUARE, ConvexFn, riesz_velocity, softplus_hinge
from .solver import SolverState, run
from .spectral import inverse, mode_field


def _phi(cfg: RunConfig) -> ConvexFn:
    if cfg.phi == "square":
        return PHI_SQUARE
    if cfg.phi == "hinge":
        return softplus_hinge(cfg.hinge_threshold)
    return ConvexFn(lambda z: z ** 3, lambda z: 3.0 * z ** 2, "cubic")


def _holder_monitor(records, cfg: RunConfig) -> tuple[bool, float]:
    """Fit K on the first 10% of the run, then check every later record."""
    alpha = cfg.alphas[0]
    p = max(cfg.ps)
    h0 = records[0].holder[alpha]
    B = max(r.b1_lp[p] for r in records)
    M = max(r.lipschitz for r in records)
    unit = B * (M + 1.0)
    k_fit = 0.0
    for r in records:
        if r.t <= 0.1 * cfg.t_end and unit > 0:
            k_fit = max(k_fit, (r.holder[alpha] - 2.0 * h0) / unit)
    bound = 2.0 * h0 + k_fit * unit
    violated = any(r.holder[alpha] > bound * (1.0 + 1e-9) + 1e-12
                   for r in records)
    return violated, k_fit


def cmd_run(cfg: RunConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    g = cfg.geometry()
    theta0 = cfg.initial_field(g)
    result = run(theta0, cfg.solver_config())
    csv_path = os.path.join(cfg.output_dir, "diagnostics.csv")
    if os.path.exists(csv_path):
        os.remove(csv_path)
    records = []
    for state in result.snapshots:
        # record from the bare state so diag on a checkpoint reproduces it
        rec = record(SolverState(state.t, state.theta, step=state.step),
                     ps=cfg.ps, ms=cfg.ms, alphas=cfg.alphas)
        records.append(rec)
        append_csv(csv_path, rec)
        ck = os.path.join(cfg.output_dir, f"checkpoint_{state.step:06d}.sqgb")
        save_checkpoint(ck, state.theta, state.t, state.step,
                        cfg.config_hash())
    final = result.snapshots[-1]
    save_checkpoint(os.path.join(cfg.output_dir, "final.sqgb"),
                    final.theta, final.t, final.step, cfg.config_hash())
    holder_flag, k_fit = _holder_monitor(records, cfg)
    summary = os.path.join(cfg.output_dir, "run_summary.txt")
    with open(summary, "w") as fh:
        fh.write(f"t_end: {final.t!r}\n"
                 f"steps: {final.step}\n"
                 f"ledger_residual: {result.ledger_residual!r}\n"
                 f"max_overshoot: {result.max_overshoot!r}\n"
                 f"overshoot_flag: {result.overshoot_flag}\n"
                 f"holder_flag: {holder_flag}\n"
                 f"holder_k_fit: {k_fit!r}\n"
                 f"rejected_steps: {result.rejected_steps}\n"
                 f"seed: {cfg.seed}\n")
    if result.overshoot_flag or holder_flag:
        print("monitor violation; outputs written", file=sys.stderr)
        return 3
    return 0


def _verify_dispatch(cfg: RunConfig, names) -> list:
    g = cfg.geometry()
    theta0 = cfg.initial_field(g)
    phi = _phi(cfg)
    run_cache = {}

    def decay_run():
        if "run" not in run_cache:
            sc = cfg.solver_config()
            sc.drift_mode = "none"
            run_cache["run"] = run(theta0, sc)
        return run_cache["run"]

    reports = []
    for name in names:
        if name == "cordoba":
            rep = iq.verify_cordoba(g, iq.seeded_family(g, 10, 12, cfg.seed),
                                    phi)
        elif name == "weighted_identity":
            from .diagnostics import boundary_ratio
            ratios = [boundary_ratio(f)
                      for f in iq.seeded_family(g, 3, 12, cfg.seed)]
            rep = iq.verify_weighted_identity(ratios, mode_field(g, 1, 1),
                                              [phi])
        elif name == "lambda_one_lower":
            rep = iq.verify_lambda_one_lower(g)
        elif name == "decay_envelope":
            B = float(np.abs(inverse(theta0).values
                             / g.ground_state).max()) + 1e-9
            rep = iq.verify_decay_envelope(decay_run(), cfg.solver_config(), B)
        elif name == "weighted_lp_control":
            rep = iq.verify_weighted_lp_control(decay_run(), m=cfg.ms[0])
        elif name == "weight_norm_bridge":
            rep = iq.verify_weight_norm_bridge(theta0, m=2, p=max(cfg.ps))
        elif name == "velocity_log_bound":
            rep = iq.verify_velocity_log_bound(iq.constant_field(g))
        elif name == "velocity_conditional_bound":
            rep = iq.verify_velocity_conditional_bound(
                iq.conditional_family(g), p=max(cfg.ps))
        elif name == "short_time_smallness":
            c_r = 0.1 * riesz_velocity(theta0).sup_norm()
            rep = iq.verify_short_time_smallness(theta0, c_r)
        elif name == "finite_difference_velocity":
            L = g.side_length
            rep = iq.verify_finite_difference_velocity(
                theta0, (L / 2, L / 2), L / 8, p=max(cfg.ps))
        elif name == "normal_velocity_rate":
            rep = iq.verify_normal_velocity_rate(theta0, p=max(cfg.ps),
                                                 alpha=cfg.alphas[0])
        elif name == "commutator_scaling":
            fine = build_square_geometry(max(cfg.grid_size, 2048),
                                         g.side_length)
            rep = iq.verify_commutator_scaling(mode_field(fine, 1, 1),
                                               p=np.inf)
        elif name == "kernel_bounds":
            rep = iq.verify_kernel_bounds(g, n_samples=cfg.sample_count,
                                          seed=cfg.seed, horizon=cfg.t_end)
        else:
            raise SqgError(f"unknown verification {name!r}")
        reports.append(rep)
    return reports


def cmd_verify(cfg: RunConfig, names) -> int:
    names = list(names) or list(cfg.verify_names)
    reports = _verify_dispatch(cfg, names)
    os.makedirs(cfg.output_dir, exist_ok=True)
    all_pass = True
    for rep in reports:
        iq.write_report(rep, cfg.output_dir)
        status = "pass" if rep.passed else "FAIL"
        print(f"{rep.name}: {status} (min_margin={rep.min_margin:.3e})")
        all_pass &= rep.passed
    return 0 if all_pass else 1


def cmd_diag(path, csv_out=None, dump=None) -> int:
    ck = load_checkpoint(path)
    rec = record(SolverState(ck.t, ck.theta, step=ck.step))
    header = ",".join(csv_columns(rec))
    row = ",".join(repr(float(v)) for v in csv_row(rec))
    print(header)
    print(row)
    if csv_out:
        append_csv(csv_out, rec)
    if dump:
        g = ck.theta.geometry
        X, Y = g.meshgrid()
        vals = inverse(ck.theta).values
        with open(dump, "w") as fh:
            fh.write("x[1],y[1],theta[1]\n")
            for i in range(g.n_interior):
                for j in range(g.n_interior):
                    fh.write(f"{X[i, j]!r},{Y[i, j]!r},{vals[i, j]!r}\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sqgbounds",
        description="critical SQG on the square: runs, bound checks, diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="integrate and write diagnostics")
    p_run.add_argument("config")
    p_ver = sub.add_parser("verify", help="check the named bound families")
    p_ver.add_argument("config")
    p_ver.add_argument("names", nargs="*")
    p_diag = sub.add_parser("diag", help="diagnostics for one checkpoint")
    p_diag.add_argument("checkpoint")
    p_diag.add_argument("--csv", default=None)
    p_diag.add_argument("--dump", default=None)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(load_config(args.config))
        if args.command == "verify":
            return cmd_verify(load_config(args.config), args.names)
        return cmd_diag(args.checkpoint, args.csv, args.dump)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except SqgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
