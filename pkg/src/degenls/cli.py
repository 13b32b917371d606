"""Command-line driver for the verification pipeline.

Subcommands: solve, pohozaev, spectrum, symmetrize, scan_beta, verify.
Options come from a flat ``key = value`` config file (# comments allowed)
overridden by command-line flags.  All file output is deterministic: the
same config produces byte-identical files.

Exit codes: 0 all checks pass, 1 check failure (reports still written),
2 invalid parameters, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import pohozaev, spectrum, symmetrize
from .params import ParameterError, ProblemParams, validate
from .radial_ode import (
    IntegratorConfig,
    StepSizeUnderflow,
    export_profile_csv,
    integrate,
    make_grid,
)
from .reports import fmt, write_csv, write_key_value
from .shooting import (
    BracketInvalid,
    NoConvergence,
    classify,
    comparison_quantity,
    find_ground_state,
    fit_tail_free_exponent,
    wronskian_identity_residual,
)
from .variational import functionals, origin_coefficient_check

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_PARAMS = 2
EXIT_NO_CONVERGENCE = 3


@dataclass
class RunConfig:
    dimension: int = 2
    weight_a: float = 0.5
    power_p: float = 3.0
    omega: float = 1.0
    oracle_mode: bool = False
    r_start: float = 1e-6
    r_max: float = 30.0
    grid_n: int = 4096
    shoot_tol: float = 1e-12
    quad_tol: float = 1e-6
    eig_tol: float = 0.0  # 0 -> solver default (twice the underflow threshold)
    n_eigs: int = 6
    k_max: int = 2
    beta_lo: float = 0.0  # 0 -> scaled default
    beta_hi: float = 0.0
    scan_count: int = 17
    smallness: float = 1e-4
    sym_n: int = 128
    sym_extent: float = 4.0
    sym_count: int = 20
    sym_seed: int = 20240601
    output: str = "out"

    def __post_init__(self):
        if self.shoot_tol <= 0 or self.quad_tol <= 0 or self.eig_tol < 0:
            raise ValueError("tolerances must be positive")
        if self.grid_n < 64:
            raise ValueError("grid_n must be at least 64")

    def params(self) -> ProblemParams:
        return validate(
            ProblemParams(
                d=self.dimension,
                a=self.weight_a,
                omega=self.omega,
                p=self.power_p,
                oracle_mode=self.oracle_mode,
            )
        )

    def grid(self):
        return make_grid(self.r_start, self.r_max, self.grid_n)

    def bracket(self) -> tuple[float, float]:
        scale = self.omega ** (1.0 / (self.power_p - 2.0))
        lo = self.beta_lo if self.beta_lo > 0 else 1.05 * scale
        hi = self.beta_hi if self.beta_hi > 0 else 20.0 * scale
        return lo, hi


_BOOL_KEYS = {"oracle_mode"}
_INT_KEYS = {"dimension", "grid_n", "n_eigs", "k_max", "scan_count", "sym_n", "sym_count", "sym_seed"}


def parse_config_file(path: str) -> dict:
    out: dict = {}
    names = {f.name for f in fields(RunConfig)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in names:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _BOOL_KEYS:
                out[key] = val.lower() in ("1", "true", "yes", "on")
            elif key in _INT_KEYS:
                out[key] = int(val)
            elif key == "output":
                out[key] = val
            else:
                out[key] = float(val)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    overrides = {
        "dimension": args.dimension,
        "weight_a": args.weight_a,
        "power_p": args.power_p,
        "omega": args.omega,
        "r_start": args.r_start,
        "r_max": args.r_max,
        "grid_n": args.grid_n,
        "shoot_tol": args.tol,
        "n_eigs": args.n_eigs,
        "k_max": args.k_max,
        "output": args.output,
    }
    for k, v in overrides.items():
        if v is not None:
            values[k] = v
    if args.oracle_mode:
        values["oracle_mode"] = True
    return RunConfig(**values)


def _solve(cfg: RunConfig):
    params = cfg.params()
    grid = cfg.grid()
    ctl = IntegratorConfig()
    return params, grid, find_ground_state(
        params,
        cfg.bracket(),
        cfg.shoot_tol,
        grid,
        ctl,
        smallness_ratio=cfg.smallness,
    )


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    params, _, res = _solve(cfg)
    export_profile_csv(res.profile, out / "profile.csv")
    fit = res.tail_fit
    write_key_value(
        out / "shooting_report.txt",
        [
            ("beta_star", res.beta_star),
            ("iterations", res.iterations),
            ("bracket_low", res.bracket[0]),
            ("bracket_high", res.bracket[1]),
            ("tail_kappa", fit.stretched_exponent),
            ("tail_sigma", fit.algebraic_power),
            ("tail_amplitude", fit.amplitude),
            ("nehari_residual", res.nehari_residual),
        ],
    )
    return EXIT_OK


def cmd_pohozaev(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    params, _, res = _solve(cfg)
    diag = pohozaev.diagnostics(params, res.profile)
    pohozaev.export_csv(params, res.profile, out / "pohozaev.csv")
    scale = max(abs(diag.J_max), 1e-300)
    pairs = [
        ("sigma", diag.sigma),
        ("r0_closed_form", diag.r0 if diag.r0 is not None else float("nan")),
        ("J_max", diag.J_max),
        ("J_min", diag.J_min),
        ("J_limit_origin", diag.J_limits[0]),
        ("J_limit_far", diag.J_limits[1]),
        ("dJdr_residual", diag.dJdr_residual),
        ("J_nonneg", diag.J_min >= -1e-8 * scale),
        ("J_limits_zero", max(abs(diag.J_limits[0]), abs(diag.J_limits[1])) <= 1e-8 * scale),
    ]
    write_key_value(out / "pohozaev_report.txt", pairs)
    ok = diag.J_min >= -1e-8 * scale and max(map(abs, diag.J_limits)) <= 1e-8 * scale
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_spectrum(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    params, _, res = _solve(cfg)
    ok = True
    for k in range(cfg.k_max + 1):
        op = spectrum.assemble(res.profile, params, k)
        rep = spectrum.eigen_lowest(op, n=cfg.n_eigs, tol=cfg.eig_tol or None)
        pairs = [
            ("k", rep.k),
            ("boundary_condition", rep.boundary_condition),
            ("negative_count", rep.negative_count),
            ("negative_count_certificate", rep.negative_count_certificate),
            ("zero_gap", rep.zero_gap),
        ]
        for i, lam in enumerate(rep.eigenvalues):
            pairs.append((f"eigenvalue_{i}", float(lam)))
        pairs.append(("sign_changes", ",".join(str(s) for s in rep.sign_changes)))
        if k == 0:
            qf = spectrum.ground_state_quadratic_form(op, res.profile, params)
            pairs.append(("ground_state_quadratic_form", qf))
            ok = ok and rep.negative_count == 1 == rep.negative_count_certificate and qf < 0
        write_key_value(out / f"spectrum_k{k}.txt", pairs)
        r_op = rep.grid.nodes[rep.node_index]
        cols = [r_op] + [rep.eigenvectors[:, j] for j in range(rep.eigenvalues.size)]
        header = "r," + ",".join(f"v{j+1}" for j in range(rep.eigenvalues.size))
        write_csv(out / f"eigenvectors_k{k}.csv", header, cols)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_scan_beta(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.params()
    grid = cfg.grid()
    lo, hi = cfg.bracket()
    betas = np.geomspace(lo, hi, cfg.scan_count)
    rows_beta, rows_cls, rows_radius = [], [], []
    for b in betas:
        prof, ev = integrate(params, float(b), grid, sample=False)
        rows_beta.append(float(b))
        rows_cls.append(classify(ev, prof, cfg.smallness))
        rows_radius.append(ev.radius)
    write_csv(out / "scan.csv", "beta,classification,event_radius", [rows_beta, rows_cls, rows_radius])
    transitions = sum(1 for i in range(len(rows_cls) - 1) if rows_cls[i] != rows_cls[i + 1])
    return EXIT_OK if transitions == 1 else EXIT_CHECK_FAILED


def cmd_symmetrize(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    a = cfg.weight_a
    checks: list[tuple[str, bool, float]] = []

    l2_exact = True
    lp_exact = True
    dirichlet_dev = 0.0
    ps_excess = -math.inf
    for i in range(cfg.sym_count):
        rng = np.random.default_rng(cfg.sym_seed + i)
        f = symmetrize.random_smooth_field(cfg.sym_n, cfg.sym_extent, rng)
        wd = symmetrize.weighted_dirichlet(f, a)
        for H in symmetrize.ADMISSIBLE[:4]:
            fH = symmetrize.polarize(f, H)
            l2_exact &= symmetrize.lp_cellsum(fH, 2.0) == symmetrize.lp_cellsum(f, 2.0)
            lp_exact &= symmetrize.lp_cellsum(fH, cfg.power_p) == symmetrize.lp_cellsum(f, cfg.power_p)
            dirichlet_dev = max(
                dirichlet_dev, abs(symmetrize.weighted_dirichlet(fH, a) - wd) / wd
            )
        fr = symmetrize.rearrange(f)
        lp_exact &= symmetrize.lp_cellsum(fr, cfg.power_p) == symmetrize.lp_cellsum(f, cfg.power_p)
        ps_excess = max(ps_excess, (symmetrize.weighted_dirichlet(fr, a) - wd) / wd)

    h = 2.0 * cfg.sym_extent / cfg.sym_n
    tol_h = 2.0 * h
    checks.append(("lemma_2_1_l2_preserved_exactly", l2_exact, 0.0))
    checks.append(("lemma_2_1_lp_preserved_exactly", lp_exact, 0.0))
    checks.append(("lemma_2_1_dirichlet_preserved", dirichlet_dev <= tol_h, dirichlet_dev))
    checks.append(("lemma_2_2_rearrangement_noninc", ps_excess <= tol_h, ps_excess))

    write_key_value(
        out / "symmetrize_report.txt",
        [("fields", cfg.sym_count), ("grid_n", cfg.sym_n), ("tol_h", tol_h)]
        + [(name, "pass" if ok else "fail") for name, ok, _ in checks]
        + [(name + "_value", val) for name, _, val in checks],
    )
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_CHECK_FAILED


def cmd_verify(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    params, grid, res = _solve(cfg)
    prof = res.profile
    checks: list[tuple[str, bool | None, float]] = []  # (anchor, pass/None=skip, value)

    # existence / monotonicity
    from .radial_ode import residual as ode_residual

    checks.append(("theorem_2_3_positive", bool(np.all(prof.u > 0)), float(np.min(prof.u))))
    checks.append(("theorem_2_3_strictly_decreasing", bool(np.all(prof.du < 0)), float(np.max(prof.du))))
    r_ode = ode_residual(prof, params)
    checks.append(("equ110_flux_residual", r_ode <= 1e-6, r_ode))

    # variational package
    rep = functionals(prof, params)
    checks.append(("theorem_2_3_nehari", abs(rep.nehari_residual) <= cfg.quad_tol, rep.nehari_residual))
    checks.append(("gs1_energy_relation", rep.energy_relation_residual <= cfg.quad_tol, rep.energy_relation_residual))
    checks.append(("is_prop1_dilation_identity", rep.dilation_residual <= cfg.quad_tol, rep.dilation_residual))
    oc = origin_coefficient_check(prof, params)
    checks.append(("theorem_1_origin_coefficient", oc <= 0.01, oc))

    # tail
    s_free, kappa_free, sigma_free, _ = fit_tail_free_exponent(prof, params)
    s_err = abs(s_free - (1.0 - params.a)) / (1.0 - params.a)
    checks.append(("theorem_1_tail_stretch_power", s_err <= 0.02, s_err))
    kappa = res.tail_fit.stretched_exponent
    kappa_target = math.sqrt(params.omega) / (1.0 - params.a)
    kappa_err = abs(kappa - kappa_target) / kappa_target
    if params.a < 0.5:
        checks.append(("lemma_4_1_tail_kappa", kappa_err <= 0.05, kappa_err))
    else:
        checks.append(("lemma_4_1_tail_kappa", None, kappa_err))

    # pohozaev package
    diag = pohozaev.diagnostics(params, prof)
    scale = max(abs(diag.J_max), 1e-300)
    checks.append(("lemma_3_4_J_nonneg", diag.J_min >= -1e-8 * scale, diag.J_min / scale))
    jl = max(abs(diag.J_limits[0]), abs(diag.J_limits[1])) / scale
    checks.append(("lemma_3_4_J_limits", jl <= 1e-8, jl))
    h_log = math.log(cfg.r_max / cfg.r_start) / (cfg.grid_n - 1)
    fd_tol = 50.0 * h_log * h_log
    checks.append(("defg_dJ_identity", diag.dJdr_residual <= fd_tol, diag.dJdr_residual))
    if diag.r0 is not None:
        from scipy.optimize import brentq

        r0_num = brentq(lambda rr: pohozaev.G_of_r(params, rr), diag.r0 / 10, diag.r0 * 10)
        r0_err = abs(r0_num - diag.r0) / diag.r0
        checks.append(("lemma_3_4_r0_closed_form", r0_err <= 1e-6, r0_err))
    else:
        checks.append(("lemma_3_4_r0_closed_form", None, float("nan")))

    # uniqueness apparatus on bracketing trajectories
    pu, _ = integrate(params, res.beta_star * 0.98, grid)
    pv, _ = integrate(params, res.beta_star * 1.02, grid)
    wr = wronskian_identity_residual(pu, pv, params)
    checks.append(("lemma_3_2_wronskian", wr <= fd_tol, wr))
    cq = comparison_quantity(pu, pv, params)
    xmax = float(np.max(np.abs(cq["X"])))
    checks.append(("defx2_comparison_identity", cq["residual"] <= fd_tol * max(xmax, 1.0), cq["residual"]))
    x0 = abs(float(cq["X"][0])) / max(xmax, 1e-300)
    checks.append(("lemma_3_3_X_origin_limit", x0 <= 1e-6, x0))

    # spectral package (k = 0)
    op0 = spectrum.assemble(prof, params, 0)
    rep0 = spectrum.eigen_lowest(op0, n=cfg.n_eigs, tol=cfg.eig_tol or None)
    checks.append(
        (
            "lemma_4_2_negative_count",
            rep0.negative_count == 1 == rep0.negative_count_certificate,
            float(rep0.negative_count),
        )
    )
    second_changes = rep0.sign_changes[1] if len(rep0.sign_changes) > 1 else -1
    checks.append(("lemma_4_2_second_eigenvector_sign_changes", second_changes == 1, float(second_changes)))
    checks.append(("theorem_4_3_zero_gap", rep0.zero_gap > 1e-2, rep0.zero_gap))
    qf = spectrum.ground_state_quadratic_form(op0, prof, params)
    checks.append(("morse_index_form_negative", qf < 0.0, qf))

    pairs: list[tuple[str, object]] = [
        ("beta_star", res.beta_star),
        ("iterations", res.iterations),
        ("K", rep.K),
        ("M", rep.M),
        ("P", rep.P),
        ("energy", rep.energy),
        ("weinstein", rep.weinstein),
        ("tail_kappa", kappa),
        ("tail_sigma", res.tail_fit.algebraic_power),
    ]
    for name, ok, val in checks:
        pairs.append((name, "skip" if ok is None else ("pass" if ok else "fail")))
        pairs.append((name + "_value", val))
    write_key_value(out / "verify_report.txt", pairs)
    failed = [name for name, ok, _ in checks if ok is False]
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="degenls",
        description="Ground states of -div(|x|^2a grad u) + omega u = u^(p-1): "
        "shooting solver and verification pipeline.",
    )
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--dimension", type=int)
    ap.add_argument("--weight-a", dest="weight_a", type=float)
    ap.add_argument("--power-p", dest="power_p", type=float)
    ap.add_argument("--omega", type=float)
    ap.add_argument("--r-start", dest="r_start", type=float)
    ap.add_argument("--r-max", dest="r_max", type=float)
    ap.add_argument("--grid-n", dest="grid_n", type=int)
    ap.add_argument("--tol", type=float, help="relative bisection tolerance on beta")
    ap.add_argument("--n-eigs", dest="n_eigs", type=int)
    ap.add_argument("--k-max", dest="k_max", type=int)
    ap.add_argument("--output", help="output directory")
    ap.add_argument("--oracle-mode", dest="oracle_mode", action="store_true")
    ap.add_argument(
        "command",
        choices=["solve", "pohozaev", "spectrum", "symmetrize", "scan_beta", "verify"],
    )
    return ap


_COMMANDS = {
    "solve": cmd_solve,
    "pohozaev": cmd_pohozaev,
    "spectrum": cmd_spectrum,
    "symmetrize": cmd_symmetrize,
    "scan_beta": cmd_scan_beta,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        cfg.params()
    except (ParameterError, ValueError) as exc:
        print(f"error: {EXIT_INVALID_PARAMS}: {exc}", file=sys.stderr)
        return EXIT_INVALID_PARAMS
    try:
        return _COMMANDS[args.command](cfg)
    except (NoConvergence, BracketInvalid, StepSizeUnderflow) as exc:
        print(f"error: {EXIT_NO_CONVERGENCE}: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ParameterError as exc:
        print(f"error: {EXIT_INVALID_PARAMS}: {exc}", file=sys.stderr)
        return EXIT_INVALID_PARAMS


if __name__ == "__main__":
    raise SystemExit(main())
