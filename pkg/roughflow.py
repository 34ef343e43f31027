#!/usr/bin/env python3
"""
Runner de experimentos do roughflow.

Lê uma especificação YAML (ou um preset embutido), valida o esquema,
executa a lista de operações sobre o campo/gauge declarados e grava
report.json, tabelas CSV e arquivos .plot.dat no diretório de saída.

Códigos de saída: 0 = tudo passou, 2 = alguma checagem matemática
falhou, 1 = erro operacional (resultados parciais são preservados).

Uso:
    python roughflow.py run spec.yaml --out resultados --workers 4
    python roughflow.py preset verify-loglinear
    python roughflow.py list-presets
    python roughflow.py validate spec.yaml
"""

import argparse
import hashlib
import json
import os
import traceback
from dataclasses import dataclass, field as dc_field, fields as dc_fields
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from dotenv import load_dotenv

from errors import DivergentIntegral, DomainExit, InvalidParam, RoughFlowError, SchemaError
from field import Box, Lattice
from flow import (TOLERANCE_RATIO_BAND, SolverConfig, closed_form_errors, flow_map, gronwall_check,
                  integrate_trajectory, interval_length_bound, semigroup_residual, tolerance_convergence,
                  uniqueness_funnel, variational_solve)
from gallery import (E, GALLERY_NAMES, SUBLOG_EDGE, example_from_spec, example_parameters, log_ode_residual,
                     make_example, nonuniqueness_pair, ode_residual)
from orlicz import (exponential_gauge, gauge_from_spec, lambda_p, make_omega, osgood_coefficient,
                    osgood_modulus_integral, summability_integral, validate_gauge)
from pde import (HALVING_BAND, DensityInit, bump_library, continuity_density_pushforward, continuity_mode_gap,
                 continuity_series, initial_from_spec, particles_from_density, residual_converges,
                 solve_continuity, solve_transport, weak_residual)
from presets import PRESETS
from regularity import (cantor_image_measure, density_l1_gap, distortion_profile, hadamard_check, holder_study,
                        orlicz_density_check, pushforward_density, sharp_exponent_table, sobolev_bound_check,
                        sobolev_study)

# ===== CONFIG =====
DEFAULT_OUT = "roughflow_out"
REPORT_NAME = "report.json"
DEFAULT_BOXES = {
    "loglinear": ([0.05], [E - 0.05]),
    "sublog": ([1e-4], [SUBLOG_EDGE - 1e-4]),
    "cantor": ([0.0], [1.0]),
    "rotation": ([-1.0, -1.0], [1.0, 1.0]),
}
TOP_LEVEL_KEYS = {"name", "description", "field", "gauge", "solver", "seed", "operations"}
SOLVER_KEYS = {f.name for f in dc_fields(SolverConfig)} - {"workers"}
# ==================


def get_run_config():
    """Defaults de execução vindos do .env (ROUGHFLOW_*)."""
    load_dotenv(dotenv_path=Path(__file__).with_name(".env"))
    raw = {
        "out": os.getenv("ROUGHFLOW_OUT", DEFAULT_OUT),
        "workers": os.getenv("ROUGHFLOW_WORKERS", "1"),
        "tol_scale": os.getenv("ROUGHFLOW_TOL_SCALE", "1.0"),
        "seed": os.getenv("ROUGHFLOW_SEED", "0"),
    }
    config, bad = {"out": raw["out"]}, []
    for key, cast in (("workers", int), ("tol_scale", float), ("seed", int)):
        try:
            config[key] = cast(raw[key])
        except ValueError:
            bad.append(f"ROUGHFLOW_{key.upper()}={raw[key]!r}")
    if bad:
        raise RuntimeError(f"Variáveis inválidas no .env: {', '.join(bad)}")
    if config["workers"] < 1 or not config["tol_scale"] > 0:
        raise RuntimeError("Variáveis inválidas no .env: ROUGHFLOW_WORKERS ≥ 1 e ROUGHFLOW_TOL_SCALE > 0")
    return config


# ===== Resultados =====

@dataclass
class Check:
    name: str
    value: object
    tolerance: object
    passed: bool
    details: str = ""

    def to_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance,
                "passed": bool(self.passed), "details": self.details}


@dataclass
class OpResult:
    checks: list = dc_field(default_factory=list)
    values: dict = dc_field(default_factory=dict)
    tables: dict = dc_field(default_factory=dict)    # nome -> DataFrame
    plots: dict = dc_field(default_factory=dict)     # nome -> (x, y)

    def check(self, name, value, tolerance, passed, details=""):
        self.checks.append(Check(name, value, tolerance, bool(passed), details))


@dataclass
class OpRecord:
    index: int
    op: str
    params: dict
    result: OpResult = None
    error: str = None


@dataclass
class RunResult:
    name: str
    spec: dict
    spec_hash: str
    seed: int
    records: list

    @property
    def checks(self):
        return [c for r in self.records if r.result for c in r.result.checks]

    @property
    def exit_code(self):
        if any(r.error for r in self.records):
            return 1
        return 2 if any(not c.passed for c in self.checks) else 0


@dataclass
class RunContext:
    example: object
    gauge: object
    cfg: SolverConfig
    seed: int
    index: int = 0

    @property
    def fld(self):
        return self.example.base

    def rng(self):
        return np.random.default_rng([self.seed, self.index])

    def box(self, value):
        if value is None:
            if self.example.name in DEFAULT_BOXES:
                return Box(*DEFAULT_BOXES[self.example.name])
            return Box((-1.0,) * self.fld.dim, (1.0,) * self.fld.dim)
        return as_box(value)

    def require_gauge(self):
        return self.gauge if self.gauge is not None else exponential_gauge(1.0)


def as_box(value):
    """[lo, hi] em 1D ou [[lo...], [hi...]]."""
    if isinstance(value, Box):
        return value
    if isinstance(value, dict):
        return Box(value["lower"], value["upper"])
    lo, hi = value
    return Box(lo, hi)


# ===== Operações =====

def _uniform(rng, box, count):
    return rng.uniform(box.lower, box.upper, size=(count, box.dim))


def _times(rng, t_range, count, ordered=False):
    t = rng.uniform(t_range[0], t_range[1], size=(count, 2))
    return np.sort(t, axis=1) if ordered else t


def op_flow_accuracy(ctx, t_range, s_range, box, nodes, tol, convergence):
    ex = ctx.example
    if ex.closed_flow is None:
        raise InvalidParam(f"Exemplo '{ex.name}' sem fluxo fechado")
    b = ctx.box(box)
    nt, ns, nx = (int(v) for v in nodes)
    tv = np.linspace(*t_range, nt)
    sv = np.linspace(*s_range, ns)
    pts = Lattice.uniform(b, nx).points()
    out = OpResult()
    if convergence:
        study = tolerance_convergence(ctx.fld, ex.closed_flow, tv, sv, pts, ctx.cfg)
        err = study.errors
        out.values["tolerance_study"] = {"max_error": study.max_error, "max_error_halved": study.max_error_halved,
                                         "expected_ratio": study.expected_ratio}
        out.check("tolerance_halving_ratio", study.ratio, list(TOLERANCE_RATIO_BAND), study.consistent,
                  f"razão esperada ≈ {study.expected_ratio:.3f} (ordem {ctx.cfg.method_order})")
    else:
        err = closed_form_errors(ctx.fld, ex.closed_flow, tv, sv, pts, ctx.cfg)
    max_err = float(np.nanmax(err))
    coverage = float(np.mean(np.isfinite(err)))
    out.check("max_abs_error", max_err, tol, max_err <= tol)
    out.check("coverage", coverage, 1.0, coverage == 1.0)
    tt, ss, ii = np.meshgrid(tv, sv, np.arange(pts.shape[0]), indexing="ij")
    df = pd.DataFrame({"t": tt.ravel(), "s": ss.ravel()})
    for i in range(pts.shape[1]):
        df[f"x{i}"] = pts[ii.ravel(), i]
    df["error"] = err.ravel()
    out.tables["errors"] = df
    return out


def op_ell_bound(ctx, time_window, box, samples, slack):
    fld = ctx.fld.restricted(time_interval=tuple(time_window), domain=ctx.box(box))
    rep = interval_length_bound(fld, samples, ctx.rng(), slack=slack, cfg=ctx.cfg)
    out = OpResult(values={"sup_b": rep.sup_b, "worst_ratio": rep.worst_ratio})
    out.check("ell_lower_bound", rep.violations, 0, rep.violations == 0,
              f"{rep.violations}/{int(samples)} amostras abaixo de (1 − {slack:g})·min(ℓ, dist/sup|b|)")
    out.tables["ell"] = rep.to_frame()
    return out


def op_semigroup(ctx, samples, t_range, box, tol):
    rng = ctx.rng()
    b = ctx.box(box)
    xs = _uniform(rng, b, samples)
    ts = rng.uniform(t_range[0], t_range[1], size=(samples, 3))
    res, skipped = [], 0
    for x, (t1, t2, t3) in zip(xs, ts):
        try:
            res.append(semigroup_residual(ctx.fld, t1, t2, t3, x, ctx.cfg))
        except DomainExit:
            skipped += 1
    out = OpResult(values={"skipped": skipped})
    worst = float(max(res)) if res else float("nan")
    out.check("max_semigroup_residual", worst, tol, bool(res) and worst <= tol)
    return out


def _variational_samples(ctx, samples, t_range, box, ordered):
    rng = ctx.rng()
    b = ctx.box(box)
    xs = _uniform(rng, b, samples)
    ts = _times(rng, t_range, samples, ordered)
    for x, (s, t) in zip(xs, ts):
        traj = integrate_trajectory(ctx.fld, s, x, t, ctx.cfg)
        if not traj.reached:
            continue
        yield s, t, x, traj, variational_solve(ctx.fld, traj, [t], ctx.cfg)


def op_liouville(ctx, samples, t_range, box, tol):
    rows = []
    for s, t, x, traj, var in _variational_samples(ctx, samples, t_range, box, False):
        det, liou = float(var.jac_det[-1]), float(var.jac_liouville[-1])
        rows.append({"s": s, "t": t, "det": det, "liouville": liou,
                     "rel_diff": abs(det - liou) / abs(liou)})
    df = pd.DataFrame(rows)
    out = OpResult(tables={"samples": df})
    worst = float(df["rel_diff"].max()) if rows else float("nan")
    out.check("max_liouville_rel_diff", worst, tol, bool(rows) and worst <= tol)
    j_min = float(df["det"].min()) if rows else float("nan")
    out.check("min_jacobian_positive", j_min, 0.0, bool(rows) and j_min > 0)
    return out


def op_gronwall(ctx, samples, t_range, box, tol, equality_tol):
    rows = []
    for s, t, x, traj, var in _variational_samples(ctx, samples, t_range, box, True):
        rep = gronwall_check(ctx.fld, traj, var, tol)
        rows.append({"s": s, "t": t, "lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds,
                     "rel_gap": (rep.rhs - rep.lhs) / rep.rhs})
    df = pd.DataFrame(rows)
    out = OpResult(tables={"samples": df})
    ok = bool(rows) and bool(df["holds"].all())
    worst = float(df["rel_gap"].min()) if rows else float("nan")
    out.check("gronwall_bound", worst, tol, ok, "menor folga relativa (rhs − lhs)/rhs")
    if ctx.example.name == "linear" and ctx.fld.params.get("lam", 1.0) >= 0:
        gap = float(df["rel_gap"].abs().max()) if rows else float("nan")
        out.check("gronwall_equality_linear", gap, equality_tol, bool(rows) and gap <= equality_tol)
    return out


def op_funnel(ctx, x0, radii, horizon, s, directions, alpha, box, coefficient_times, tol):
    g = ctx.require_gauge()
    omega = make_omega(g, alpha)
    b = ctx.box(box)
    times = np.linspace(s, s + horizon, int(coefficient_times))
    phi = osgood_coefficient(ctx.fld, omega, b, times)
    phi_integral = float(np.max(phi)) * abs(horizon)
    reports = uniqueness_funnel(ctx.fld, s, x0, radii, horizon, omega, phi_integral, ctx.cfg,
                                directions=directions, seed=ctx.seed, tol=tol)
    out = OpResult(values={"phi_integral": phi_integral, "gauge": g.describe()})
    rows = []
    for r in reports:
        rows.append({"delta": r.delta, "max_spread": r.max_spread, "envelope": r.envelope, "holds": r.holds})
        out.check(f"funnel_delta_{r.delta:g}", r.max_spread, r.envelope, r.holds, "espalhamento ≤ envelope")
    out.tables["funnel"] = pd.DataFrame(rows)
    return out


def op_nonuniqueness(ctx, alpha, times, tol):
    ex = make_example("sublog", alpha=alpha)
    g1, g2 = nonuniqueness_pair(alpha)
    tv = np.asarray(times, dtype=float)
    r2 = log_ode_residual(g2, ex, tv)
    r1 = ode_residual(g1, ex.base, tv)
    out = OpResult(tables={"residuals": pd.DataFrame({"t": tv, "gamma1": r1, "gamma2_log": r2})})
    out.check("gamma1_residual", float(np.max(r1)), tol, np.max(r1) <= tol)
    out.check("gamma2_log_residual", float(np.max(r2)), tol, np.max(r2) <= tol)
    last = float(g2.log_value(tv[-1]))
    out.check("gamma2_nonzero", last, 0.0, np.isfinite(last), "log γ2(t_final) finito ⇒ γ2 ≠ γ1")
    return out


DEFAULT_GAUGE_CASES = (
    [{"gauge": {"family": "subexp", "k": k, "beta": b}, "expect": "diverging"}
     for k in (1, 2) for b in (0.0, 0.5, 1.0)]
    + [{"gauge": {"family": "subexp", "k": k, "beta": 1.5}, "expect": "converging"} for k in (1, 2)]
    + [{"gauge": {"family": "power", "p": 2.0}, "expect": "converging"}]
)


def op_gauges(ctx, cases, alpha, dim):
    out = OpResult()
    rows = []
    for case in cases or DEFAULT_GAUGE_CASES:
        g = gauge_from_spec(case["gauge"])
        verdict = validate_gauge(g, alpha=alpha, dim=dim)
        v = verdict.osgood_integral["verdict"]
        rows.append({"gauge": json.dumps(case["gauge"], sort_keys=True), "verdict": v,
                     "method": verdict.osgood_integral["method"], "convex": verdict.convexity_power_ok,
                     "submultiplicative": verdict.submultiplicative_ok, "expect": case.get("expect")})
        if case.get("expect"):
            out.check(f"osgood {g.family_tag} {json.dumps(g.params, sort_keys=True)}", v, case["expect"],
                      v == case["expect"], verdict.details)
    out.tables["gauges"] = pd.DataFrame(rows)
    return out


def op_modulus(ctx, alpha, deltas, expect):
    g = ctx.require_gauge()
    res = osgood_modulus_integral(g, alpha, deltas)
    out = OpResult(values={"partial_sums": res["partial_sums"], "gauge": g.describe()})
    out.check("modulus_osgood", res["verdict"], expect, res["verdict"] == expect)
    out.plots["partial_sums"] = ([np.log(1.0 / d) for d, _ in res["partial_sums"]],
                                 [v for _, v in res["partial_sums"]])
    return out


def op_summability(ctx, c, box, tspan, weight, gamma, expect):
    g = ctx.require_gauge()
    out = OpResult()
    try:
        val, ladder = summability_integral(ctx.fld, g, c, ctx.box(box), tspan, weight, gamma, ctx.cfg,
                                           with_ladder=True)
        got = "finite"
        out.values.update({"value": val, "ladder": ladder})
    except DivergentIntegral as exc:
        got = "divergent"
        out.values.update({"value": float("inf"), "ladder": exc.ladder})
    out.check("summability", got, expect, got == expect)
    return out


def op_lambda_p(ctx, p, tspan, box, mode, expect):
    out = OpResult()
    try:
        val, ladder = lambda_p(ctx.fld, p, ctx.box(box), tspan, mode=mode, cfg=ctx.cfg, with_ladder=True)
        got = "finite" if np.isfinite(val) else "divergent"
        out.values.update({"lambda_p": val, "ladder": ladder})
    except DivergentIntegral as exc:
        got = "divergent"
        out.values.update({"lambda_p": float("inf"), "ladder": exc.ladder, "reason": str(exc)})
    out.check(f"lambda_p(p={p:g}, ℓ={tspan[1] - tspan[0]:g})", got, expect, got == expect)
    return out


def _expect_list(expect, count):
    if expect is None or isinstance(expect, str):
        return [expect] * count
    if len(expect) != count:
        raise InvalidParam("expect deve ter um veredito por expoente")
    return list(expect)


def _study_result(out, study, expect, label):
    out.tables[f"{label}_{study.p:g}"] = study.to_frame()
    out.plots[f"{label}_{study.p:g}"] = (np.log([r["finest"] for r in study.levels]).tolist(),
                                        [r["log_value"] for r in study.levels])
    out.values[f"{label}_{study.p:g}"] = {"verdict": study.verdict, "slope": study.fitted_slope,
                                          "details": study.details}
    if expect is not None:
        out.check(f"{label}(p={study.p:g})", study.verdict, expect, study.verdict == expect, study.details)


def op_sobolev_study(ctx, t, s, p, box, levels, expect):
    ps = [p] if np.isscalar(p) else list(p)
    out = OpResult()
    for q, e in zip(ps, _expect_list(expect, len(ps))):
        study = sobolev_study(ctx.fld, t, s, ctx.box(box), q, levels, ctx.cfg)
        _study_result(out, study, e, "sobolev")
    return out


def op_holder_study(ctx, t, s, gamma, box, levels, expect):
    gs = [gamma] if np.isscalar(gamma) else list(gamma)
    out = OpResult()
    for g, e in zip(gs, _expect_list(expect, len(gs))):
        study = holder_study(ctx.fld, t, s, ctx.box(box), g, levels, ctx.cfg)
        _study_result(out, study, e, "holder")
    return out


def op_sobolev_bound(ctx, t, p, tspan, box, mode, expect):
    rep = sobolev_bound_check(ctx.fld, t, ctx.box(box), p, tspan, ctx.cfg, mode=mode)
    out = OpResult(values={k: v for k, v in rep.items() if k != "ladder"})
    if expect == "skipped":
        out.check("sobolev_bound_skipped", rep["skipped"], True, rep["skipped"], rep.get("reason", ""))
    else:
        holds = bool(rep.get("holds"))
        out.check("sobolev_bound", rep["lhs"], rep["rhs"], holds, f"folga {rep.get('slack')}")
    return out


def op_sharp_exponents(ctx, pairs, box, levels):
    table = sharp_exponent_table(ctx.example, [tuple(pq) for pq in pairs], ctx.box(box), levels, ctx.cfg)
    out = OpResult(tables={"sharp": table})
    for row in table.itertuples():
        out.check(f"sharp(t={row.t:g}, s={row.s:g}, q={row.q:.4g})", row.verdict, row.expected, row.ok,
                  f"q* = {row.q_star:.6g}")
    return out


def op_cantor_measure(ctx, level, ts, amplitude, tol, via_flow, pushed_level):
    out = OpResult()
    rows = []
    for t in ts:
        r = cantor_image_measure(level, t, amplitude, via_flow, ctx.cfg, pushed_level)
        rows.append(r)
        out.check(f"cantor_measure(t={t:g})", r["rel_error"], tol, r["rel_error"] <= tol,
                  f"estimativa {r['measure_estimate']:.6g}, alvo {r['target']:.6g}")
    df = pd.DataFrame(rows)
    out.tables["cantor"] = df
    out.plots["cantor"] = (df["t"].tolist(), df["measure_estimate"].tolist())
    return out


def op_pushforward(ctx, t, s, box, cells, factor, alpha, samples, mass_tol):
    src = ctx.box(box)
    jac = pushforward_density(ctx.fld, t, s, src, "jacobian_inverse", cells, cfg=ctx.cfg)
    target = Box(tuple(e[0] for e in jac.edges), tuple(e[-1] for e in jac.edges))
    hist = pushforward_density(ctx.fld, t, s, src, "histogram", cells, samples=samples,
                               target_box=target, cfg=ctx.cfg)
    use = ~hist.undersampled & (hist.mass > 0)
    ratio = np.where(use & (jac.density > 0), hist.density / np.where(jac.density > 0, jac.density, 1.0), 0.0)
    worst = float(np.max(ratio)) if np.any(use) else float("nan")
    out = OpResult()
    out.check("histogram_vs_jacobian", worst, factor, np.isfinite(worst) and worst <= factor,
              f"{int(np.sum(hist.undersampled))} células subamostradas excluídas")
    rel_mass = abs(jac.total_mass - jac.source_mass) / jac.source_mass
    out.check("jacobian_mass", rel_mass, mass_tol, rel_mass <= mass_tol)
    orl = orlicz_density_check(hist, alpha)
    out.check(f"orlicz_density(α={alpha:g})", orl["growth"], orl["tolerance"], orl["finite"])
    out.values.update({"orlicz": orl, "zero_jacobian_cells": len(jac.zero_jacobian)})
    df = jac.to_frame().rename(columns={"density": "density_jacobian", "mass": "mass_jacobian"})
    df["density_histogram"] = hist.density.ravel()
    df["undersampled"] = hist.undersampled.ravel()
    out.tables["density"] = df
    if ctx.fld.dim == 1:
        out.plots["density"] = (jac.centers()[0].tolist(), jac.density.tolist())
    return out


def _initial_bounds(u0):
    if u0.kind in ("bump", "gaussian"):
        amp = float(u0.params.get("amplitude", 1.0))
        return min(0.0, amp), max(0.0, amp)
    if u0.kind == "indicator":
        return 0.0, 1.0
    return None


def op_transport(ctx, u0, box, nodes, times, tests, tol, refine):
    init = initial_from_spec(u0)
    b = ctx.box(box)
    tv = np.linspace(0.0, 1.0, int(times))
    library = bump_library(b, tests, (0.0, 1.0))
    sol = solve_transport(ctx.fld, init, tv, Lattice.uniform(b, nodes), ctx.cfg)
    res = weak_residual(ctx.fld, sol, library)
    out = OpResult(values={"residuals": res.tolist()})
    out.check("transport_weak_residual", float(np.max(res)), tol, np.max(res) <= tol)
    rows = {"test": np.arange(len(library)), "residual": res}
    if refine:
        fine = solve_transport(ctx.fld, init, tv, Lattice.uniform(b, 2 * np.asarray(nodes)), ctx.cfg)
        res_f = weak_residual(ctx.fld, fine, library)
        rows["residual_refined"] = res_f
        out.check("transport_refinement", float(np.max(res_f / np.maximum(res, 1e-300))), list(HALVING_BAND),
                  residual_converges(res, res_f), "razão resíduo fino / grosso, ou resíduo no piso")
    bounds = _initial_bounds(init)
    lo, hi = sol.value_range()
    if bounds is not None:
        out.check("maximum_principle", [lo, hi], list(bounds), bounds[0] <= lo and hi <= bounds[1])
    out.tables["residuals"] = pd.DataFrame(rows)
    if ctx.fld.dim == 1:
        out.plots["solution_final"] = (sol.nodes[:, 0].tolist(), sol.values[-1].tolist())
    return out


def op_continuity(ctx, rho0, box, t, cells, particles_per_axis, mass_tol, mode_tol, repr_tol,
                  weak, weak_tol, weak_nodes):
    src = ctx.box(box)
    init_data = initial_from_spec(rho0 or {"kind": "indicator", "lower": list(src.lower),
                                           "upper": list(src.upper)})
    init = DensityInit(init_data, src)
    per_axis = particles_per_axis or (400 * cells if ctx.fld.dim == 1 else 8 * cells)
    parts0 = particles_from_density(init_data, src, per_axis)
    parts = solve_continuity(ctx.fld, parts0, t, ctx.cfg, "particle")
    out = OpResult()
    out.check("particle_mass", parts.total_mass, 0.0, parts.total_mass == parts0.total_mass,
              "soma dos pesos idêntica")
    dens = solve_continuity(ctx.fld, init, t, ctx.cfg, "density", cells)
    rel = abs(dens.total_mass - dens.source_mass) / abs(dens.source_mass)
    out.check("density_mass", rel, mass_tol, rel <= mass_tol)
    gap = continuity_mode_gap(ctx.fld, init, t, ctx.cfg, cells, per_axis)
    out.check("particle_vs_density_L1", gap, mode_tol, gap <= mode_tol)
    if ctx.fld.dim == 1:
        target = Box(tuple(e[0] for e in dens.edges), tuple(e[-1] for e in dens.edges))
        alt = continuity_density_pushforward(ctx.fld, init, t, ctx.cfg, cells, target)
        rgap = density_l1_gap(alt, dens)
        out.check("representations_L1", rgap, repr_tol, rgap <= repr_tol)
        out.plots["density"] = (dens.centers()[0].tolist(), dens.density.tolist())
    if weak:
        tv = np.linspace(0.0, 1.0, 41)
        seed = particles_from_density(init_data, src, weak_nodes)
        series = continuity_series(ctx.fld, seed, tv, ctx.cfg, "particle")
        lo = np.nanmin(series.positions, axis=(0, 1))
        hi = np.nanmax(series.positions, axis=(0, 1))
        res = weak_residual(ctx.fld, series, bump_library(Box(lo, hi), 5, (0.0, 1.0)))
        out.check("continuity_weak_residual", float(np.max(res)), weak_tol, np.max(res) <= weak_tol)
    out.tables["density"] = dens.to_frame()
    return out


def op_distortion(ctx, t, s, box, nodes, q, p):
    b = ctx.box(box)
    fwd = flow_map(ctx.fld, t, s, Lattice.uniform(b, nodes), ctx.cfg, variational=True)
    img = fwd.images[fwd.valid]
    back_box = Box(img.min(axis=0), img.max(axis=0))
    bwd = flow_map(ctx.fld, s, t, Lattice.uniform(back_box, nodes), ctx.cfg, variational=True)
    prof = distortion_profile(fwd, bwd, q, p)
    had = hadamard_check(fwd)
    out = OpResult(values={"r": prof["r"], "forward_norm": prof["forward_norm"],
                           "backward_norm": prof["backward_norm"], "hadamard": had})
    out.check("hadamard", had["max_ratio"], 1.0 + had["tolerance"], had["holds"])
    finite = bool(np.all(np.isfinite(prof["forward"][fwd.valid])))
    out.check("distortion_finite", float(np.nanmax(prof["forward"])), "finite", finite)
    df = fwd.to_frame()
    df["K_q"] = prof["forward"]
    out.tables["distortion"] = df
    return out


# nome -> (função, defaults). "field" e "gauge" são aceitos por todas.
OPERATIONS = {
    "flow_accuracy": (op_flow_accuracy, {"t_range": [0.0, 1.0], "s_range": [0.0, 1.0], "box": None,
                                         "nodes": [20, 20, 20], "tol": 1e-6, "convergence": True}),
    "ell_bound": (op_ell_bound, {"time_window": [0.0, 1.0], "box": None, "samples": 500, "slack": 0.1}),
    "semigroup": (op_semigroup, {"samples": 50, "t_range": [0.0, 1.0], "box": None, "tol": 1e-6}),
    "liouville": (op_liouville, {"samples": 100, "t_range": [0.0, 1.0], "box": None, "tol": 1e-5}),
    "gronwall": (op_gronwall, {"samples": 250, "t_range": [0.0, 1.0], "box": None, "tol": 1e-3,
                               "equality_tol": 1e-6}),
    "funnel": (op_funnel, {"x0": [1.0], "radii": [1e-4, 1e-6, 1e-8], "horizon": 1.0, "s": 0.0,
                           "directions": 64, "alpha": 2.0, "box": None, "coefficient_times": 5,
                           "tol": 1e-6}),
    "nonuniqueness": (op_nonuniqueness, {"alpha": 1.5, "times": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
                                         "tol": 1e-5}),
    "gauges": (op_gauges, {"cases": None, "alpha": None, "dim": 1}),
    "modulus": (op_modulus, {"alpha": 2.0, "deltas": [1e-4, 1e-8, 1e-16, 1e-32], "expect": "diverging"}),
    "summability": (op_summability, {"c": 1.0, "box": None, "tspan": [0.0, 1.0], "weight": "uniform",
                                     "gamma": 0.0, "expect": "finite"}),
    "lambda_p": (op_lambda_p, {"p": 3.0, "tspan": [-0.025, 0.025], "box": None, "mode": "geometric",
                               "expect": "finite"}),
    "sobolev_study": (op_sobolev_study, {"t": 1.0, "s": 0.0, "p": 1.0, "box": None, "levels": 4, "expect": None}),
    "holder_study": (op_holder_study, {"t": 1.0, "s": 0.0, "gamma": 0.5, "box": None, "levels": 4,
                                       "expect": None}),
    "sobolev_bound": (op_sobolev_bound, {"t": 0.0, "p": 3.0, "tspan": [-0.025, 0.025], "box": None,
                                         "mode": "geometric", "expect": "holds"}),
    "sharp_exponents": (op_sharp_exponents, {"pairs": [[1.0, 0.0]], "box": None, "levels": 4}),
    "cantor_measure": (op_cantor_measure, {"level": 10, "ts": [0.5, 1.0, 2.0], "amplitude": 0.5, "tol": 0.05,
                                           "via_flow": True, "pushed_level": None}),
    "pushforward": (op_pushforward, {"t": 0.5, "s": 0.0, "box": None, "cells": 50, "factor": 10.0,
                                     "alpha": 0.5, "samples": None, "mass_tol": 1e-3}),
    "transport": (op_transport, {"u0": {"kind": "gaussian", "center": [0.0], "width": 0.3}, "box": None,
                                 "nodes": 200, "times": 81, "tests": 5, "tol": 1e-4, "refine": True}),
    "continuity": (op_continuity, {"rho0": None, "box": None, "t": 0.5, "cells": 50,
                                   "particles_per_axis": None, "mass_tol": 1e-4, "mode_tol": 0.05,
                                   "repr_tol": 0.01, "weak": False, "weak_tol": 1e-3, "weak_nodes": 100}),
    "distortion": (op_distortion, {"t": 0.5, "s": 0.0, "box": None, "nodes": 33, "q": 1.0, "p": None}),
}


# ===== Esquema =====

def _type_ok(value, default):
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float, list)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, (list, int, float))
    if isinstance(default, dict):
        return isinstance(value, dict)
    return True


def _validate_field(spec, path):
    if not isinstance(spec, dict):
        raise SchemaError(path, "deve ser um mapeamento")
    name = spec.get("example")
    if name not in GALLERY_NAMES:
        raise SchemaError(f"{path}/example", f"exemplo desconhecido {name!r} (opções: {', '.join(GALLERY_NAMES)})")
    allowed = example_parameters(name)
    for key in spec:
        if key != "example" and key not in allowed:
            raise SchemaError(f"{path}/{key}", f"parâmetro desconhecido para '{name}'")


def _validate_gauge(spec, path):
    if not isinstance(spec, dict) or "family" not in spec:
        raise SchemaError(path, "gauge deve ser um mapeamento com 'family'")
    if spec["family"] not in ("subexp", "exponential", "power"):
        raise SchemaError(f"{path}/family", f"família desconhecida {spec['family']!r}")


def validate_spec(spec):
    """Valida o esquema e devolve a especificação normalizada (defaults preenchidos)."""
    if not isinstance(spec, dict):
        raise SchemaError("/", "a especificação deve ser um mapeamento")
    for key in spec:
        if key not in TOP_LEVEL_KEYS:
            raise SchemaError(f"/{key}", "chave desconhecida")
    if not isinstance(spec.get("name"), str):
        raise SchemaError("/name", "obrigatório (texto)")
    if "field" not in spec:
        raise SchemaError("/field", "obrigatório")
    _validate_field(spec["field"], "/field")
    if spec.get("gauge") is not None:
        _validate_gauge(spec["gauge"], "/gauge")
    solver = spec.get("solver") or {}
    if not isinstance(solver, dict):
        raise SchemaError("/solver", "deve ser um mapeamento")
    for key, value in solver.items():
        if key not in SOLVER_KEYS:
            raise SchemaError(f"/solver/{key}", "chave desconhecida")
        if key == "singular_slowdown":
            if not isinstance(value, bool):
                raise SchemaError(f"/solver/{key}", "deve ser booleano")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"/solver/{key}", "deve ser numérico")
    seed = spec.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("/seed", "deve ser inteiro")
    ops = spec.get("operations") or []
    if not isinstance(ops, list):
        raise SchemaError("/operations", "deve ser uma lista")
    normalized = []
    for i, entry in enumerate(ops):
        path = f"/operations/{i}"
        if not isinstance(entry, dict) or "op" not in entry:
            raise SchemaError(path, "cada operação precisa de 'op'")
        for key in entry:
            if key not in ("op", "params"):
                raise SchemaError(f"{path}/{key}", "chave desconhecida")
        name = entry["op"]
        if name not in OPERATIONS:
            raise SchemaError(f"{path}/op", f"operação desconhecida {name!r}")
        params = entry.get("params") or {}
        if not isinstance(params, dict):
            raise SchemaError(f"{path}/params", "deve ser um mapeamento")
        defaults = OPERATIONS[name][1]
        merged = dict(defaults)
        for key, value in params.items():
            ppath = f"{path}/params/{key}"
            if key == "field":
                _validate_field(value, ppath)
            elif key == "gauge":
                _validate_gauge(value, ppath)
            elif key not in defaults:
                raise SchemaError(ppath, "parâmetro desconhecido")
            elif not _type_ok(value, defaults[key]):
                raise SchemaError(ppath, f"tipo inválido (esperado como {defaults[key]!r})")
            merged[key] = value
        normalized.append({"op": name, "params": merged})
    return {"name": spec["name"], "description": spec.get("description", ""), "field": dict(spec["field"]),
            "gauge": spec.get("gauge"), "solver": dict(solver), "seed": seed, "operations": normalized}


def spec_hash(spec, seed):
    """SHA-256 do JSON canônico da especificação validada mais a seed."""
    payload = json.dumps({"spec": spec, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return yaml.safe_load(fh)


# ===== Execução =====

def run_experiment(spec, workers=1, tol_scale=1.0, seed=None, verbose=True):
    """Valida e executa a especificação; erros de operação ficam registrados no resultado."""
    spec = validate_spec(spec)
    seed = spec["seed"] if seed is None else int(seed)
    spec["seed"] = seed
    cfg = SolverConfig(**spec["solver"]).scaled(tol_scale).with_workers(workers)
    example = example_from_spec(spec["field"])
    gauge = gauge_from_spec(spec["gauge"]) if spec["gauge"] else None
    result = RunResult(spec["name"], spec, spec_hash(spec, seed), seed, [])

    if verbose:
        print(f"🚀 Experimento '{spec['name']}' com {len(spec['operations'])} operações")
        print(f"   campo: {example.name}, seed: {seed}, workers: {workers}")
    for i, entry in enumerate(spec["operations"]):
        params = dict(entry["params"])
        record = OpRecord(i, entry["op"], entry["params"])
        result.records.append(record)
        ex = example_from_spec(params.pop("field")) if "field" in params else example
        g = gauge_from_spec(params.pop("gauge")) if "gauge" in params else gauge
        ctx = RunContext(ex, g, cfg, seed, i)
        if verbose:
            print(f"\n📊 [{i}] {entry['op']} ({ex.name})")
        try:
            record.result = OPERATIONS[entry["op"]][0](ctx, **params)
        except (RoughFlowError, ValueError, ArithmeticError) as exc:
            record.error = f"{type(exc).__name__}: {exc}"
            if verbose:
                print(f"❌ Erro em {entry['op']}: {record.error}")
                traceback.print_exc()
            continue
        if verbose:
            for c in record.result.checks:
                mark = "✅" if c.passed else "❌"
                print(f"   {mark} {c.name}: {_fmt(c.value)} (tolerância {_fmt(c.tolerance)})")
    return result


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _jsonable(obj):
    """Converte numpy e não finitos ('inf', '-inf', 'nan') para JSON determinístico."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def emit_report(result, out_dir):
    """Grava report.json, <idx>_<op>_<tabela>.csv e <idx>_<op>_<plot>.plot.dat."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    ops = []
    for rec in result.records:
        entry = {"index": rec.index, "op": rec.op, "params": rec.params, "error": rec.error,
                 "checks": [], "values": {}, "tables": [], "plots": []}
        if rec.result is not None:
            entry["checks"] = [c.to_dict() for c in rec.result.checks]
            entry["values"] = rec.result.values
            for name, df in sorted(rec.result.tables.items()):
                fname = f"{rec.index:02d}_{rec.op}_{name}.csv"
                df.to_csv(out_dir / fname, index=False)
                entry["tables"].append(fname)
                files.append(out_dir / fname)
            for name, (x, y) in sorted(rec.result.plots.items()):
                fname = f"{rec.index:02d}_{rec.op}_{name}.plot.dat"
                np.savetxt(out_dir / fname, np.column_stack([np.asarray(x, float), np.asarray(y, float)]),
                           fmt="%.17g")
                entry["plots"].append(fname)
                files.append(out_dir / fname)
        ops.append(entry)
    checks = result.checks
    report = {
        "name": result.name,
        "spec": result.spec,
        "spec_hash": result.spec_hash,
        "seed": result.seed,
        "exit_code": result.exit_code,
        "summary": {"checks": len(checks), "passed": sum(c.passed for c in checks),
                    "failed": sum(not c.passed for c in checks),
                    "errors": sum(1 for r in result.records if r.error)},
        "operations": ops,
    }
    path = out_dir / REPORT_NAME
    path.write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2, ensure_ascii=False))
    files.append(path)
    return files


def print_summary(result, out_dir):
    checks = result.checks
    print("\n" + "=" * 60)
    print(f"📊 RESUMO: {result.name}")
    print("=" * 60)
    print(f"   - Checagens: {len(checks)}")
    print(f"   - Passaram: {sum(c.passed for c in checks)}")
    print(f"   - Falharam: {sum(not c.passed for c in checks)}")
    print(f"   - Erros operacionais: {sum(1 for r in result.records if r.error)}")
    print(f"💾 Relatório salvo em: {Path(out_dir) / REPORT_NAME}")


# ===== CLI =====

def build_parser(defaults):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=defaults["workers"], help="workers do pool de fluxo")
    common.add_argument("--out", default=defaults["out"], help="diretório de saída")
    common.add_argument("--tol-scale", type=float, default=defaults["tol_scale"],
                        help="fator aplicado às tolerâncias do integrador")
    common.add_argument("--seed", type=int, default=None, help="seed de amostragem (sobrepõe a da spec)")

    parser = argparse.ArgumentParser(prog="roughflow", description="Fluxos de campos vetoriais não-Lipschitz")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="executa uma especificação YAML")
    p_run.add_argument("spec")
    p_pre = sub.add_parser("preset", parents=[common], help="executa um preset embutido")
    p_pre.add_argument("name")
    sub.add_parser("list-presets", help="lista os presets")
    p_val = sub.add_parser("validate", help="valida uma especificação sem executar")
    p_val.add_argument("spec")
    return parser


def main(argv=None):
    try:
        defaults = get_run_config()
    except RuntimeError as e:
        print(f"❌ {e}")
        return 1
    args = build_parser(defaults).parse_args(argv)

    if args.command == "list-presets":
        print("📋 Presets disponíveis:")
        for name, spec in PRESETS.items():
            print(f"   - {name}: {spec.get('description', '')}")
        return 0

    try:
        if args.command == "validate":
            validate_spec(load_spec(args.spec))
            print(f"✅ Especificação válida: {args.spec}")
            return 0
        if args.command == "preset":
            if args.name not in PRESETS:
                print(f"❌ Preset desconhecido: {args.name} (use list-presets)")
                return 1
            spec = PRESETS[args.name]
        else:
            spec = load_spec(args.spec)
        seed = args.seed
        if seed is None and isinstance(spec, dict) and "seed" not in spec:
            seed = defaults["seed"]
        result = run_experiment(spec, workers=args.workers, tol_scale=args.tol_scale, seed=seed)
        out_dir = Path(args.out) / result.name
        emit_report(result, out_dir)
        print_summary(result, out_dir)
        code = result.exit_code
        if code == 0:
            print("\n🎉 Todas as checagens passaram!")
        elif code == 2:
            print("\n⚠️ Alguma checagem matemática falhou")
        else:
            print("\n💥 Erro operacional em alguma operação (resultados parciais salvos)")
        return code
    except SchemaError as e:
        print(f"❌ Esquema inválido: {e}")
        return 1
    except (OSError, yaml.YAMLError) as e:
        print(f"❌ Não foi possível ler a especificação: {e}")
        return 1
    except Exception as e:
        print(f"💥 ERRO: {e}")
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    exit(main())
