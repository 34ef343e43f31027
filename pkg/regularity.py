#!/usr/bin/env python3
"""
Regularidade empírica de mapas de fluxo.

Estudos de refinamento W^{1,p} e C^{0,γ} em malhas graduadas, checagem da
cota ∫_I∫‖D_xX‖^p ≤ ℓ^{n/(p−n)}Λ_p, densidades do pushforward (histograma
ou jacobiano inverso), distorção K_q e a medida da imagem do Cantor.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
import pandas as pd

from errors import DivergentIntegral, DomainExit, InconsistentGrids, InvalidParam, TooCoarse, ZeroJacobian
from field import Box, Lattice
from flow import SolverConfig, flow_map
from gallery import make_example
from orlicz import lambda_p
from quadrature import graded_rule, log_sum, panel_axis

# ===== CONFIG =====
SLOPE_EPS = 0.02
BOUNDED_INCREMENT = 1e-3
MIN_COVERAGE = 0.95
DEFAULT_LEVELS = 4
MIN_COUNT = 100
BOUND_TOL = 1e-6
BOUND_EPSILON = 1e-16
SHARP_BELOW = 0.88
SHARP_ABOVE = 1.11
CANTOR_PUSHED_LEVEL = 5


# ===== Gradiente em grade =====

@dataclass(frozen=True)
class GridGradient:
    matrices: np.ndarray   # (m, n, n), D[a, i] = ∂X_a/∂x_i
    valid: np.ndarray      # nós sem vizinho fora de Ω_(t,s)


def grid_gradient(fm):
    """Diferenças centrais no interior e laterais nas bordas da Lattice do mapa."""
    if fm.lattice is None:
        raise InvalidParam("grid_gradient exige mapa calculado sobre uma Lattice")
    shape = fm.lattice.shape
    if any(m < 3 for m in shape):
        raise TooCoarse(f"Grade {shape} com menos de 3 nós por eixo")
    n = fm.dim
    imgs = fm.images.reshape(shape + (n,))
    mats = np.empty(shape + (n, n))
    for i, axis in enumerate(fm.lattice.axes):
        for a in range(n):
            mats[..., a, i] = np.gradient(imgs[..., a], axis, axis=i, edge_order=1)
    mats = mats.reshape(-1, n, n)
    valid = np.all(np.isfinite(mats), axis=(1, 2))
    return GridGradient(mats, valid)


# ===== Estudos de refinamento =====

@dataclass(frozen=True)
class RefinementStudy:
    kind: str
    p: float
    levels: list
    fitted_slope: float
    verdict: str
    details: str = ""

    def to_frame(self):
        return pd.DataFrame(self.levels)

    def to_dict(self):
        return {"kind": self.kind, "p": self.p, "levels": self.levels,
                "fitted_slope": self.fitted_slope, "verdict": self.verdict, "details": self.details}


def refinement_verdict(hs, log_values, coverages, eps=SLOPE_EPS):
    """
    "diverging": últimos três valores crescentes e inclinação log-log
    (log valor × log h) abaixo de −ε; "bounded": último incremento relativo
    abaixo de 1e-3; senão "inconclusive". Cobertura < 95% ⇒ inconclusive.
    """
    lv = np.asarray(log_values, dtype=float)
    lh = np.log(np.asarray(hs, dtype=float))
    if lv.size < 3:
        return float("nan"), "inconclusive", "menos de 3 níveis"
    slope = float(np.polyfit(lh[-3:], lv[-3:], 1)[0])
    if min(coverages) < MIN_COVERAGE:
        return slope, "inconclusive", f"cobertura {min(coverages):.3f} < {MIN_COVERAGE}"
    if np.isposinf(lv[-1]):
        return slope, "diverging", "valor infinito no nível mais fino"
    d = np.diff(lv)
    if d[-2] > 0 and d[-1] > 0 and slope < -eps:
        return slope, "diverging", f"crescimento monotônico, inclinação {slope:.3g}"
    if d[-1] <= BOUNDED_INCREMENT:
        return slope, "bounded", f"incremento relativo final {np.expm1(d[-1]):.2e}"
    return slope, "inconclusive", f"incremento final {np.expm1(d[-1]):.2e}, inclinação {slope:.3g}"


def _log_norms(fm):
    """log‖D_xX‖ por nó; em 1D usa o log do jacobiano de Liouville (não sofre underflow)."""
    if fm.dim == 1:
        return fm.log_jac.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.linalg.norm(np.nan_to_num(fm.dx_matrices), 2, axis=(1, 2)))


def singular_in(fld, box):
    return tuple((a, v) for a, v in fld.singular_coords if box.lower[a] <= v <= box.upper[a])


def sobolev_study(fld, t, s, box, p, levels=DEFAULT_LEVELS, cfg=None, verbose=False):
    """∫_box ‖D_xX(t,s,·)‖^p em malhas graduadas sucessivas, com D_xX da equação variacional."""
    if p < 1:
        raise InvalidParam("p deve ser ≥ 1")
    if levels < 3:
        raise InvalidParam("levels deve ser ≥ 3")
    box = box if isinstance(box, Box) else Box(*box)
    cfg = cfg or SolverConfig()
    rows = []
    for j in range(levels):
        rule = graded_rule(box, singular_in(fld, box), level=j)
        fm = flow_map(fld, t, s, rule.points(), cfg, variational=True)
        ok = fm.valid & np.isfinite(fm.log_jac)
        log_val = log_sum(p * _log_norms(fm)[ok] + rule.log_weights()[ok])
        rows.append({"level": j, "h": rule.h, "finest": rule.finest, "nodes": int(ok.size),
                     "log_value": log_val, "value": float(np.exp(min(log_val, 700.0))),
                     "coverage": float(np.mean(ok))})
        if verbose:
            print(f"   📊 nível {j}: {ok.size} nós, log ∫ = {log_val:.6g}")
    slope, verdict, details = refinement_verdict([r["h"] for r in rows], [r["log_value"] for r in rows],
                                                 [r["coverage"] for r in rows])
    return RefinementStudy("sobolev", float(p), rows, slope, verdict, details)


def holder_study(fld, t, s, box, gamma, levels=DEFAULT_LEVELS, cfg=None):
    """
    Seminorma C^{0,γ} de X(t,s,·) por quocientes entre nós vizinhos; o valor
    de cada nível é o máximo acumulado sobre os níveis já vistos.
    """
    if not 0 < gamma <= 1:
        raise InvalidParam("γ deve estar em (0, 1]")
    box = box if isinstance(box, Box) else Box(*box)
    cfg = cfg or SolverConfig()
    rows, best = [], -np.inf
    for j in range(levels):
        rule = graded_rule(box, singular_in(fld, box), level=j)
        lat = Lattice(tuple(a.nodes for a in rule.axes))
        fm = flow_map(fld, t, s, lat, cfg)
        imgs = fm.images.reshape(lat.shape + (fm.dim,))
        nodes = fm.nodes.reshape(lat.shape + (fm.dim,))
        level_best = -np.inf
        ok_total = 0
        for i in range(fm.dim):
            dx = np.diff(nodes, axis=i)
            dX = np.diff(imgs, axis=i)
            num = np.linalg.norm(dX, axis=-1)
            den = np.linalg.norm(dx, axis=-1)
            good = np.isfinite(num) & (den > 0)
            ok_total += int(np.sum(good))
            with np.errstate(divide="ignore"):
                q = np.log(num[good]) - gamma * np.log(den[good])
            if q.size:
                level_best = max(level_best, float(np.max(q)))
        best = max(best, level_best)
        rows.append({"level": j, "h": rule.h, "finest": rule.finest, "nodes": lat.size,
                     "log_value": best, "value": float(np.exp(min(best, 700.0))),
                     "coverage": float(np.mean(fm.valid))})
    slope, verdict, details = refinement_verdict([r["h"] for r in rows], [r["log_value"] for r in rows],
                                                 [r["coverage"] for r in rows])
    return RefinementStudy("holder", float(gamma), rows, slope, verdict, details)


# ===== Cota ∫_I∫‖D_xX‖^p ≤ ℓ^{n/(p−n)}Λ_p =====

def sobolev_bound_check(fld, t, box, p, tspan, cfg=None, mode="geometric", sup_b=None, tol=BOUND_TOL):
    """
    lhs = ∫_I ∫_{Ω_(t,s)} ‖D_xX(t,s,x)‖^p dx ds; rhs = ℓ^{n/(p−n)}Λ_p
    (ou Λ'_p no modo maximal_interval). Λ_p divergente ⇒ checagem pulada.
    """
    box = box if isinstance(box, Box) else Box(*box)
    cfg = cfg or SolverConfig()
    n = fld.dim
    t0, t1 = float(tspan[0]), float(tspan[1])
    ell = t1 - t0
    window = fld.restricted(time_interval=(t0, t1), domain=box)

    sn, sw = panel_axis(t0, t1, (), 0.0, panels=2, cuts=(t,))
    axes = []
    for i, (lo, hi) in enumerate(zip(box.lower, box.upper)):
        sing = [v for a, v in fld.singular_coords if a == i]
        kinks = [v for a, v in fld.kinks if a == i]
        x, w = panel_axis(lo, hi, sing, BOUND_EPSILON, cuts=kinks)
        axes.append((x, w))
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    log_wx = np.sum(np.log(np.stack([w.ravel() for w in wmesh], axis=0)), axis=0)

    terms, coverage = [], []
    for s_node, s_w in zip(sn, sw):
        fm = flow_map(window, t, float(s_node), pts, cfg, variational=True)
        ok = fm.valid & np.isfinite(fm.log_jac)
        coverage.append(float(np.mean(ok)))
        terms.append(p * _log_norms(fm)[ok] + log_wx[ok] + np.log(s_w))
    with np.errstate(over="ignore"):
        lhs = float(np.exp(log_sum(np.concatenate(terms))))

    report = {"lhs": lhs, "ell": ell, "p": float(p), "mode": mode, "tolerance": tol,
              "min_coverage": min(coverage)}
    try:
        lam = lambda_p(fld, p, box, (t0, t1), mode=mode, cfg=cfg, sup_b=sup_b)
    except DivergentIntegral as exc:
        report.update({"rhs": float("inf"), "lambda_p": None, "holds": None, "skipped": True,
                       "reason": str(exc), "ladder": exc.ladder})
        return report
    rhs = lam * ell ** (n / (p - n)) if mode == "geometric" else lam
    report.update({"rhs": rhs, "lambda_p": lam, "holds": bool(lhs <= rhs * (1.0 + tol)),
                   "slack": rhs - lhs, "skipped": False})
    return report


def hadamard_check(fm, tol=1e-9):
    """|J_X| ≤ ‖D_xX‖ⁿ em cada nó; igualdade só em nós conformes."""
    if fm.dx_matrices is None:
        raise InvalidParam("hadamard_check exige mapa com variacional")
    ok = fm.valid
    mats = fm.dx_matrices[ok]
    norms = np.linalg.norm(mats, 2, axis=(1, 2)) ** fm.dim
    dets = np.abs(np.linalg.det(mats))
    ratio = dets / norms
    return {"max_ratio": float(np.max(ratio)) if ratio.size else float("nan"),
            "holds": bool(np.all(ratio <= 1.0 + tol)),
            "equality_nodes": int(np.sum(np.abs(ratio - 1.0) <= tol)),
            "nodes": int(ratio.size), "tolerance": tol}


def sharp_exponent_table(example, pairs, box, levels=DEFAULT_LEVELS, cfg=None):
    """
    Para cada (t, s): q* do exemplo e os veredictos em q = 0.88q* (esperado
    bounded) e q = 1.11q* (esperado diverging).
    """
    sharp = example.metadata.sharp_sobolev_exponent
    if sharp is None:
        raise InvalidParam(f"Exemplo '{example.name}' sem expoente crítico conhecido")
    rows = []
    for t, s in pairs:
        q_star = sharp(t, s)
        if q_star is None:
            continue
        for factor, expected in ((SHARP_BELOW, "bounded"), (SHARP_ABOVE, "diverging")):
            q = max(1.0, factor * q_star)
            study = sobolev_study(example.base, t, s, box, q, levels, cfg)
            rows.append({"t": t, "s": s, "q_star": q_star, "q": q, "expected": expected,
                         "verdict": study.verdict, "slope": study.fitted_slope,
                         "ok": study.verdict == expected})
    return pd.DataFrame(rows, columns=["t", "s", "q_star", "q", "expected", "verdict", "slope", "ok"])


# ===== Densidade do pushforward =====

@dataclass(frozen=True)
class DensityGrid:
    edges: tuple
    mass: np.ndarray
    total_mass: float
    source_mass: float
    mode: str
    undersampled: np.ndarray = None
    counts: np.ndarray = None
    zero_jacobian: list = dc_field(default_factory=list)

    @property
    def shape(self):
        return self.mass.shape

    def cell_volumes(self):
        widths = np.meshgrid(*[np.diff(e) for e in self.edges], indexing="ij")
        return np.prod(np.stack(widths, axis=0), axis=0)

    def centers(self):
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]

    @property
    def density(self):
        return self.mass / self.cell_volumes()

    def coarsen(self, factor=2):
        """Soma a massa em blocos de factor células por eixo."""
        factor = int(factor)
        if any(m % factor for m in self.shape):
            raise InvalidParam(f"Grade {self.shape} não é divisível por {factor}")
        mass = self.mass
        counts = self.counts
        for axis in range(mass.ndim):
            mass = np.add.reduceat(mass, np.arange(0, mass.shape[axis], factor), axis=axis)
            if counts is not None:
                counts = np.add.reduceat(counts, np.arange(0, counts.shape[axis], factor), axis=axis)
        edges = tuple(e[::factor] for e in self.edges)
        under = None if counts is None else counts < MIN_COUNT
        return DensityGrid(edges, mass, self.total_mass, self.source_mass, self.mode, under, counts)

    def to_frame(self):
        centers = np.meshgrid(*self.centers(), indexing="ij")
        cols = {f"y{i}": c.ravel() for i, c in enumerate(centers)}
        cols["density"] = self.density.ravel()
        cols["mass"] = self.mass.ravel()
        cols["undersampled"] = (np.zeros(self.mass.size, dtype=bool) if self.undersampled is None
                                else self.undersampled.ravel())
        return pd.DataFrame(cols)


def image_box(fld, t, s, source_box, cfg=None, nodes=33, pad=0.01):
    """Caixa envolvente das imagens X(t,s,·) de uma grade uniforme da fonte."""
    cfg = cfg or SolverConfig()
    lat = Lattice.uniform(source_box, nodes if source_box.dim > 1 else 257)
    fm = flow_map(fld, t, s, lat, cfg)
    imgs = fm.images[fm.valid]
    lo, hi = imgs.min(axis=0), imgs.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return Box(lo - pad * span, hi + pad * span)


def _density_mass(rho0, box, cells=4096):
    lat = Lattice.cell_centers(box, cells if box.dim == 1 else max(64, int(cells ** (1.0 / box.dim))))
    return float(np.sum(np.asarray(rho0(lat.points()), dtype=float) * lat.cell_volumes()))


def pushforward_density(fld, t, s, source_box, mode="histogram", cells=50, samples=None,
                        target_box=None, sub_cells=None, cfg=None, strict=False, rho0=None):
    """
    Densidade de X(t,s,·)_#(L^n ⌞ source_box).

    histogram: imagens de uma grade fina de células da fonte, massa = volume
    da célula de origem; jacobian_inverse: densidade J_X(s,t,y)·1[X(s,t,y) ∈ fonte]
    integrada em sub-células do alvo. rho0 troca a indicadora da fonte por
    uma densidade inicial ρ̄ (fórmula de representação da continuidade).
    """
    source_box = source_box if isinstance(source_box, Box) else Box(*source_box)
    cfg = cfg or SolverConfig()
    n = fld.dim
    cells_t = tuple(int(c) for c in np.broadcast_to(np.atleast_1d(cells), (n,)))
    source_mass = source_box.volume() if rho0 is None else _density_mass(rho0, source_box)
    if target_box is None:
        target_box = image_box(fld, t, s, source_box, cfg, pad=0.01 if mode == "histogram" else 0.0)
    target_box = target_box if isinstance(target_box, Box) else Box(*target_box)
    edges = tuple(np.linspace(lo, hi, c + 1) for lo, hi, c in zip(target_box.lower, target_box.upper, cells_t))

    if mode == "histogram":
        per_axis = samples or (200 * max(cells_t) if n == 1 else 12 * max(cells_t))
        lat = Lattice.cell_centers(source_box, per_axis)
        fm = flow_map(fld, t, s, lat, cfg)
        ok = fm.valid
        vols = lat.cell_volumes()
        if rho0 is not None:
            vols = vols * np.asarray(rho0(lat.points()), dtype=float)
        mass, _ = np.histogramdd(fm.images[ok], bins=edges, weights=vols[ok])
        counts, _ = np.histogramdd(fm.images[ok], bins=edges)
        return DensityGrid(edges, mass, float(np.sum(mass)), source_mass, "histogram",
                           counts < MIN_COUNT, counts)

    if mode == "jacobian_inverse":
        sub = sub_cells or (32 if n == 1 else 4)
        fine = Lattice.cell_centers(target_box, tuple(c * sub for c in cells_t))
        back = flow_map(fld, s, t, fine, cfg, variational=True)
        inside = back.valid & source_box.contains(np.nan_to_num(back.images, nan=np.inf))
        weight = 1.0 if rho0 is None else np.asarray(rho0(np.where(inside[:, None], back.images, 0.0)), dtype=float)
        jac = np.where(inside, weight * back.liouville_jac, 0.0)
        zero = np.flatnonzero(inside & ~(back.liouville_jac > 0))
        mass_fine = (jac * fine.cell_volumes()).reshape(fine.shape)
        mass = mass_fine
        for axis in range(n):
            mass = np.add.reduceat(mass, np.arange(0, mass.shape[axis], sub), axis=axis)
        zero_cells = sorted({tuple(int(v) // sub for v in np.unravel_index(i, fine.shape)) for i in zero})
        if strict and zero_cells:
            raise ZeroJacobian(f"{len(zero_cells)} células com jacobiano nulo", cells=zero_cells)
        return DensityGrid(edges, mass, float(np.sum(mass)), source_mass, "jacobian_inverse",
                           zero_jacobian=zero_cells)

    raise InvalidParam(f"Modo de densidade desconhecido: {mode}")


def density_l1_gap(a, b, interior=True):
    """‖ρ_a − ρ_b‖_L¹ / ‖ρ_b‖_L¹, opcionalmente só nas células interiores."""
    if a.shape != b.shape:
        raise InconsistentGrids("Grades de densidade com formas diferentes")
    da, db = a.density, b.density
    vol = b.cell_volumes()
    mask = np.ones(a.shape, dtype=bool)
    if interior:
        mask &= (a.mass > 0) & (b.mass > 0)
        for axis in range(mask.ndim):
            idx = [slice(None)] * mask.ndim
            idx[axis] = [0, -1]
            mask[tuple(idx)] = False
    return float(np.sum(np.abs(da - db)[mask] * vol[mask]) / np.sum(np.abs(db)[mask] * vol[mask]))


def phi_alpha(w, alpha):
    """Φ_α(w) = w exp((log⁺ w)^α)."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        lp = np.maximum(np.log(np.where(w > 0, w, 1.0)), 0.0)
    with np.errstate(over="ignore"):
        return w * np.exp(lp ** alpha)


def _orlicz_integral(d, alpha):
    use = d.mass > 0
    if d.undersampled is not None:
        use &= ~d.undersampled
    return float(np.sum((phi_alpha(d.density, alpha) * d.cell_volumes())[use]))


def orlicz_density_check(d, alpha, factor=2, stable_ratio=2.0):
    """∫ Φ_α(densidade) na grade e na grade engrossada; estável se a razão ≤ stable_ratio."""
    if not 0 < alpha <= 1:
        raise InvalidParam("α deve estar em (0, 1]")
    fine = _orlicz_integral(d, alpha)
    try:
        coarse = _orlicz_integral(d.coarsen(factor), alpha)
    except InvalidParam:
        coarse = float("nan")
    growth = fine / coarse if coarse and np.isfinite(coarse) else float("nan")
    finite = bool(np.isfinite(fine) and (np.isnan(growth) or 1.0 / stable_ratio <= growth <= stable_ratio))
    return {"orlicz_integral": fine, "coarse_integral": coarse, "growth": growth, "finite": finite,
            "alpha": alpha, "tolerance": stable_ratio}


def orlicz_frontier(d, alphas=(0.25, 0.5, 0.75, 0.9, 1.0)):
    """Varredura em α do orlicz_density_check (fronteira empírica de finitude)."""
    return pd.DataFrame([{"alpha": a, **orlicz_density_check(d, a)} for a in alphas])


# ===== Distorção =====

def q_distortion(fm, q):
    """K_q = ‖D_xX‖^q / J_X por nó (1 onde J = 0)."""
    if fm.dx_matrices is None:
        raise InvalidParam("q_distortion exige mapa com variacional")
    mats = np.nan_to_num(fm.dx_matrices)
    norms = np.linalg.norm(mats, 2, axis=(1, 2))
    jac = fm.jac
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(jac > 0, norms ** q / jac, 1.0)
    return np.where(fm.valid, k, np.nan)


def _weights(fm):
    if fm.lattice is not None:
        return fm.lattice.cell_volumes()
    return np.full(fm.nodes.shape[0], 1.0 / fm.nodes.shape[0])


def _lr_norm(values, weights, r):
    ok = np.isfinite(values)
    return float(np.sum(weights[ok] * values[ok] ** r) ** (1.0 / r))


def distortion_profile(fm_forward, fm_backward, q, p=None):
    """K_q dos mapas direto e reverso e, dado p, a norma L^r com r = (q/p + n/(p−n))^{−1}."""
    if fm_forward.t != fm_backward.s or fm_forward.s != fm_backward.t:
        raise InconsistentGrids("Mapas direto e reverso com (t, s) não trocados")
    if fm_forward.dim != fm_backward.dim:
        raise InconsistentGrids("Mapas com dimensões diferentes")
    if fm_forward.dx_matrices is None or fm_backward.dx_matrices is None:
        raise InconsistentGrids("distortion_profile exige jacobianos nos dois mapas")
    n = fm_forward.dim
    k_fwd = q_distortion(fm_forward, q)
    k_bwd = q_distortion(fm_backward, q)
    out = {"q": float(q), "forward": k_fwd, "backward": k_bwd, "r": None,
           "forward_norm": None, "backward_norm": None}
    if p is not None:
        if not p > n:
            raise InvalidParam("p deve ser > n")
        r = 1.0 / (q / p + n / (p - n))
        out.update({"r": r, "p": float(p),
                    "forward_norm": _lr_norm(k_fwd, _weights(fm_forward), r),
                    "backward_norm": _lr_norm(k_bwd, _weights(fm_backward), r)})
    return out


# ===== Cantor =====

def cantor_endpoints(level):
    """Extremos esquerdos e direitos dos 2^N intervalos do nível N do Cantor."""
    left = np.zeros(1)
    for j in range(1, int(level) + 1):
        left = np.concatenate([left, left + 2.0 * 3.0 ** -j])
    left.sort()
    return left, left + 3.0 ** -int(level)


def cantor_image_measure(level, t, amplitude=1.0, via_flow=True, cfg=None, pushed_level=None):
    """
    |X(t,0,C_N)| pela imagem dos extremos dos intervalos do nível M ≤ N.

    A escada de nível N é constante nas lacunas mais finas que M, então elas
    só transladam: cada intervalo de nível M perde o mesmo comprimento de
    lacuna antes e depois do fluxo. A estimativa remove o termo (2/3)^N que
    some no limite; alvo = amplitude·t².
    """
    level = int(level)
    if level < 1:
        raise InvalidParam("level deve ser ≥ 1")
    pushed = min(level, CANTOR_PUSHED_LEVEL) if pushed_level is None else int(pushed_level)
    if not 1 <= pushed <= level:
        raise InvalidParam(f"pushed_level deve estar em [1, {level}]")
    target = amplitude * float(t) ** 2
    if t == 0:
        return {"level": level, "pushed_level": pushed, "t": 0.0, "measure_estimate": 0.0,
                "raw_measure": (2.0 / 3.0) ** level, "target": 0.0, "rel_error": 0.0}
    left, right = cantor_endpoints(pushed)
    example = make_example("cantor", level=level, amplitude=amplitude)
    if via_flow:
        pts = np.concatenate([left, right])[:, None]
        fm = flow_map(example.base, float(t), 0.0, pts, cfg or SolverConfig())
        if not np.all(fm.valid):
            raise DomainExit("Extremo do Cantor saiu do domínio antes de t")
        img = fm.images[:, 0]
        img_l, img_r = img[: left.size], img[left.size:]
    else:
        stair = example.extras["staircase"]
        img_l = amplitude * stair(left) * t ** 2 + left
        img_r = amplitude * stair(right) * t ** 2 + right
    pushed_raw = float(np.sum(img_r - img_l))
    raw = pushed_raw - (2.0 / 3.0) ** pushed + (2.0 / 3.0) ** level
    estimate = raw - (2.0 / 3.0) ** level
    return {"level": level, "pushed_level": pushed, "t": float(t), "measure_estimate": estimate,
            "raw_measure": raw, "target": target, "rel_error": abs(estimate - target) / target}
