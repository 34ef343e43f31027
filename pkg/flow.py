#!/usr/bin/env python3
"""
Integração do fluxo X(t, s, x) de campos não-Lipschitz.

Uma trajetória isolada usa RK45 com controle manual de passo (para
detectar saída do domínio por bissecção no interpolante); o mapa de fluxo
sobre uma grade integra blocos de nós de uma vez, opcionalmente junto com a
equação variacional Y' = D_xb(t, X)Y, o log do jacobiano (Liouville) e
∫‖D_xb‖. Os blocos têm tamanho fixo e rodam num ThreadPoolExecutor, então
o resultado não depende do número de workers.
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.integrate import RK45, OdeSolution, solve_ivp

from errors import DomainExit, InvalidParam, NonFinite
from field import Box, Lattice

# ===== CONFIG =====
EXIT_BISECTIONS = 60
MIN_RTOL = 1e-13
FUNNEL_DIRECTIONS = 64
TOLERANCE_RATIO_BAND = (0.2, 0.8)
ERROR_FLOOR = 1e-13
ELL_SLACK = 0.1
SUP_SAMPLES = 2001
SUP_TIMES = 17
EXIT_STATUSES = ("reached_target", "hit_space_boundary", "hit_time_boundary", "step_underflow")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerâncias e política de passo; os defaults servem aos exemplos da galeria."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = np.inf
    min_step: float = 1e-14
    method_order: int = 5
    domain_margin: float = 0.0
    singular_slowdown: bool = True
    slowdown_factor: float = 0.5
    batch_size: int = 256
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-2 and 0.0 < self.abs_tol <= 1e-2):
            raise InvalidParam("Tolerâncias devem estar em (0, 1e-2]")
        if not 0.0 < self.min_step < self.max_step:
            raise InvalidParam("Exige 0 < min_step < max_step")
        if self.method_order != 5:
            raise InvalidParam("Apenas o par de Dormand–Prince (ordem 5) é suportado")
        if int(self.batch_size) < 1 or int(self.workers) < 1:
            raise InvalidParam("batch_size e workers devem ser ≥ 1")
        if not 0.0 < self.slowdown_factor <= 1.0:
            raise InvalidParam("slowdown_factor deve estar em (0, 1]")

    def scaled(self, factor):
        """Mesma configuração com tolerâncias multiplicadas por factor."""
        return replace(self, rel_tol=min(self.rel_tol * factor, 1e-2),
                       abs_tol=min(self.abs_tol * factor, 1e-2))

    def with_workers(self, workers):
        return replace(self, workers=int(workers))

    def fingerprint(self):
        """Hash estável da configuração (workers não entra: não muda o resultado)."""
        data = {k: (str(v) if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in asdict(self).items() if k != "workers"}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Trajectory:
    s: float
    x0: np.ndarray
    t_target: float
    times: np.ndarray
    states: np.ndarray
    exit: str
    ell: float
    dense: object = None

    @property
    def end_time(self):
        return float(self.times[-1])

    @property
    def end_state(self):
        return self.states[-1]

    @property
    def reached(self):
        return self.exit == "reached_target"

    def __call__(self, t):
        if self.dense is None:
            return self.states[0].copy()
        return self.dense(t)


@dataclass(frozen=True)
class VariationalResult:
    times: np.ndarray
    matrices: np.ndarray        # (m, n, n)
    jac_det: np.ndarray         # det Y
    jac_liouville: np.ndarray   # exp ∫ div b
    norm_integral: np.ndarray   # ∫ ‖D_xb‖


@dataclass(frozen=True)
class FlowMapGrid:
    t: float
    s: float
    nodes: np.ndarray
    images: np.ndarray
    status: np.ndarray
    shape: tuple
    lattice: object = None
    dx_matrices: np.ndarray = None
    jac: np.ndarray = None
    liouville_jac: np.ndarray = None
    log_jac: np.ndarray = None
    norm_integral: np.ndarray = None

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def valid(self):
        return self.status == "reached_target"

    def to_frame(self):
        n = self.dim
        cols = {f"x{i}": self.nodes[:, i] for i in range(n)}
        cols.update({f"X{i}": self.images[:, i] for i in range(n)})
        if self.dx_matrices is not None:
            for i in range(n):
                for j in range(n):
                    cols[f"D{i}{j}"] = self.dx_matrices[:, i, j]
            cols["jac"] = self.jac
            cols["liouville_jac"] = self.liouville_jac
        cols["status"] = self.status
        return pd.DataFrame(cols)


# ===== Trajetória isolada =====

def _direction(s, t):
    return 1.0 if t >= s else -1.0


def _segment_ends(fld, s, t_end):
    """Extremos de segmento: breakpoints estritamente entre s e t_end, na ordem de integração."""
    d = _direction(s, t_end)
    inner = [b for b in fld.breakpoints if (b - s) * d > 0 and (t_end - b) * d > 0]
    inner = sorted(inner, reverse=(d < 0))
    return inner + [t_end]


def _step_cap(fld, t, X, cfg):
    """Limita o passo a slowdown·dist(X, singularidades)/|b| quando perto de uma singularidade."""
    if not cfg.singular_slowdown or not fld.singular_coords:
        return cfg.max_step
    X = np.atleast_2d(X)
    d = fld.singular_distance(X)
    if not np.any(np.isfinite(d)):
        return cfg.max_step
    speed = np.linalg.norm(fld.eval_batch(t, X), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.where(speed > 0, cfg.slowdown_factor * d / speed, np.inf)
    return float(max(min(cfg.max_step, np.min(cap)), cfg.min_step * 10))


def integrate_trajectory(fld, s, x0, t_target, cfg=None):
    """
    Integra x' = b(t, x), x(s) = x0 até t_target ou até sair da região.

    Devolve Trajectory com exit em EXIT_STATUSES e interpolante denso.
    """
    cfg = cfg or SolverConfig()
    s, t_target = float(s), float(t_target)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    lo, hi = fld.time_interval
    if not lo <= s <= hi:
        raise InvalidParam(f"s={s} fora de [{lo}, {hi}]")
    if not bool(fld.domain.contains(x0)):
        raise InvalidParam(f"x0={x0.tolist()} fora do domínio")
    t_end = min(max(t_target, lo), hi)
    time_exit = t_end != t_target

    times, states, interps = [s], [x0.copy()], []
    exit_status = "reached_target"
    t_cur, y_cur = s, x0.copy()
    if t_end == s:
        exit_status = "hit_time_boundary" if time_exit else "reached_target"
        return Trajectory(s, x0, t_target, np.array(times), np.array(states), exit_status, 0.0)

    for seg_end in _segment_ends(fld, s, t_end):
        solver = RK45(lambda t, y: fld.eval_batch(t, y), t_cur, y_cur, seg_end,
                      rtol=max(cfg.rel_tol, MIN_RTOL), atol=cfg.abs_tol, max_step=cfg.max_step)
        stopped = False
        while solver.status == "running":
            try:
                solver.max_step = _step_cap(fld, solver.t, solver.y, cfg)
                t_old = solver.t
                solver.step()
            except NonFinite:
                exit_status = "step_underflow"
                stopped = True
                break
            if solver.status == "failed" or (solver.status == "running" and solver.step_size < cfg.min_step):
                exit_status = "step_underflow"
                stopped = True
                break
            interp = solver.dense_output()
            if not bool(fld.domain.contains(solver.y, cfg.domain_margin)):
                t_in = _bisect_exit(fld, interp, t_old, solver.t, cfg.domain_margin)
                y_in = fld.domain.clip(interp(t_in))
                times.append(t_in)
                states.append(y_in)
                interps.append(interp)
                exit_status = "hit_space_boundary"
                stopped = True
                break
            times.append(solver.t)
            states.append(solver.y.copy())
            interps.append(interp)
        if stopped:
            break
        t_cur, y_cur = seg_end, solver.y.copy()
    if exit_status == "reached_target" and time_exit:
        exit_status = "hit_time_boundary"

    times = np.array(times)
    states = np.array(states)
    dense = OdeSolution(times, interps) if interps else None
    return Trajectory(s, x0, t_target, times, states, exit_status, float(abs(times[-1] - s)), dense)


def _bisect_exit(fld, interp, t_in, t_out, margin):
    for _ in range(EXIT_BISECTIONS):
        mid = 0.5 * (t_in + t_out)
        if bool(fld.domain.contains(interp(mid), margin)):
            t_in = mid
        else:
            t_out = mid
    return t_in


def flow_point(fld, t, s, x, cfg=None):
    """X(t, s, x); DomainExit se a trajetória não chega a t."""
    traj = integrate_trajectory(fld, s, x, t, cfg)
    if not traj.reached:
        raise DomainExit(f"Trajetória de x={np.atleast_1d(x).tolist()} parou em t={traj.end_time:g} ({traj.exit})")
    return traj.end_state


# ===== Equação variacional =====

def variational_solve(fld, traj, times=None, cfg=None):
    """
    Integra Y' = D_xb(t, X(t))Y, Y(s) = I ao longo de uma trajetória densa,
    junto com ∫ div b e ∫ ‖D_xb‖.
    """
    cfg = cfg or SolverConfig()
    n = fld.dim
    times = traj.times if times is None else np.atleast_1d(np.asarray(times, dtype=float))
    eye = np.eye(n)
    if traj.dense is None or traj.end_time == traj.s:
        m = times.size
        return VariationalResult(times, np.broadcast_to(eye, (m, n, n)).copy(), np.ones(m), np.ones(m), np.zeros(m))

    def rhs(t, z):
        a = fld.jacobian_batch(t, traj(t))
        y = z[: n * n].reshape(n, n)
        return np.concatenate([(a @ y).ravel(), [np.trace(a), np.linalg.norm(a, 2)]])

    z0 = np.concatenate([eye.ravel(), [0.0, 0.0]])
    sol = solve_ivp(rhs, (traj.s, traj.end_time), z0, method="RK45", t_eval=times,
                    rtol=max(cfg.rel_tol, MIN_RTOL), atol=cfg.abs_tol, max_step=cfg.max_step)
    if not sol.success:
        raise NonFinite(f"Equação variacional falhou: {sol.message}")
    z = sol.y.T
    mats = z[:, : n * n].reshape(-1, n, n)
    return VariationalResult(sol.t, mats, np.linalg.det(mats), np.exp(z[:, n * n]), np.abs(z[:, n * n + 1]))


@dataclass(frozen=True)
class GronwallReport:
    lhs: float
    rhs: float
    holds: bool
    slack: float
    tolerance: float


def gronwall_check(fld, traj, variational=None, tol=1e-6, cfg=None):
    """
    ‖D_xX(t)‖ ≤ exp(|∫_s^t ‖D_xb‖|) no fim da trajetória. Sem variational,
    a equação variacional de fld é integrada ao longo de traj.
    """
    if variational is None:
        variational = variational_solve(fld, traj, [traj.end_time], cfg)
    lhs = float(np.linalg.norm(variational.matrices[-1], 2))
    rhs = float(np.exp(variational.norm_integral[-1]))
    return GronwallReport(lhs, rhs, bool(lhs <= rhs * (1.0 + tol)), rhs - lhs, tol)


# ===== Mapa de fluxo em lote =====

def _chunk_flow(fld, s, nodes, targets, cfg, variational):
    """
    Integra um bloco de nós de s até cada alvo (todos do mesmo lado de s).

    Estado por nó: X, e com variational também Y, log J e ∫‖D_xb‖.
    """
    nb, n = nodes.shape
    nt = len(targets)
    width = n + (n * n + 2 if variational else 0)
    images = np.full((nt, nb, n), np.nan)
    status = np.full((nt, nb), "reached_target", dtype=object)
    mats = np.full((nt, nb, n, n), np.nan) if variational else None
    logj = np.full((nt, nb), np.nan) if variational else None
    nint = np.full((nt, nb), np.nan) if variational else None

    z0 = np.zeros((nb, width))
    z0[:, :n] = nodes
    if variational:
        z0[:, n: n + n * n] = np.eye(n).ravel()

    def store(k, z, alive):
        z = z.reshape(nb, width)
        ok = alive & fld.domain.contains(z[:, :n], cfg.domain_margin)
        images[k][ok] = z[ok, :n]
        status[k][~ok] = np.where(status_now[~ok] == "reached_target", "hit_space_boundary", status_now[~ok])
        if variational:
            mats[k][ok] = z[ok, n: n + n * n].reshape(-1, n, n)
            logj[k][ok] = z[ok, n + n * n]
            nint[k][ok] = np.abs(z[ok, n + n * n + 1])

    lo, hi = fld.time_interval
    status_now = np.full(nb, "reached_target", dtype=object)
    frozen = np.zeros(nb, dtype=bool)

    pending = []
    for k, t in enumerate(targets):
        if t == s:
            store(k, z0.ravel(), ~frozen)
        elif not lo <= t <= hi:
            status[k][:] = "hit_time_boundary"
        else:
            pending.append(k)
    if not pending:
        return images, status, mats, logj, nint

    t_far = targets[pending[-1]]
    d = _direction(s, t_far)

    def rhs(t, z):
        zz = z.reshape(nb, width)
        out = np.zeros_like(zz)
        act = ~frozen
        if np.any(act):
            xa = zz[act, :n]
            out[act, :n] = fld.eval_batch(t, xa)
            if variational:
                a = fld.jacobian_batch(t, xa)
                y = zz[act, n: n + n * n].reshape(-1, n, n)
                out[act, n: n + n * n] = (a @ y).reshape(-1, n * n)
                out[act, n + n * n] = np.trace(a, axis1=1, axis2=2)
                out[act, n + n * n + 1] = np.linalg.norm(a, 2, axis=(1, 2))
        return out.ravel()

    scale = np.sqrt(nb * width)
    atol = np.full((nb, width), cfg.abs_tol)
    x_abs = np.abs(nodes)
    atol[:, :n] = cfg.abs_tol * np.where(x_abs > 0, np.minimum(1.0, x_abs), 1.0)
    atol = (atol / scale).ravel()
    rtol = max(cfg.rel_tol / scale, MIN_RTOL)

    t_cur, z_cur = s, z0.ravel()
    ti = 0
    for seg_end in _segment_ends(fld, s, t_far):
        solver = RK45(rhs, t_cur, z_cur, seg_end, rtol=rtol, atol=atol, max_step=cfg.max_step)
        while solver.status == "running":
            act = ~frozen
            cap = _step_cap(fld, solver.t, solver.y.reshape(nb, width)[act, :n], cfg) if np.any(act) else cfg.max_step
            solver.max_step = cap
            t_old = solver.t
            solver.step()
            if solver.status == "failed" or (solver.status == "running" and solver.step_size < cfg.min_step):
                raise NonFinite(f"Passo abaixo de min_step em t={solver.t:g}")
            interp = None
            while ti < len(pending) and (targets[pending[ti]] - t_old) * d > 0 \
                    and (targets[pending[ti]] - solver.t) * d <= 0:
                interp = interp or solver.dense_output()
                store(pending[ti], interp(targets[pending[ti]]), ~frozen)
                ti += 1
            x_now = solver.y.reshape(nb, width)[:, :n]
            out = ~frozen & ~fld.domain.contains(x_now, cfg.domain_margin)
            if np.any(out):
                frozen |= out
                status_now[out] = "hit_space_boundary"
        t_cur, z_cur = seg_end, solver.y.copy()
    for k in pending[ti:]:
        store(k, z_cur, ~frozen)
    return images, status, mats, logj, nint


def _single_node_flow(fld, s, x, targets, cfg, variational):
    """Fallback nó a nó quando o bloco falha (passo mínimo ou valores não finitos)."""
    n = fld.dim
    nt = len(targets)
    images = np.full((nt, 1, n), np.nan)
    status = np.full((nt, 1), "reached_target", dtype=object)
    mats = np.full((nt, 1, n, n), np.nan) if variational else None
    logj = np.full((nt, 1), np.nan) if variational else None
    nint = np.full((nt, 1), np.nan) if variational else None
    traj = integrate_trajectory(fld, s, x, targets[-1] if nt else s, cfg)
    d = _direction(s, targets[-1]) if nt else 1.0
    reach = [k for k, t in enumerate(targets) if (t - traj.end_time) * d <= 0 and (traj.reached or t != traj.end_time)]
    for k in range(nt):
        if k not in reach:
            status[k, 0] = traj.exit if traj.exit != "reached_target" else "hit_space_boundary"
    if reach:
        times = np.array([targets[k] for k in reach])
        images[reach, 0] = np.array([traj(t) for t in times]).reshape(-1, n)
        if variational:
            try:
                var = variational_solve(fld, traj, times, cfg)
            except NonFinite:
                for k in reach:
                    status[k, 0] = "step_underflow"
                    images[k, 0] = np.nan
                return images, status, mats, logj, nint
            mats[reach, 0] = var.matrices
            logj[reach, 0] = np.log(var.jac_liouville)
            nint[reach, 0] = var.norm_integral
    return images, status, mats, logj, nint


def _run_chunk(args):
    fld, s, nodes, targets, cfg, variational = args
    try:
        return _chunk_flow(fld, s, nodes, targets, cfg, variational)
    except NonFinite:
        parts = [_single_node_flow(fld, s, x, targets, cfg, variational) for x in nodes]
        return tuple(None if p[0] is None else np.concatenate(p, axis=1) for p in zip(*parts))


def _flow_many(fld, s, points, targets, cfg, variational):
    """Fluxo de todos os pontos para todos os alvos, em blocos de batch_size."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    m, n = points.shape
    nt = targets.size
    images = np.full((nt, m, n), np.nan)
    status = np.full((nt, m), "hit_space_boundary", dtype=object)
    mats = np.full((nt, m, n, n), np.nan) if variational else None
    logj = np.full((nt, m), np.nan) if variational else None
    nint = np.full((nt, m), np.nan) if variational else None

    inside = fld.domain.contains(points)
    idx_in = np.flatnonzero(inside)
    bs = int(cfg.batch_size)
    for side in (1.0, -1.0):
        sel = np.flatnonzero((targets - s) * side >= 0) if side > 0 else np.flatnonzero(targets < s)
        if sel.size == 0 or idx_in.size == 0:
            continue
        order = sel[np.argsort((targets[sel] - s) * side, kind="stable")]
        tg = targets[order]
        chunks = [idx_in[i: i + bs] for i in range(0, idx_in.size, bs)]
        jobs = [(fld, float(s), points[c], tg, cfg, variational) for c in chunks]
        if cfg.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=int(cfg.workers)) as pool:
                results = list(pool.map(_run_chunk, jobs))
        else:
            results = [_run_chunk(j) for j in jobs]
        for c, (im, st, ma, lj, ni) in zip(chunks, results):
            for local, k in enumerate(order):
                images[k, c] = im[local]
                status[k, c] = st[local]
                if variational:
                    mats[k, c] = ma[local]
                    logj[k, c] = lj[local]
                    nint[k, c] = ni[local]
    return images, status, mats, logj, nint


def flow_map(fld, t, s, grid, cfg=None, variational=False):
    """
    X(t, s, ·) sobre uma Lattice ou um array de pontos (m, n).

    Nós que saem do domínio ficam NaN com o status correspondente.
    """
    cfg = cfg or SolverConfig()
    lattice = grid if isinstance(grid, Lattice) else None
    nodes = grid.points() if lattice is not None else np.atleast_2d(np.asarray(grid, dtype=float))
    if nodes.shape[1] != fld.dim:
        raise InvalidParam("Dimensão dos pontos difere da dimensão do campo")
    shape = lattice.shape if lattice is not None else (nodes.shape[0],)
    images, status, mats, logj, nint = _flow_many(fld, float(s), nodes, [float(t)], cfg, variational)
    extra = {}
    if variational:
        m = mats[0]
        with np.errstate(invalid="ignore"):
            det = np.linalg.det(np.nan_to_num(m, nan=0.0))
        det[~(status[0] == "reached_target")] = np.nan
        extra = {"dx_matrices": m, "jac": det, "liouville_jac": np.exp(logj[0]),
                 "log_jac": logj[0], "norm_integral": nint[0]}
    return FlowMapGrid(float(t), float(s), nodes, images[0], status[0], shape, lattice, **extra)


def flow_lattice(fld, t_values, s_values, points, cfg=None):
    """Array (len(t), len(s), m, n) com X(t, s, x); NaN onde o fluxo não está definido."""
    cfg = cfg or SolverConfig()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    out = np.full((t_values.size, s_values.size) + points.shape, np.nan)
    for j, s in enumerate(s_values):
        images, _, _, _, _ = _flow_many(fld, float(s), points, t_values, cfg, False)
        out[:, j] = images
    return out


def save_flow_grid(fm, path, field_spec=None, cfg=None):
    """CSV do mapa de fluxo + sidecar JSON com t, s, campo e hash da configuração."""
    path = Path(path)
    fm.to_frame().to_csv(path, index=False)
    meta = {"t": fm.t, "s": fm.s, "shape": list(fm.shape), "field": field_spec,
            "solver": None if cfg is None else cfg.fingerprint()}
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=2))
    return path


# ===== Consistência do fluxo =====

def semigroup_residual(fld, t1, t2, t3, x, cfg=None):
    """|X(t3, t2, X(t2, t1, x)) − X(t3, t1, x)|."""
    if t1 == t2 == t3:
        return 0.0
    mid = flow_point(fld, t2, t1, x, cfg)
    composed = flow_point(fld, t3, t2, mid, cfg)
    direct = flow_point(fld, t3, t1, x, cfg)
    return float(np.linalg.norm(composed - direct))


def inverse_flow_residual(fld, t, s, points, cfg=None):
    """max |X(s, t, X(t, s, x)) − x| sobre os nós que completam ida e volta."""
    fwd = flow_map(fld, t, s, points, cfg)
    ok = fwd.valid
    if not np.any(ok):
        raise DomainExit("Nenhum nó completa o fluxo direto")
    back = flow_map(fld, s, t, fwd.images[ok], cfg)
    good = back.valid
    if not np.any(good):
        raise DomainExit("Nenhum nó completa o fluxo reverso")
    return float(np.max(np.linalg.norm(back.images[good] - fwd.nodes[ok][good], axis=-1)))


def closed_form_errors(fld, closed_flow, t_values, s_values, points, cfg=None):
    """|X_num − X_fechado| com forma (len(t), len(s), m); NaN onde o fluxo não está definido."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    num = flow_lattice(fld, t_values, s_values, points, cfg)
    exact = np.stack([np.stack([np.asarray(closed_flow(t, s, points), dtype=float) for s in s_values])
                      for t in t_values])
    return np.linalg.norm(num - exact, axis=-1)


@dataclass(frozen=True)
class ToleranceStudy:
    errors: np.ndarray
    max_error: float
    max_error_halved: float
    ratio: float
    expected_ratio: float
    consistent: bool


def tolerance_convergence(fld, closed_flow, t_values, s_values, points, cfg=None, band=TOLERANCE_RATIO_BAND):
    """
    Erro máximo contra o fluxo fechado com as tolerâncias de cfg e com a
    metade delas. Com controle de erro por passo numa fórmula de ordem p o
    erro global escala como tol^{p/(p+1)}; a razão medida deve cair na banda.
    """
    cfg = cfg or SolverConfig()
    errors = closed_form_errors(fld, closed_flow, t_values, s_values, points, cfg)
    halved = closed_form_errors(fld, closed_flow, t_values, s_values, points, cfg.scaled(0.5))
    if not (np.any(np.isfinite(errors)) and np.any(np.isfinite(halved))):
        raise DomainExit("Nenhum nó completa o fluxo")
    err, err_half = float(np.nanmax(errors)), float(np.nanmax(halved))
    ratio = err_half / err if err > 0 else 0.0
    expected = 0.5 ** (cfg.method_order / (cfg.method_order + 1))
    consistent = err_half <= ERROR_FLOOR or band[0] <= ratio <= band[1]
    return ToleranceStudy(errors, err, err_half, ratio, expected, bool(consistent))


def maximal_interval_length(fld, s, x, cfg=None):
    """Comprimento de I_(s,x): tempo de vida da trajetória dentro de I × Ω."""
    lo, hi = fld.time_interval
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InvalidParam("ℓ(s, x) exige janela de tempo limitada")
    fwd = integrate_trajectory(fld, s, x, hi, cfg)
    bwd = integrate_trajectory(fld, s, x, lo, cfg)
    return float(fwd.end_time - bwd.end_time)


def maximal_interval_lengths(fld, s, points, cfg=None):
    """ℓ(s, x) para vários pontos; nós que não saem valem |I| sem integrar de novo."""
    cfg = cfg or SolverConfig()
    lo, hi = fld.time_interval
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InvalidParam("ℓ(s, x) exige janela de tempo limitada")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    images, status, _, _, _ = _flow_many(fld, float(s), points, [hi, lo], cfg, False)
    full = (status[0] == "reached_target") & (status[1] == "reached_target")
    out = np.full(points.shape[0], hi - lo)
    for i in np.flatnonzero(~full):
        out[i] = maximal_interval_length(fld, s, points[i], cfg)
    return out


def sup_speed(fld, box, times, samples=SUP_SAMPLES):
    """sup |b| numa grade uniforme da caixa (limitada), nos tempos dados."""
    box = box if isinstance(box, Box) else Box(*box)
    if not box.bounded:
        raise InvalidParam("sup |b| exige caixa limitada")
    per_axis = samples if box.dim == 1 else max(16, int(round(samples ** (1.0 / box.dim))))
    pts = Lattice.uniform(box, per_axis).points()
    return float(max(np.max(np.linalg.norm(fld.eval_batch(float(t), pts), axis=-1)) for t in np.atleast_1d(times)))


@dataclass(frozen=True)
class IntervalBoundReport:
    s: np.ndarray
    points: np.ndarray
    lengths: np.ndarray
    bounds: np.ndarray
    sup_b: float
    slack: float

    @property
    def holds(self):
        return self.lengths >= (1.0 - self.slack) * self.bounds

    @property
    def violations(self):
        return int(np.sum(~self.holds))

    @property
    def worst_ratio(self):
        return float(np.min(self.lengths / self.bounds))

    def to_frame(self):
        df = pd.DataFrame({"s": self.s})
        for i in range(self.points.shape[1]):
            df[f"x{i}"] = self.points[:, i]
        df["ell"] = self.lengths
        df["bound"] = self.bounds
        df["holds"] = self.holds
        return df


def interval_length_bound(fld, samples=500, rng=None, sup_b=None, slack=ELL_SLACK, cfg=None):
    """ℓ(s, x) ≥ min{ℓ, dist(x, ∂Ω)/sup|b|} em (s, x) uniformes de I × Ω, com folga relativa slack."""
    lo, hi = fld.time_interval
    if not (np.isfinite(lo) and np.isfinite(hi) and fld.domain.bounded):
        raise InvalidParam("ℓ(s, x) exige janela de tempo e domínio limitados")
    if int(samples) < 1:
        raise InvalidParam("samples deve ser ≥ 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    s = rng.uniform(lo, hi, int(samples))
    x = rng.uniform(fld.domain.lower, fld.domain.upper, size=(int(samples), fld.dim))
    sup_b = sup_speed(fld, fld.domain, np.linspace(lo, hi, SUP_TIMES)) if sup_b is None else float(sup_b)
    ell = hi - lo
    dist = fld.domain.dist_to_boundary(x)
    bounds = np.minimum(ell, dist / sup_b) if sup_b > 0 else np.full(int(samples), ell)
    lengths = np.array([maximal_interval_length(fld, si, xi, cfg) for si, xi in zip(s, x)])
    return IntervalBoundReport(s, x, lengths, bounds, sup_b, float(slack))


# ===== Funil de unicidade =====

@dataclass(frozen=True)
class FunnelReport:
    delta: float
    max_spread: float
    envelope: float
    holds: bool


def _ball_directions(dim, count, seed=0):
    if dim == 1:
        return np.linspace(-1.0, 1.0, count)[:, None]
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    v = np.random.default_rng(seed).normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def funnel_envelope(omega, delta, phi_integral):
    """D(τ) com D' = ω(D), D(0) = δ, avaliado em τ = ∫φ."""
    if delta == 0.0 or phi_integral == 0.0:
        return float(delta)
    sol = solve_ivp(lambda tau, y: [omega(y[0]) if y[0] > 0 else 0.0], (0.0, phi_integral), [delta],
                    method="RK45", rtol=1e-10, atol=delta * 1e-12)
    if not sol.success:
        raise NonFinite(f"Envelope do funil falhou: {sol.message}")
    return float(sol.y[0, -1])


def uniqueness_funnel(fld, s, x0, radii, horizon, omega, phi_integral, cfg=None,
                      directions=FUNNEL_DIRECTIONS, seed=0, tol=1e-6):
    """
    Espalhamento máximo das trajetórias que partem a distância ≤ δ de x0,
    medido a partir da trajetória central, contra o envelope D' = φω(D).
    """
    cfg = cfg or SolverConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    center = flow_point(fld, s + horizon, s, x0, cfg)
    dirs = _ball_directions(fld.dim, int(directions), seed)
    reports = []
    for delta in np.atleast_1d(radii):
        delta = float(delta)
        if delta == 0.0:
            reports.append(FunnelReport(0.0, 0.0, 0.0, True))
            continue
        fm = flow_map(fld, s + horizon, s, x0 + delta * dirs, cfg)
        ok = fm.valid
        spread = float(np.max(np.linalg.norm(fm.images[ok] - center, axis=-1))) if np.any(ok) else np.nan
        env = funnel_envelope(omega, delta, phi_integral)
        reports.append(FunnelReport(delta, spread, env, bool(spread <= env * (1.0 + tol))))
    return reports
