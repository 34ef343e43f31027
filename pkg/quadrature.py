#!/usr/bin/env python3
"""
Regras de quadratura usadas pelos estudos numéricos.

- graded_axis / graded_rule: ponto médio na coordenada logarítmica
  u = −log((x − x₀)/(b − x₀)), refinando em direção às coordenadas singulares;
- panel_axis: painéis de Gauss–Legendre geometricamente graduados até ε;
- ladder_verdict: veredito de divergência por escada de truncamentos;
- adaptive_quad: scipy.integrate.quad com QuadratureFailure.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from errors import InvalidParam, QuadratureFailure

# ===== CONFIG =====
GRADED_DEPTH = 25.0      # profundidade U₀ no nível 0
GRADED_STEP = 0.5        # passo h_u no nível 0
UNIFORM_CELLS = 16       # células por eixo regular no nível 0
GAUSS_ORDER = 8
PANEL_RATIO = 0.5
LADDER_DIVERGE_RATIO = 0.2
LADDER_CONVERGE_RATIO = 0.1
LADDER_ERROR_FACTOR = 10.0


@dataclass(frozen=True)
class AxisRule:
    nodes: np.ndarray
    log_weights: np.ndarray
    h: float          # passo na coordenada de refino (log ou física)
    finest: float     # menor largura física de célula
    graded: bool


@dataclass(frozen=True)
class TensorRule:
    axes: tuple       # AxisRule por eixo

    @property
    def shape(self):
        return tuple(a.nodes.size for a in self.axes)

    @property
    def h(self):
        return min(a.h for a in self.axes)

    @property
    def finest(self):
        return min(a.finest for a in self.axes)

    def points(self):
        mesh = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def log_weights(self):
        mesh = np.meshgrid(*[a.log_weights for a in self.axes], indexing="ij")
        return np.sum(np.stack(mesh, axis=0), axis=0).ravel()

    def weights(self):
        return np.exp(self.log_weights())


def _graded_piece(x0, far, depth, h_u):
    """Ponto médio em u ∈ [0, depth], x = x0 + (far − x0)e^{−u}."""
    m = max(int(round(depth / h_u)), 1)
    u = (np.arange(m) + 0.5) * h_u
    length = abs(far - x0)
    x = x0 + (far - x0) * np.exp(-u)
    logw = np.log(length) - u + np.log(h_u)
    finest = length * np.exp(-depth) * np.expm1(h_u)
    return x, logw, finest


def graded_axis(a, b, singular=(), level=0, depth=GRADED_DEPTH, step=GRADED_STEP, cells=UNIFORM_CELLS):
    """
    Regra 1D em [a, b]. Com pontos singulares, o nível j usa passo
    step/2^j e profundidade depth·2^j em cada pedaço graduado.
    """
    if not b > a:
        raise InvalidParam("Intervalo de quadratura vazio")
    sing = sorted(float(p) for p in singular if a <= p <= b)
    if not sing:
        m = int(cells) * 2 ** level
        h = (b - a) / m
        x = a + h * (np.arange(m) + 0.5)
        return AxisRule(x, np.full(m, np.log(h)), h, h, False)
    h_u = step / 2 ** level
    big_u = depth * 2 ** level
    cuts = [a] + sing + [b]
    xs, ws, finest = [], [], np.inf
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        left_sing = lo in sing
        right_sing = hi in sing
        if left_sing and right_sing:
            mid = 0.5 * (lo + hi)
            pieces = [(lo, mid), (hi, mid)]
        elif left_sing:
            pieces = [(lo, hi)]
        elif right_sing:
            pieces = [(hi, lo)]
        else:
            m = int(cells) * 2 ** level
            h = (hi - lo) / m
            xs.append(lo + h * (np.arange(m) + 0.5))
            ws.append(np.full(m, np.log(h)))
            finest = min(finest, h)
            continue
        for x0, far in pieces:
            x, lw, f = _graded_piece(x0, far, big_u, h_u)
            xs.append(x)
            ws.append(lw)
            finest = min(finest, f)
    x = np.concatenate(xs)
    lw = np.concatenate(ws)
    order = np.argsort(x, kind="stable")
    return AxisRule(x[order], lw[order], h_u, finest, True)


def graded_rule(box, singular_coords=(), level=0, **kwargs):
    """Produto tensorial de regras 1D; eixos com coordenada singular são graduados."""
    axes = []
    for i, (lo, hi) in enumerate(zip(box.lower, box.upper)):
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InvalidParam("Quadratura exige caixa limitada")
        pts = [v for axis, v in singular_coords if axis == i]
        axes.append(graded_axis(lo, hi, pts, level=level, **kwargs))
    return TensorRule(tuple(axes))


def panel_axis(a, b, singular=(), epsilon=0.0, order=GAUSS_ORDER, ratio=PANEL_RATIO, panels=8, cuts=()):
    """
    Gauss–Legendre em painéis geometricamente graduados até distância ε
    dos pontos singulares (ε = 0 usa 60 níveis de grading). cuts são
    bordas extras de painel onde o integrando não é suave.
    """
    if not b > a:
        raise InvalidParam("Intervalo de quadratura vazio")
    gx, gw = np.polynomial.legendre.leggauss(int(order))
    sing = sorted(float(p) for p in singular if a <= p <= b)
    extra = [float(c) for c in cuts if a < c < b]
    cuts = sorted(set([a, b] + sing + extra))
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        ls, rs = lo in sing, hi in sing
        if ls and rs:
            mid = 0.5 * (lo + hi)
            edges += _geometric_edges(lo, mid, epsilon, ratio) + _geometric_edges(hi, mid, epsilon, ratio)
        elif ls:
            edges += _geometric_edges(lo, hi, epsilon, ratio)
        elif rs:
            edges += _geometric_edges(hi, lo, epsilon, ratio)
        else:
            e = np.linspace(lo, hi, int(panels) + 1)
            edges += list(zip(e[:-1], e[1:]))
    xs, ws = [], []
    for lo, hi in edges:
        lo, hi = min(lo, hi), max(lo, hi)
        half = 0.5 * (hi - lo)
        xs.append(0.5 * (hi + lo) + half * gx)
        ws.append(half * gw)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    order_idx = np.argsort(x, kind="stable")
    return x[order_idx], w[order_idx]


def _geometric_edges(x0, far, epsilon, ratio):
    """Painéis [x0 + d·r^{j+1}, x0 + d·r^j] até d·r^j ≤ ε."""
    d = far - x0
    out = []
    j = 0
    while True:
        outer = x0 + d * ratio ** j
        inner_dist = abs(d) * ratio ** (j + 1)
        if epsilon > 0 and inner_dist <= epsilon:
            out.append((x0 + np.sign(d) * epsilon, outer))
            break
        if epsilon <= 0 and j >= 60:
            out.append((x0, outer))
            break
        out.append((x0 + d * ratio ** (j + 1), outer))
        j += 1
    return out


def log_sum(log_terms):
    """log Σ exp(termos), ignorando −inf."""
    terms = np.asarray(log_terms, dtype=float)
    terms = terms[np.isfinite(terms) | (terms == np.inf)]
    if terms.size == 0:
        return -np.inf
    return float(logsumexp(terms))


def pairwise_sum(values):
    """Soma em árvore (ordem fixa, independente de paralelismo)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0])


def ladder_verdict(partial_sums, errors=None):
    """
    Veredito sobre a sequência de somas parciais F(S_j).

    Incrementos d_j = F(S_{j+1}) − F(S_j). "diverging" quando todos
    superam 10× o erro de quadratura e d_last/d_first ≥ 0.2; "converging"
    quando d_last/d_first ≤ 0.1; caso contrário "inconclusive".
    """
    f = np.asarray(partial_sums, dtype=float)
    if f.size < 3:
        return "inconclusive"
    if np.any(np.isposinf(f)):
        return "diverging"
    err = np.zeros(f.size) if errors is None else np.asarray(errors, dtype=float)
    d = np.diff(f)
    tol = LADDER_ERROR_FACTOR * np.maximum(err[1:], err[:-1])
    if np.all(d > tol) and d[-1] >= LADDER_DIVERGE_RATIO * d[0]:
        return "diverging"
    if abs(d[0]) > 0 and abs(d[-1]) <= LADDER_CONVERGE_RATIO * abs(d[0]):
        return "converging"
    if np.all(np.abs(d) <= tol + 1e-15 * np.maximum(1.0, np.abs(f[1:]))):
        return "converging"
    return "inconclusive"


def geometric_tail(partial_sums):
    """Extrapolação da cauda supondo decaimento geométrico dos incrementos."""
    d = np.diff(np.asarray(partial_sums, dtype=float))
    if d.size < 2 or d[-2] == 0:
        return 0.0
    r = d[-1] / d[-2]
    if not 0 <= r < 1:
        return 0.0
    return float(d[-1] * r / (1.0 - r))


def adaptive_quad(fn, a, b, rel_tol=1e-10, abs_tol=1e-13, limit=500, points=None):
    """scipy.integrate.quad; QuadratureFailure com valor parcial e cota de erro."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, epsrel=rel_tol, epsabs=abs_tol, limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(fn, a, b, epsrel=rel_tol, epsabs=abs_tol, limit=limit, points=points)
            raise QuadratureFailure(f"quad instável em [{a}, {b}]: {exc}", partial=val, error_bound=err)
    return val, err
