#!/usr/bin/env python3
"""
Gauges de Orlicz e funcionais de somabilidade.

Logs/exps iterados, a família E_{k,β}, validação das hipóteses (I)–(III)
de um gauge Θ, o módulo de continuidade ω(δ), normas de Luxemburg e as
integrais ∫∫ Θ(c‖D_xb‖) e Λ_p. Integrais singulares são truncadas numa
escada de ε e o veredito sai de quadrature.ladder_verdict.
"""

from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.optimize import brentq

from errors import (DivergentIntegral, InvalidParam, InvalidThreshold, InverseDomain, NoFiniteNorm,
                    OutOfDomain, Overflow, QuadratureFailure)
from field import Box
from flow import SolverConfig, maximal_interval_lengths, sup_speed
from quadrature import (AxisRule, TensorRule, adaptive_quad, geometric_tail, ladder_verdict, log_sum,
                        panel_axis)

# ===== CONFIG =====
EXP_MAX = np.log(np.finfo(float).max)
S_LADDER = (1e3, 1e6, 1e9, 1e12)
EPS_LADDER = (1e-4, 1e-8, 1e-12, 1e-16)
C_THETA_CANDIDATES = tuple(2.0 ** j for j in range(11))
SBAR_SEARCH = 60
BRENT_RTOL = 4.0 * np.finfo(float).eps
LUX_CAP = 1e12
LUX_RTOL = 1e-10
LUX_MAXITER = 200
TIME_PANELS = 2
COEFFICIENT_MARGIN = 1.25


# ===== Exponenciais e logaritmos iterados =====

def iterated_exp(k, s):
    """E_k(s): E_1 = exp, E_{k+1} = exp ∘ E_k. Overflow em vez de saturar em inf."""
    if int(k) < 1:
        raise InvalidParam("k deve ser ≥ 1")
    v = np.asarray(s, dtype=float)
    for _ in range(int(k)):
        if np.any(v > EXP_MAX):
            raise Overflow(f"E_{k}({s}) excede o maior float")
        v = np.exp(v)
    return float(v) if v.ndim == 0 else v


def _log_threshold(k):
    """s_k = E_{k−1}(0), com E_0(0) = 0."""
    return 0.0 if k == 1 else float(iterated_exp(k - 1, 0.0))


def iterated_log(k, s):
    """L_k(s) = log ∘ … ∘ log (k vezes), definido para s > E_{k−1}(0)."""
    if int(k) < 1:
        raise InvalidParam("k deve ser ≥ 1")
    v = np.asarray(s, dtype=float)
    if np.any(v <= _log_threshold(int(k))):
        raise OutOfDomain(f"L_{k} definido apenas para s > {_log_threshold(int(k)):g}")
    for _ in range(int(k)):
        v = np.log(v)
    return float(v) if v.ndim == 0 else v


def _logs(k, s):
    """[L_1(s), …, L_k(s)] sem checagem."""
    out = []
    v = np.asarray(s, dtype=float)
    for _ in range(k):
        v = np.log(v)
        out.append(v)
    return out


def log_product(k, s):
    """P_k(s) = L_1(s)·…·L_k(s); P_0 = 1."""
    if int(k) == 0:
        return np.ones_like(np.asarray(s, dtype=float))
    iterated_log(k, s)
    out = np.prod(np.stack(_logs(int(k), s)), axis=0)
    return float(out) if np.ndim(out) == 0 else out


def h_factor(k, beta, s):
    """H_{k,β}(s) = (1 − Σ_{j<k} 1/P_j − β/P_k) / (P_{k−1} L_k^β), com Θ' = Θ·H."""
    k = int(k)
    iterated_log(k, s)
    ls = _logs(k, s)
    prods = np.cumprod(np.stack(ls), axis=0)
    inner = 1.0 - beta / prods[k - 1]
    for j in range(k - 1):
        inner = inner - 1.0 / prods[j]
    p_prev = prods[k - 2] if k > 1 else 1.0
    out = inner / (p_prev * ls[k - 1] ** beta)
    return float(out) if np.ndim(out) == 0 else out


def _subexp_exponent(k, beta, s):
    """s / (P_{k−1}(s) L_k(s)^β), o log de E_{k,β}."""
    ls = _logs(k, s)
    p_prev = np.prod(np.stack(ls[:-1]), axis=0) if k > 1 else 1.0
    return np.asarray(s, dtype=float) / (p_prev * ls[-1] ** beta)


def _subexp_log_h_loglog(k, beta, w):
    """log H_{k,β} no ponto com log log s = w (não calcula s nem log s)."""
    # L_1 = e^w, L_2 = w, L_3 = log w, …; log L_j = L_{j+1}
    chain = [w]
    for _ in range(k):
        if chain[-1] <= 0:
            return None
        chain.append(np.log(chain[-1]))
    log_l = chain[: k]                # log L_1 … log L_k
    log_p = np.cumsum(log_l)          # log P_1 … log P_k
    correction = beta * np.exp(-log_p[k - 1]) + sum(np.exp(-log_p[j]) for j in range(k - 1))
    if correction >= 1.0:
        return None
    prev = log_p[k - 2] if k > 1 else 0.0
    return float(-prev - beta * log_l[k - 1] + np.log1p(-correction))


# ===== Gauges =====

@dataclass(frozen=True)
class OrliczGauge:
    """
    Gauge Θ guardado em escala log: log_eval(s) = log Θ(s) e
    rate(s) = Θ'(s)/Θ(s). log_h_loglog(w), quando existe, é
    log(Θ'/Θ) no ponto s com log log s = w.
    """

    family_tag: str
    params: dict
    log_eval_fn: object
    rate_fn: object
    c_theta: float = 1.0
    s_bar: float = 0.0
    inverse_log_fn: object = None
    log_h_loglog: object = None
    extras: dict = dc_field(default_factory=dict)

    def log_eval(self, s):
        s = np.maximum(np.asarray(s, dtype=float), self.s_bar)
        out = self.log_eval_fn(s)
        return float(out) if np.ndim(out) == 0 else out

    def eval(self, s):
        lv = self.log_eval(s)
        if np.any(np.asarray(lv) > EXP_MAX):
            raise Overflow(f"Θ({s}) excede o maior float (log Θ = {np.max(lv):g})")
        out = np.exp(lv)
        return float(out) if np.ndim(out) == 0 else out

    def rate(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(s > self.s_bar, self.rate_fn(np.maximum(s, self.s_bar)), 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def deriv(self, s):
        out = np.asarray(self.eval(s)) * np.asarray(self.rate(s))
        return float(out) if np.ndim(out) == 0 else out

    def inverse_log(self, y):
        """Menor s ≥ s̄ com log Θ(s) = y."""
        y = float(y)
        floor = self.log_eval(self.s_bar)
        if y < floor - 1e-12 * max(1.0, abs(floor)):
            raise InverseDomain(f"log u = {y:g} abaixo de log Θ(s̄) = {floor:g}")
        if y <= floor:
            return float(self.s_bar)
        if self.inverse_log_fn is not None:
            return float(self.inverse_log_fn(y))
        lo = self.s_bar
        hi = max(2.0 * lo, 1.0)
        for _ in range(2100):
            if self.log_eval(hi) >= y:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise InverseDomain(f"Θ⁻¹ sem intervalo de busca para log u = {y:g}")
        return float(brentq(lambda s: self.log_eval(s) - y, lo, hi, xtol=1e-300, rtol=BRENT_RTOL, maxiter=500))

    def inverse(self, u):
        if not u > 0:
            raise InverseDomain("Θ⁻¹ exige u > 0")
        return self.inverse_log(np.log(u))

    def describe(self):
        return {"family": self.family_tag, **self.params, "c_theta": self.c_theta, "s_bar": self.s_bar}


def _convex_on(log_vals, s, gamma=1.0):
    """Θ^γ convexo nos pontos s: inclinações de Θ^γ não decrescentes (em escala log)."""
    g = gamma * np.asarray(log_vals, dtype=float)
    dg = np.diff(g)
    if np.any(dg < -1e-12 * np.maximum(1.0, np.abs(g[1:]))):
        return False
    with np.errstate(divide="ignore"):
        log_slope = g[1:] + np.log(-np.expm1(-np.maximum(dg, 0.0))) - np.log(np.diff(s))
    prev, nxt = log_slope[:-1], log_slope[1:]
    ok = (nxt >= prev - 1e-9 * np.maximum(1.0, np.abs(prev))) | np.isneginf(prev)
    return bool(np.all(ok))


def _auto_s_bar(k, beta):
    """Primeiro s = E_k(1)·2^j com L_k(s) > 1, H > 0 e Θ convexo em [s, 10⁶s]."""
    base = float(iterated_exp(k, 1.0))
    for j in range(SBAR_SEARCH):
        s = base * 2.0 ** j
        if s <= _log_threshold(k) or not _logs(k, s)[-1] > 1.0:
            continue
        if not h_factor(k, beta, s) > 0:
            continue
        grid = np.logspace(np.log10(s), np.log10(s) + 6, 200)
        if _convex_on(_subexp_exponent(k, beta, grid), grid):
            return s
    raise InvalidThreshold(f"Não achei s̄ automático para E_{{{k},{beta}}}")


def subexp_gauge(k, beta, s_bar="auto", c_theta=None):
    """
    E_{k,β}(s) = exp(s / (P_{k−1}(s) L_k(s)^β)) para s ≥ s̄, constante abaixo.

    s̄ = "auto" procura o menor candidato E_k(1)·2^j que dá um gauge convexo.
    """
    k = int(k)
    if k < 1:
        raise InvalidParam("k deve ser ≥ 1")
    beta = float(beta)
    if beta < 0:
        raise InvalidParam("β deve ser ≥ 0")
    if s_bar == "auto" or s_bar is None:
        s_bar = _auto_s_bar(k, beta)
    s_bar = float(s_bar)
    if s_bar <= _log_threshold(k) or not _logs(k, s_bar)[-1] > 1.0:
        raise InvalidThreshold(f"s̄ = {s_bar:g} exige L_{k}(s̄) > 1")

    g = OrliczGauge(
        family_tag="subexp",
        params={"k": k, "beta": beta},
        log_eval_fn=lambda s: _subexp_exponent(k, beta, s),
        rate_fn=lambda s: h_factor(k, beta, s),
        s_bar=s_bar,
        log_h_loglog=lambda w: _subexp_log_h_loglog(k, beta, w),
    )
    return _with_c_theta(g, c_theta)


def exponential_gauge(beta=1.0, c_theta=None):
    """Θ(s) = exp(βs)."""
    beta = float(beta)
    if beta <= 0:
        raise InvalidParam("β deve ser > 0")
    g = OrliczGauge(
        family_tag="exponential",
        params={"beta": beta},
        log_eval_fn=lambda s: beta * np.asarray(s, dtype=float),
        rate_fn=lambda s: np.full_like(np.asarray(s, dtype=float), beta),
        inverse_log_fn=lambda y: y / beta,
        log_h_loglog=lambda w: float(np.log(beta)),
    )
    return _with_c_theta(g, c_theta)


def power_gauge(p, c_theta=None):
    """Θ(s) = s^p."""
    p = float(p)
    if p <= 0:
        raise InvalidParam("p deve ser > 0")

    def log_eval(s):
        with np.errstate(divide="ignore"):
            return p * np.log(np.asarray(s, dtype=float))

    def log_h(w):
        return float(np.log(p) - np.exp(w)) if w < EXP_MAX else -np.inf

    g = OrliczGauge(
        family_tag="power",
        params={"p": p},
        log_eval_fn=log_eval,
        rate_fn=lambda s: p / np.asarray(s, dtype=float),
        inverse_log_fn=lambda y: np.exp(y / p),
        log_h_loglog=log_h,
    )
    return _with_c_theta(g, c_theta)


def custom_gauge(log_eval, rate, s_bar=0.0, c_theta=None, name="custom"):
    """Gauge a partir de log Θ e Θ'/Θ vetorizados; C_Θ por busca se não informado."""
    g = OrliczGauge(family_tag="custom", params={"name": name}, log_eval_fn=log_eval, rate_fn=rate,
                    s_bar=float(s_bar))
    return _with_c_theta(g, c_theta)


def gauge_from_spec(spec):
    """{'family': 'subexp', 'k': 1, 'beta': 1.0, 's_bar': 'auto'} → OrliczGauge."""
    spec = dict(spec)
    family = spec.pop("family", None)
    builders = {"subexp": subexp_gauge, "exponential": exponential_gauge, "power": power_gauge}
    if family not in builders:
        raise InvalidParam(f"Família de gauge desconhecida: {family!r} (opções: {', '.join(builders)})")
    try:
        return builders[family](**spec)
    except TypeError as exc:
        raise InvalidParam(f"Parâmetros inválidos para gauge '{family}': {exc}") from exc


def _with_c_theta(g, c_theta):
    if c_theta is None:
        c_theta = find_c_theta(g)
        if c_theta is None:
            raise InvalidThreshold(f"Nenhum C_Θ candidato satisfaz a submultiplicatividade para {g.family_tag}")
    if c_theta < 1.0:
        raise InvalidParam("C_Θ deve ser ≥ 1")
    return replace(g, c_theta=float(c_theta))


def _submultiplicative(g, c, lo, decades=6, points=30):
    s = np.logspace(np.log10(lo), np.log10(lo) + decades, points)
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    lhs = g.log_eval(s1) + g.log_eval(s2)
    rhs = g.log_eval(c * s1 * s2)
    return bool(np.all(lhs <= rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))))


def find_c_theta(g, candidates=C_THETA_CANDIDATES):
    """Menor C ≥ max(1, s̄) da lista com Θ(s₁)Θ(s₂) ≤ Θ(C s₁ s₂) para s₁, s₂ ≥ C."""
    cands = [c for c in candidates if c >= max(1.0, g.s_bar)]
    if not cands:
        cands = [g.s_bar * 2.0 ** j for j in range(len(candidates))]
    for c in cands:
        if _submultiplicative(g, c, c):
            return float(c)
    return None


# ===== Validação (I)–(III) =====

@dataclass(frozen=True)
class GaugeVerdict:
    convexity_power_ok: bool
    submultiplicative_ok: bool
    osgood_integral: dict
    details: str

    @property
    def admissible(self):
        return self.convexity_power_ok and self.submultiplicative_ok and self.osgood_integral["verdict"] == "diverging"

    def to_dict(self):
        return {"convexity_power_ok": self.convexity_power_ok, "submultiplicative_ok": self.submultiplicative_ok,
                "osgood_integral": self.osgood_integral, "details": self.details}


def _tail_log_ratios(g, s_ladder):
    """
    log da razão e^v h(e^v)/h(v) para h(v) = (Θ'/Θ)(e^v), na profundidade v = S.

    Razão ≥ 1 na cauda faz ∫h(v)dv divergir; ≤ q < 1 faz convergir.
    """
    if g.log_h_loglog is None:
        return None
    out = []
    for big_s in s_ladder:
        w = np.log(big_s)
        near, far = g.log_h_loglog(w), g.log_h_loglog(big_s)
        if near is None or far is None:
            return None
        out.append(float(big_s + far - near))
    return out


def osgood_partial_sums(g, s_ladder=S_LADDER):
    """F(S) = ∫_1^S Θ'(s)/(sΘ(s)) ds, integrada em v = log s."""
    edges = [0.0] + [float(np.log(v)) for v in s_ladder]
    kink = np.log(g.s_bar) if g.s_bar > 1.0 else None
    total, err_total = 0.0, 0.0
    values, errors = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        pts = [kink] if kink is not None and a < kink < b else None
        val, err = adaptive_quad(lambda v: g.rate(np.exp(v)), a, b, points=pts)
        total += val
        err_total += err
        values.append(total)
        errors.append(err_total)
    return values, errors


def validate_gauge(g, alpha=None, s_ladder=S_LADDER, dim=1):
    """
    (I) Θ^{(α−1)/α} convexo (Θ convexo quando n = 1); (II) Θ(s₁)Θ(s₂) ≤ Θ(C_Θ s₁s₂);
    (III) ∫_1^∞ Θ'/(sΘ) = ∞, pela escada de somas parciais e pela razão de cauda.
    """
    s_ladder = [float(v) for v in s_ladder]
    if len(s_ladder) < 4 or np.any(np.diff(s_ladder) <= 0):
        raise InvalidParam("S_ladder deve ser crescente com pelo menos 4 valores")
    if dim == 1:
        gamma = 1.0
    else:
        if alpha is None or not 1.0 < alpha < dim / (dim - 1.0):
            raise InvalidParam(f"α deve estar em (1, {dim / (dim - 1.0):g}) para n = {dim}")
        gamma = (alpha - 1.0) / alpha

    start = max(g.s_bar, 1e-6)
    grid = np.logspace(np.log10(start), np.log10(s_ladder[-1]), 400)
    convex = _convex_on(g.log_eval(grid), grid, gamma)
    submult = _submultiplicative(g, g.c_theta, g.c_theta)

    values, errors = osgood_partial_sums(g, s_ladder)
    ratios = _tail_log_ratios(g, s_ladder)
    increasing = bool(np.all(np.diff(values) > 10.0 * np.asarray(errors[1:])))
    if ratios is not None and all(r >= 0 for r in ratios) and increasing:
        verdict, method = "diverging", "tail-ratio"
    elif ratios is not None and all(r < 0 for r in ratios):
        verdict, method = "converging", "tail-ratio"
    else:
        verdict, method = ladder_verdict(values, errors), "ladder"
    details = (f"{g.family_tag} {g.params}: C_Θ={g.c_theta:g}, s̄={g.s_bar:g}, γ={gamma:g}, "
               f"veredito por {method}")
    osgood = {"partial_sums": [[s, v] for s, v in zip(s_ladder, values)], "errors": errors,
              "tail_log_ratios": ratios, "method": method, "verdict": verdict}
    return GaugeVerdict(convex, submult, osgood, details)


# ===== Módulo de continuidade =====

def modulus_omega(g, alpha, delta):
    """ω(δ) = δ Θ⁻¹(Θ(C_Θ) ∨ (1/δ)^{α/(α−1)})."""
    if not delta > 0:
        raise InvalidParam("δ deve ser > 0")
    if not alpha > 1:
        raise InvalidParam("α deve ser > 1")
    y = max(g.log_eval(g.c_theta), alpha / (alpha - 1.0) * np.log(1.0 / delta))
    return float(delta * g.inverse_log(y))


def make_omega(g, alpha):
    """ω como função de uma variável (ω(0) = 0)."""
    return lambda d: modulus_omega(g, alpha, d) if d > 0 else 0.0


def osgood_modulus_integral(g, alpha, deltas=(1e-4, 1e-8, 1e-16, 1e-32), delta0=0.1):
    """Somas parciais de ∫_δ^{δ0} dδ'/ω(δ'), integradas em λ = log(1/δ')."""
    lam0 = np.log(1.0 / delta0)
    values, errors = [], []
    total, err_total, lam_prev = 0.0, 0.0, lam0
    for d in deltas:
        lam = np.log(1.0 / d)
        fn = lambda l: 1.0 / g.inverse_log(max(g.log_eval(g.c_theta), alpha / (alpha - 1.0) * l))
        val, err = adaptive_quad(fn, lam_prev, lam)
        total += val
        err_total += err
        values.append(total)
        errors.append(err_total)
        lam_prev = lam
    verdict = ladder_verdict(values, errors)
    return {"partial_sums": [[float(d), v] for d, v in zip(deltas, values)], "errors": errors, "verdict": verdict}


# ===== Integrais de somabilidade =====

def _axis_rule(nodes, weights):
    return AxisRule(nodes, np.log(weights), 0.0, float(np.min(np.diff(nodes))) if nodes.size > 1 else 0.0, True)


def _space_rule(box, singular_by_axis, cuts_by_axis, epsilon):
    axes = []
    for i, (lo, hi) in enumerate(zip(box.lower, box.upper)):
        x, w = panel_axis(lo, hi, singular_by_axis.get(i, ()), epsilon, cuts=cuts_by_axis.get(i, ()))
        axes.append(_axis_rule(x, w))
    return TensorRule(tuple(axes))


def _time_rule(fld, tspan):
    t0, t1 = float(tspan[0]), float(tspan[1])
    return panel_axis(t0, t1, (), 0.0, panels=TIME_PANELS, cuts=fld.breakpoints)


def _by_axis(pairs, box):
    out = {}
    for axis, value in pairs:
        if box.lower[axis] <= value <= box.upper[axis]:
            out.setdefault(axis, []).append(float(value))
    return out


def _jac_norm(fld, t, pts):
    a = fld.jacobian_batch(t, pts)
    if fld.dim == 1:
        return np.abs(a[:, 0, 0])
    return np.linalg.norm(a, 2, axis=(1, 2))


def _ladder_integral(log_integrand_at, box, singular, cuts, epsilons, label):
    """
    Integral espaço-tempo pela escada de truncamentos ε em torno das
    coordenadas singulares; sem singularidades faz uma única avaliação.
    """
    if not singular:
        rule = _space_rule(box, singular, cuts, 0.0)
        with np.errstate(over="ignore"):
            return float(np.exp(log_integrand_at(rule))), []
    values = []
    for eps in epsilons:
        rule = _space_rule(box, singular, cuts, float(eps))
        with np.errstate(over="ignore"):
            values.append(float(np.exp(log_integrand_at(rule))))
    ladder = list(zip([float(e) for e in epsilons], values))
    verdict = ladder_verdict(values)
    if verdict == "diverging":
        raise DivergentIntegral(f"{label}: integral diverge ao refinar ε", partial=values[-1], ladder=ladder)
    if verdict == "inconclusive":
        raise QuadratureFailure(f"{label}: escada de ε inconclusiva", partial=values[-1],
                                error_bound=abs(values[-1] - values[-2]))
    return values[-1] + geometric_tail(values), ladder


def _weight_log(weight, gamma, fld, box, t, pts, cfg):
    if weight == "uniform":
        return 0.0
    if weight == "distance_power":
        with np.errstate(divide="ignore"):
            return gamma * np.log(box.dist_to_boundary(pts))
    if weight == "maximal_interval_power":
        ell = maximal_interval_lengths(fld, t, pts, cfg)
        return gamma * np.log(ell)
    raise InvalidParam(f"Peso desconhecido: {weight}")


def summability_integral(fld, g, c, box, tspan, weight="uniform", gamma=0.0, cfg=None,
                         epsilons=EPS_LADDER, with_ladder=False):
    """
    ∫_tspan ∫_box Θ(c‖D_xb(t,x)‖)·w(t,x) dx dt.

    DivergentIntegral quando a escada de ε cresce sem decair; o valor
    convergente inclui a extrapolação geométrica da cauda.
    """
    if not c > 0:
        raise InvalidParam("c deve ser > 0")
    box = box if isinstance(box, Box) else Box(*box)
    if not box.bounded:
        raise InvalidParam("summability_integral exige caixa limitada")
    cfg = cfg or SolverConfig()
    window = fld.restricted(time_interval=tuple(tspan), domain=box)
    tn, tw = _time_rule(fld, tspan)
    singular = _by_axis(fld.singular_coords, box)
    if weight == "distance_power" and gamma < 0:
        for i in range(box.dim):
            singular.setdefault(i, []).extend([box.lower[i], box.upper[i]])
    cuts = _by_axis(fld.kinks, box)

    def log_integral(rule):
        pts = rule.points()
        lw = rule.log_weights()
        terms = []
        for t, w in zip(tn, tw):
            norm = _jac_norm(fld, float(t), pts)
            lv = g.log_eval(c * norm) + _weight_log(weight, gamma, window, box, float(t), pts, cfg)
            terms.append(lv + lw + np.log(w))
        return log_sum(np.concatenate(terms))

    value, ladder = _ladder_integral(log_integral, box, singular, cuts, epsilons, "somabilidade")
    return (value, ladder) if with_ladder else value


def summability_profile(fld, g, c, box, times, epsilon=1e-12):
    """ψ(t) = ∫_box Θ(c‖D_xb(t,z)‖) dz em cada tempo."""
    box = box if isinstance(box, Box) else Box(*box)
    rule = _space_rule(box, _by_axis(fld.singular_coords, box), _by_axis(fld.kinks, box), epsilon)
    pts, lw = rule.points(), rule.log_weights()
    with np.errstate(over="ignore"):
        return np.array([np.exp(log_sum(g.log_eval(c * _jac_norm(fld, float(t), pts)) + lw))
                         for t in np.atleast_1d(times)])


def phi_profile(fld, g, c, box, times, scale=1.0, epsilon=1e-12):
    """φ(t) = scale·Θ⁻¹(Θ(C_Θ) ∨ ψ(t))."""
    psi = summability_profile(fld, g, c, box, times, epsilon)
    floor = g.log_eval(g.c_theta)
    with np.errstate(divide="ignore"):
        logs = np.log(psi)
    return np.array([scale * g.inverse_log(max(floor, v)) for v in logs])


def osgood_coefficient(fld, omega, box, times, nodes=64, margin=COEFFICIENT_MARGIN):
    """
    Estimativa de φ(t) = sup |b(t,x) − b(t,y)| / ω(|x−y|) na caixa: pares da
    grade uniforme mais pares próximos x, x + d·e_i com d geométrico.
    """
    box = box if isinstance(box, Box) else Box(*box)
    axes = [np.linspace(lo, hi, nodes if box.dim == 1 else max(8, nodes // 4))
            for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    steps = 10.0 ** -np.arange(1, 9)
    out = []
    for t in np.atleast_1d(times):
        vals = fld.eval_batch(float(t), pts)
        best = 0.0
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        dv = np.linalg.norm(vals[:, None, :] - vals[None, :, :], axis=-1)
        iu = np.triu_indices(len(pts), 1)
        om = np.array([omega(d) for d in dist[iu]])
        best = max(best, float(np.max(dv[iu] / om)))
        for i in range(box.dim):
            for d in steps:
                shifted = pts.copy()
                shifted[:, i] += d
                ok = box.contains(shifted)
                if not np.any(ok):
                    continue
                dv = np.linalg.norm(fld.eval_batch(float(t), shifted[ok]) - vals[ok], axis=-1)
                best = max(best, float(np.max(dv)) / omega(d))
        out.append(margin * best)
    return np.array(out)


# ===== Λ_p =====

def lambda_p(fld, p, box, tspan, mode="geometric", cfg=None, sup_b=None, epsilons=EPS_LADDER,
             with_ladder=False):
    """
    Λ_p = ∫_I∫_Ω max{ℓ^{n/(n−p)}, (dist(x,∂Ω)/sup|b|)^{n/(n−p)}} exp(ℓp²/(p−n)‖D_xb‖) dx ds
    (mode="geometric", p > 2n) ou Λ'_p com o fator (ℓ/ℓ(s,x))^{n/(p−n)}
    (mode="maximal_interval", p > n). sup|b| = 0 seleciona ℓ^{n/(n−p)}.
    """
    box = box if isinstance(box, Box) else Box(*box)
    if not box.bounded:
        raise InvalidParam("lambda_p exige caixa limitada")
    n = fld.dim
    p = float(p)
    if mode == "geometric" and not p > 2 * n:
        raise InvalidParam(f"Modo geométrico exige p > 2n = {2 * n}")
    if mode == "maximal_interval" and not p > n:
        raise InvalidParam(f"Modo maximal_interval exige p > n = {n}")
    if mode not in ("geometric", "maximal_interval"):
        raise InvalidParam(f"Modo desconhecido: {mode}")
    cfg = cfg or SolverConfig()
    t0, t1 = float(tspan[0]), float(tspan[1])
    ell = t1 - t0
    if not ell > 0:
        raise InvalidParam("tspan vazio")
    window = fld.restricted(time_interval=(t0, t1), domain=box)
    tn, tw = _time_rule(fld, (t0, t1))
    expo = n / (n - p)
    coef = ell * p * p / (p - n)
    singular = _by_axis(fld.singular_coords, box)
    cuts = _by_axis(fld.kinks, box)

    if mode == "geometric":
        sup = sup_speed(fld, box, tn) if sup_b is None else float(sup_b)
        if sup > 0:
            for i in range(n):
                singular.setdefault(i, []).extend([box.lower[i], box.upper[i]])
                reach = ell * sup
                cuts.setdefault(i, []).extend([box.lower[i] + reach, box.upper[i] - reach])

        def log_factor(t, pts):
            base = np.full(pts.shape[0], expo * np.log(ell))
            if sup <= 0:
                return base
            with np.errstate(divide="ignore"):
                dist_term = expo * (np.log(box.dist_to_boundary(pts)) - np.log(sup))
            return np.maximum(base, dist_term)
    else:
        def log_factor(t, pts):
            ell_sx = maximal_interval_lengths(window, t, pts, cfg)
            with np.errstate(divide="ignore"):
                return (n / (p - n)) * (np.log(ell) - np.log(ell_sx))

    def log_integral(rule):
        pts = rule.points()
        lw = rule.log_weights()
        terms = []
        for t, w in zip(tn, tw):
            lv = log_factor(float(t), pts) + coef * _jac_norm(fld, float(t), pts)
            terms.append(lv + lw + np.log(w))
        return log_sum(np.concatenate(terms))

    value, ladder = _ladder_integral(log_integral, box, singular, cuts, epsilons, f"Λ_{p:g}")
    return (value, ladder) if with_ladder else value


# ===== Norma de Luxemburg =====

def power_phi(p):
    return lambda t: np.asarray(t, dtype=float) ** p


def exp_phi():
    return lambda t: np.expm1(np.asarray(t, dtype=float))


def luxemburg_norm(values, weights, phi, cap=LUX_CAP, rel_tol=LUX_RTOL):
    """inf{λ > 0 : Σ w·Φ(f/λ) ≤ 1} por bissecção em log λ."""
    f = np.abs(np.asarray(values, dtype=float).ravel())
    w = np.asarray(weights, dtype=float).ravel()
    if f.shape != w.shape:
        raise InvalidParam("values e weights com formas diferentes")
    if not np.any(f > 0):
        return 0.0

    def modular(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(w * phi(f / lam)))

    if modular(cap) > 1.0:
        raise NoFiniteNorm(f"∫Φ(f/λ) > 1 até λ = {cap:g}")
    hi = cap
    lo = cap
    for _ in range(LUX_MAXITER * 10):
        lo *= 0.5
        if modular(lo) > 1.0:
            break
        hi = lo
    else:
        return 0.0
    lo_log, hi_log = np.log(lo), np.log(hi)
    for _ in range(LUX_MAXITER):
        mid = 0.5 * (lo_log + hi_log)
        if modular(np.exp(mid)) > 1.0:
            lo_log = mid
        else:
            hi_log = mid
        if hi_log - lo_log <= rel_tol * 0.25:
            break
    return float(np.exp(hi_log))
