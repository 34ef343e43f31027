#!/usr/bin/env python3
"""
Galeria de exemplos com fluxo em forma fechada.

Os campos daqui servem de oráculo exato para os demais módulos:
  - loglinear:  b(x) = x log(e/x) em (0, e), fluxo e(x/e)^k, k = exp(s−t)
  - sublog(α):  b(x) = βx log(1/x)(log log(1/x) − 1)^α em (0, e^{−e})
  - cantor(N):  folheação x = a_N(s) t² + s pela escada de Cantor
  - rotation, linear(λ), constant(c): controles suaves
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from errors import InvalidParam, OutOfRange, UnknownExample
from field import VectorField

# ===== CONFIG =====
E = np.e
SUBLOG_EDGE = np.exp(-np.e)
CANTOR_DEFAULT_LEVEL = 12
RESIDUAL_STEP = 1e-6
GALLERY_NAMES = ("sublog", "loglinear", "cantor", "rotation", "linear", "constant")


@dataclass(frozen=True)
class ExampleMetadata:
    wellposed: bool
    notes: str = ""
    sharp_sobolev_exponent: object = None  # (t, s) -> float | None


@dataclass(frozen=True)
class ExampleField:
    base: VectorField
    metadata: ExampleMetadata
    closed_flow: object = None             # (t, s, x) -> ponto
    closed_flow_derivative: object = None  # (t, s, x) -> D_xX
    relative_speed: object = None          # (t, log x) -> b(x)/x, para resíduos em escala log
    extras: dict = dc_field(default_factory=dict)

    @property
    def name(self):
        return self.base.name


# ===== Escada de Cantor =====

def cantor_staircase(s, level=CANTOR_DEFAULT_LEVEL):
    """
    Aproximação de nível N da escada de Cantor.

    Recursão a(x) = a(3x)/2 em [0, 1/3], 1/2 no terço médio,
    1/2 + a(3x−2)/2 em [2/3, 1], com a_0(x) = x.
    """
    if int(level) < 1:
        raise InvalidParam("level deve ser ≥ 1")
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(~np.isfinite(arr)):
        raise OutOfRange("cantor_staircase definida apenas em [0, 1]")
    out = _staircase(arr, int(level))
    return float(out) if np.ndim(out) == 0 else out


def _staircase(y, level):
    y = np.array(y, dtype=float, copy=True)
    res = np.zeros_like(y)
    done = np.zeros(y.shape, dtype=bool)
    scale = 1.0
    for _ in range(level):
        lo = y <= 1.0 / 3.0
        hi = y >= 2.0 / 3.0
        mid = ~lo & ~hi & ~done
        res = res + np.where(mid | (hi & ~done), 0.5 * scale, 0.0)
        done = done | mid
        y = np.where(lo, 3.0 * y, np.where(hi, 3.0 * y - 2.0, y))
        scale *= 0.5
    return res + np.where(done, 0.0, scale * y)


def _staircase_extended(s, level):
    s = np.asarray(s, dtype=float)
    return np.where(s <= 0.0, 0.0, np.where(s >= 1.0, 1.0, _staircase(np.clip(s, 0.0, 1.0), level)))


def cantor_leaf(t, x, level, amplitude=1.0, iterations=80):
    """Parâmetro σ da parábola x = c·a(σ)t² + σ que passa por (t, x)."""
    x = np.asarray(x, dtype=float)
    c = amplitude * float(t) ** 2
    sigma = np.where(x <= 0.0, x, x - c)
    inside = (x > 0.0) & (x < 1.0 + c)
    if c == 0.0 or not np.any(inside):
        return np.where(x >= 1.0 + c, x - c, sigma)
    lo = np.zeros_like(x)
    hi = np.ones_like(x)
    for _ in range(iterations):
        m = 0.5 * (lo + hi)
        g = c * _staircase_extended(m, level) + m
        below = g < x
        lo = np.where(below, m, lo)
        hi = np.where(below, hi, m)
    return np.where(inside, 0.5 * (lo + hi), sigma)


# ===== Construtores =====

def _k(t, s, rate=1.0):
    return np.exp(rate * (np.asarray(s, dtype=float) - np.asarray(t, dtype=float)))


def _loglinear():
    def b(t, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < E)
        xs = np.where(inside, x, 1.0)
        return np.where(inside, xs * np.log(E / xs), 0.0)

    def db(t, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < E)
        xs = np.where(inside, x, 1.0)
        return np.where(inside, np.log(1.0 / xs), 0.0)[..., None]

    def flow(t, s, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < E)
        xs = np.where(inside, x, 1.0)
        return np.where(inside, E * (xs / E) ** _k(t, s), x)

    def dflow(t, s, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < E)
        xs = np.where(inside, x, 1.0)
        k = _k(t, s)
        return np.where(inside, k * (xs / E) ** (k - 1.0), 1.0)

    def sharp(t, s):
        return 1.0 / (1.0 - np.exp(s - t)) if s < t else None

    base = VectorField(dim=1, evaluator=b, analytic_jacobian=db, singular_coords=((0, 0.0),),
                       kinks=((0, 1.0), (0, E)), name="loglinear")
    meta = ExampleMetadata(wellposed=True, sharp_sobolev_exponent=sharp,
                           notes="X(t,s,·) ∈ W^{1,q}_loc sse (exp(s−t)−1)q > −1")
    return ExampleField(base=base, metadata=meta, closed_flow=flow, closed_flow_derivative=dflow,
                        relative_speed=lambda t, logx: 1.0 - logx)


def _sublog(alpha=1.0, beta=1.0):
    alpha, beta = float(alpha), float(beta)
    if alpha < 1.0:
        raise InvalidParam("sublog exige α ≥ 1")
    if beta <= 0.0:
        raise InvalidParam("sublog exige β > 0")

    def parts(x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < SUBLOG_EDGE)
        xs = np.where(inside, x, SUBLOG_EDGE * 0.5)
        u = np.log(1.0 / xs)
        w = np.log(u) - 1.0
        return inside, xs, u, w

    def b(t, x):
        inside, xs, u, w = parts(x)
        return np.where(inside, beta * xs * u * w ** alpha, 0.0)

    def db(t, x):
        inside, xs, u, w = parts(x)
        val = beta * ((u - 1.0) * w ** alpha - alpha * w ** (alpha - 1.0))
        return np.where(inside, val, 0.0)[..., None]

    def rel_speed(t, logx):
        u = -np.asarray(logx, dtype=float)
        return beta * u * (np.log(u) - 1.0) ** alpha

    meta_kwargs = {}
    flow = dflow = None
    if alpha == 1.0:
        def flow(t, s, x):
            inside, xs, u, w = parts(x)
            k = _k(t, s, beta)
            return np.where(inside, np.exp(-E * (u / E) ** k), np.asarray(x, dtype=float))

        def dflow(t, s, x):
            inside, xs, u, w = parts(x)
            k = _k(t, s, beta)
            val = np.exp(-E * (u / E) ** k) * k * (u / E) ** (k - 1.0) / xs
            return np.where(inside, val, 1.0)

        meta_kwargs["sharp_sobolev_exponent"] = lambda t, s: 1.0 if s < t else None
        notes = "bem-posto; X(t,0,·) ∉ W^{1,p}_loc para p > 1 e t > 0"
    else:
        notes = "não bem-posto; γ1 ≡ 0 e γ2 resolvem γ' = b(γ), γ(0) = 0"

    base = VectorField(dim=1, evaluator=b, analytic_jacobian=db, singular_coords=((0, 0.0),),
                       kinks=((0, SUBLOG_EDGE),), name="sublog", params={"alpha": alpha, "beta": beta})
    meta = ExampleMetadata(wellposed=(alpha == 1.0), notes=notes, **meta_kwargs)
    return ExampleField(base=base, metadata=meta, closed_flow=flow, closed_flow_derivative=dflow,
                        relative_speed=rel_speed)


def _cantor(level=CANTOR_DEFAULT_LEVEL, amplitude=1.0):
    level = int(level)
    if level < 1:
        raise InvalidParam("cantor exige level ≥ 1")
    amplitude = float(amplitude)

    def b(t, x):
        sigma = cantor_leaf(t, x, level, amplitude)
        return 2.0 * amplitude * _staircase_extended(sigma, level) * float(t)

    def flow(t, s, x):
        sigma = cantor_leaf(s, x, level, amplitude)
        return amplitude * _staircase_extended(sigma, level) * float(t) ** 2 + sigma

    base = VectorField(dim=1, evaluator=b, jacobian_mode="central-difference", step=1e-7,
                       name="cantor", params={"level": level, "amplitude": amplitude})
    meta = ExampleMetadata(wellposed=True,
                           notes="integral curves x = a_N(s)t² + s; X(t,0,·) leva C em conjunto de medida positiva")
    return ExampleField(base=base, metadata=meta, closed_flow=flow,
                        extras={"staircase": lambda s: _staircase_extended(s, level)})


def _rotation():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])

    def b(t, x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)

    def db(t, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(rot, x.shape[:-1] + (2, 2)).copy()

    def flow(t, s, x):
        x = np.asarray(x, dtype=float)
        c, sn = np.cos(t - s), np.sin(t - s)
        return np.stack([c * x[..., 0] - sn * x[..., 1], sn * x[..., 0] + c * x[..., 1]], axis=-1)

    base = VectorField(dim=2, evaluator=b, analytic_jacobian=db, name="rotation")
    meta = ExampleMetadata(wellposed=True, notes="isometria; div b = 0",
                           sharp_sobolev_exponent=lambda t, s: None)
    return ExampleField(base=base, metadata=meta, closed_flow=flow,
                        closed_flow_derivative=lambda t, s, x: 1.0)


def _linear(lam=1.0, dim=1):
    lam, dim = float(lam), int(dim)
    if dim < 1:
        raise InvalidParam("dim deve ser ≥ 1")

    def b(t, x):
        return lam * np.asarray(x, dtype=float)

    def db(t, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(lam * np.eye(dim), x.shape[:-1] + (dim, dim)).copy()

    def flow(t, s, x):
        return np.asarray(x, dtype=float) * np.exp(lam * (t - s))

    base = VectorField(dim=dim, evaluator=b, analytic_jacobian=db, name="linear",
                       params={"lam": lam, "dim": dim})
    meta = ExampleMetadata(wellposed=True, notes="x' = λx",
                           sharp_sobolev_exponent=lambda t, s: None)
    return ExampleField(base=base, metadata=meta, closed_flow=flow,
                        closed_flow_derivative=lambda t, s, x: np.exp(lam * (t - s)),
                        relative_speed=lambda t, logx: lam)


def _constant(c=0.0, dim=None):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if dim is not None:
        c = np.broadcast_to(c, (int(dim),)).copy()
    n = c.size

    def b(t, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(c, x.shape).copy()

    def db(t, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, n))

    def flow(t, s, x):
        return np.asarray(x, dtype=float) + c * (t - s)

    base = VectorField(dim=n, evaluator=b, analytic_jacobian=db, name="constant",
                       params={"c": c.tolist()})
    meta = ExampleMetadata(wellposed=True, notes="deriva constante",
                           sharp_sobolev_exponent=lambda t, s: None)
    return ExampleField(base=base, metadata=meta, closed_flow=flow,
                        closed_flow_derivative=lambda t, s, x: 1.0)


_BUILDERS = {
    "sublog": (_sublog, {"alpha", "beta"}),
    "loglinear": (_loglinear, set()),
    "cantor": (_cantor, {"level", "amplitude"}),
    "rotation": (_rotation, set()),
    "linear": (_linear, {"lam", "dim"}),
    "constant": (_constant, {"c", "dim"}),
}


def make_example(name, **params):
    """Constrói um exemplo da galeria pelo nome e parâmetros."""
    if name not in _BUILDERS:
        raise UnknownExample(f"Exemplo desconhecido: '{name}' (opções: {', '.join(GALLERY_NAMES)})")
    builder, allowed = _BUILDERS[name]
    extra = set(params) - allowed
    if extra:
        raise InvalidParam(f"Parâmetros inválidos para '{name}': {sorted(extra)}")
    return builder(**params)


def example_parameters(name):
    """Parâmetros aceitos pelo construtor do exemplo."""
    if name not in _BUILDERS:
        raise UnknownExample(f"Exemplo desconhecido: '{name}' (opções: {', '.join(GALLERY_NAMES)})")
    return frozenset(_BUILDERS[name][1])


def example_from_spec(spec):
    """{'example': nome, ...params} → ExampleField."""
    spec = dict(spec)
    name = spec.pop("example", None)
    if name is None:
        raise InvalidParam("Especificação de campo sem 'example'")
    return make_example(name, **spec)


# ===== Não unicidade =====

@dataclass(frozen=True)
class TrajectoryOracle:
    name: str
    value: object       # t -> γ(t)
    log_value: object   # t -> log γ(t) (−inf onde γ = 0)

    def __call__(self, t):
        return self.value(t)


def nonuniqueness_pair(alpha):
    """
    Duas soluções de γ' = b(γ), γ(0) = 0 para sublog(α), α > 1.

    γ2(t) = exp(−exp(1 + ((α−1)t)^{−1/(α−1)})) para t > 0: com
    w = log log(1/γ) − 1 a EDO vira w' = −w^α, w(0⁺) = +∞.
    """
    alpha = float(alpha)
    if alpha <= 1.0:
        raise InvalidParam("nonuniqueness_pair exige α > 1")

    def log_g2(t):
        t = np.asarray(t, dtype=float)
        ts = np.where(t > 0.0, t, 1.0)
        with np.errstate(over="ignore"):
            w = ((alpha - 1.0) * ts) ** (-1.0 / (alpha - 1.0))
            val = -np.exp(1.0 + w)
        return np.where(t > 0.0, val, -np.inf)

    def g2(t):
        with np.errstate(under="ignore"):
            out = np.exp(log_g2(t))
        return float(out) if np.ndim(out) == 0 else out

    def g1(t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    gamma1 = TrajectoryOracle("gamma1", g1, lambda t: np.full_like(np.asarray(t, dtype=float), -np.inf))
    gamma2 = TrajectoryOracle("gamma2", g2, log_g2)
    return gamma1, gamma2


def ode_residual(gamma, fld, times, step=None):
    """|γ'(t) − b(t, γ(t))| com γ' por diferenças centrais (passo 1e-6·max(1,t))."""
    out = []
    for t in np.atleast_1d(times):
        h = step if step is not None else RESIDUAL_STEP * max(1.0, abs(float(t)))
        d = (gamma(t + h) - gamma(t - h)) / (2.0 * h)
        g = np.atleast_1d(gamma(t)).astype(float)
        out.append(float(np.max(np.abs(np.atleast_1d(d) - fld.eval_batch(float(t), g)))))
    return np.array(out)


def log_ode_residual(oracle, example, times, step=None):
    """
    Resíduo relativo em escala logarítmica: |(log γ)' − b(γ)/γ| / |b(γ)/γ|.

    Certifica γ mesmo onde γ(t) é menor que o menor float representável.
    """
    out = []
    for t in np.atleast_1d(times):
        t = float(t)
        h = step if step is not None else RESIDUAL_STEP * max(1.0, abs(t))
        f = [float(oracle.log_value(t + j * h)) for j in (-2, -1, 1, 2)]
        d = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
        r = float(example.relative_speed(t, float(oracle.log_value(t))))
        out.append(abs(d - r) / abs(r))
    return np.array(out)
