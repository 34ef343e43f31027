#!/usr/bin/env python3
"""
Representação uniforme de campos vetoriais b(t, x) dependentes do tempo.

Um VectorField é imutável: avaliação vetorizada sobre arrays (..., n),
jacobiano espacial analítico ou por diferenças centrais, divergente e
extensão de dimensão h(t, (x, y)) = (b(t, x), 0). Também lê e grava
campos amostrados em grade (CSV com cabeçalho JSON ou .npz).
"""

import json
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from errors import InvalidParam, NonFinite, OutOfDomain, StencilOutsideDomain

# ===== CONFIG =====
EPS_CBRT = np.cbrt(np.finfo(float).eps)
GRID_HEADER_TAG = "# roughflow-grid "


@dataclass(frozen=True)
class Box:
    """Caixa alinhada aos eixos; limites podem ser ±inf por eixo."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise InvalidParam("Caixa com limites de dimensões diferentes")
        if any(a > b for a, b in zip(lo, hi)):
            raise InvalidParam(f"Caixa vazia: {lo} > {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, a, b):
        return cls((a,), (b,))

    @classmethod
    def whole_space(cls, dim):
        return cls((-np.inf,) * dim, (np.inf,) * dim)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower) - margin
        hi = np.asarray(self.upper) + margin
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def dist_to_boundary(self, x):
        x = np.asarray(x, dtype=float)
        d = np.minimum(x - np.asarray(self.lower), np.asarray(self.upper) - x)
        return np.min(d, axis=-1)

    def clip(self, x):
        return np.clip(x, self.lower, self.upper)

    def volume(self):
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def extend(self, m):
        return Box(self.lower + (-np.inf,) * m, self.upper + (np.inf,) * m)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Lattice:
    """Grade tensorial de nós (um array de coordenadas por eixo)."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).ravel() for a in self.axes)
        for a in axes:
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise InvalidParam("Eixos da grade devem ser estritamente crescentes")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def cell_centers(cls, box, cells):
        """Centros de células de uma partição uniforme da caixa."""
        cells = np.broadcast_to(np.atleast_1d(cells), (box.dim,))
        axes = []
        for lo, hi, m in zip(box.lower, box.upper, cells):
            h = (hi - lo) / int(m)
            axes.append(lo + h * (np.arange(int(m)) + 0.5))
        return cls(tuple(axes))

    @classmethod
    def uniform(cls, box, nodes):
        nodes = np.broadcast_to(np.atleast_1d(nodes), (box.dim,))
        return cls(tuple(np.linspace(lo, hi, int(m)) for lo, hi, m in zip(box.lower, box.upper, nodes)))

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.size for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_widths(self):
        """Larguras das células duais (pontos médios entre nós)."""
        widths = []
        for a in self.axes:
            if a.size == 1:
                widths.append(np.ones(1))
                continue
            mid = 0.5 * (a[1:] + a[:-1])
            edges = np.concatenate([[a[0] - (mid[0] - a[0])], mid, [a[-1] + (a[-1] - mid[-1])]])
            widths.append(np.diff(edges))
        return widths

    def cell_volumes(self):
        mesh = np.meshgrid(*self.cell_widths(), indexing="ij")
        return np.prod(np.stack(mesh, axis=0), axis=0).ravel()


@dataclass(frozen=True)
class MatrixSample:
    entries: np.ndarray
    op_norm: float
    trace: float

    @classmethod
    def from_matrix(cls, m):
        m = np.atleast_2d(np.asarray(m, dtype=float))
        return cls(entries=m, op_norm=float(np.linalg.norm(m, 2)), trace=float(np.trace(m)))

    @property
    def det(self):
        return float(np.linalg.det(self.entries))


@dataclass(frozen=True)
class VectorField:
    """
    Campo b: I × Ω → Rⁿ.

    evaluator(t, X) recebe X com forma (..., n) e devolve a mesma forma.
    analytic_jacobian(t, X) devolve (..., n, n). singular_coords lista
    pares (eixo, coordenada) onde D_xb explode; kinks, onde ‖D_xb‖ não é
    suave; breakpoints são os instantes de descontinuidade em t.
    """

    dim: int
    evaluator: object
    time_interval: tuple = (-np.inf, np.inf)
    domain: Box = None
    jacobian_mode: str = "analytic"
    analytic_jacobian: object = None
    step: float = None
    singular_coords: tuple = ()
    kinks: tuple = ()
    breakpoints: tuple = ()
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidParam("dim deve ser ≥ 1")
        if self.domain is None:
            object.__setattr__(self, "domain", Box.whole_space(self.dim))
        if self.domain.dim != self.dim:
            raise InvalidParam("Domínio com dimensão incompatível")
        lo, hi = (float(v) for v in self.time_interval)
        if lo > hi:
            raise InvalidParam("Intervalo de tempo vazio")
        object.__setattr__(self, "time_interval", (lo, hi))
        if self.jacobian_mode not in ("analytic", "central-difference"):
            raise InvalidParam(f"jacobian_mode inválido: {self.jacobian_mode}")
        if self.jacobian_mode == "analytic" and self.analytic_jacobian is None:
            raise InvalidParam("Modo analítico exige analytic_jacobian")
        if self.step is not None and not self.step > 0:
            raise InvalidParam("Passo de diferenças deve ser positivo")
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))

    # --- avaliação em lote, sem checagem de região (usada pelos integradores) ---

    def eval_batch(self, t, x):
        v = np.asarray(self.evaluator(t, np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(v)):
            raise NonFinite(f"Campo '{self.name}' não finito em t={t}")
        return v

    def jacobian_batch(self, t, x):
        x = np.asarray(x, dtype=float)
        if self.jacobian_mode == "analytic":
            m = np.asarray(self.analytic_jacobian(t, x), dtype=float)
        else:
            m = _central_jacobian(self, t, x, self.step)
        if not np.all(np.isfinite(m)):
            raise NonFinite(f"Jacobiano de '{self.name}' não finito em t={t}")
        return m

    # --- avaliação pontual com checagem ---

    def check_region(self, t, x):
        lo, hi = self.time_interval
        if not lo <= t <= hi:
            raise OutOfDomain(f"t={t} fora de [{lo}, {hi}]")
        if not bool(self.domain.contains(x)):
            raise OutOfDomain(f"x={np.asarray(x).tolist()} fora do domínio de '{self.name}'")

    def eval(self, t, x):
        x = np.asarray(x, dtype=float).reshape(self.dim)
        self.check_region(t, x)
        return self.eval_batch(t, x)

    def jacobian(self, t, x):
        x = np.asarray(x, dtype=float).reshape(self.dim)
        self.check_region(t, x)
        if self.jacobian_mode == "central-difference":
            h = default_step(x) if self.step is None else self.step
            for i in range(self.dim):
                e = np.zeros(self.dim)
                e[i] = h
                if not (self.domain.contains(x + e) and self.domain.contains(x - e)):
                    raise StencilOutsideDomain(f"Estêncil em x={x.tolist()} sai do domínio (h={h:g})")
        return MatrixSample.from_matrix(self.jacobian_batch(t, x))

    def divergence(self, t, x):
        return self.jacobian(t, x).trace

    def restricted(self, time_interval=None, domain=None):
        """Mesmo campo com janela de tempo e/ou domínio reduzidos."""
        changes = {}
        if time_interval is not None:
            changes["time_interval"] = tuple(time_interval)
        if domain is not None:
            changes["domain"] = domain
        return replace(self, **changes)

    def singular_distance(self, x):
        """Distância de cada ponto à coordenada singular mais próxima (inf se não houver)."""
        x = np.atleast_2d(x)
        d = np.full(x.shape[0], np.inf)
        for axis, value in self.singular_coords:
            d = np.minimum(d, np.abs(x[:, axis] - value))
        return d

    def describe(self):
        return {"name": self.name, "dim": self.dim, "params": dict(self.params),
                "time_interval": list(self.time_interval), "domain": self.domain.to_dict()}


def default_step(x):
    """h = cbrt(eps) · max(1, |x|)."""
    return float(EPS_CBRT * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0))


def _central_jacobian(fld, t, x, step=None):
    x = np.asarray(x, dtype=float)
    n = fld.dim
    if step is None:
        h = EPS_CBRT * np.maximum(1.0, np.max(np.abs(x), axis=-1, keepdims=True))
    else:
        h = np.full(x.shape[:-1] + (1,), float(step))
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        fp = np.asarray(fld.evaluator(t, x + h * e), dtype=float)
        fm = np.asarray(fld.evaluator(t, x - h * e), dtype=float)
        cols.append((fp - fm) / (2.0 * h))
    return np.stack(cols, axis=-1)


def eval_field(fld, t, x):
    return fld.eval(t, x)


def jacobian(fld, t, x):
    return fld.jacobian(t, x)


def divergence(fld, t, x):
    return fld.divergence(t, x)


def divergence_by_differences(fld, t, x, h=1e-5):
    """Divergente por diferenças direcionais somadas, independente do jacobiano."""
    x = np.asarray(x, dtype=float).reshape(fld.dim)
    total = 0.0
    for i in range(fld.dim):
        e = np.zeros(fld.dim)
        e[i] = h
        total += (fld.eval_batch(t, x + e)[i] - fld.eval_batch(t, x - e)[i]) / (2.0 * h)
    return float(total)


def extend_dim(fld, m):
    """Campo (n+m)-dimensional h(t,(x,y)) = (b(t,x), 0)."""
    if int(m) < 1:
        raise InvalidParam("m deve ser ≥ 1")
    n, m = fld.dim, int(m)

    def evaluator(t, z):
        z = np.asarray(z, dtype=float)
        v = np.asarray(fld.evaluator(t, z[..., :n]), dtype=float)
        return np.concatenate([v, np.zeros(z.shape[:-1] + (m,))], axis=-1)

    def jac(t, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape[:-1] + (n + m, n + m))
        out[..., :n, :n] = fld.jacobian_batch(t, z[..., :n])
        return out

    return VectorField(
        dim=n + m,
        evaluator=evaluator,
        time_interval=fld.time_interval,
        domain=fld.domain.extend(m),
        jacobian_mode="analytic",
        analytic_jacobian=jac,
        step=fld.step,
        singular_coords=fld.singular_coords,
        kinks=fld.kinks,
        breakpoints=fld.breakpoints,
        name=f"{fld.name}+{m}",
        params={**fld.params, "extended_by": m},
    )


# ===== Campos amostrados em grade =====

def grid_field(lower, upper, shape, times, values, time_end=None, name="grid"):
    """
    Campo linear por partes no espaço e constante por partes no tempo.

    values tem forma (len(times), *shape, n); a fatia k vale em
    [times[k], times[k+1]).
    """
    lower, upper = tuple(np.atleast_1d(lower)), tuple(np.atleast_1d(upper))
    shape = tuple(int(s) for s in shape)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = len(shape)
    values = np.asarray(values, dtype=float).reshape((times.size,) + shape + (n,))
    if not np.all(np.isfinite(values)):
        raise NonFinite("Amostras do campo em grade não finitas")
    axes = tuple(np.linspace(lo, hi, s) for lo, hi, s in zip(lower, upper, shape))
    interps = [RegularGridInterpolator(axes, values[k], method="linear", bounds_error=False, fill_value=None)
               for k in range(times.size)]
    if time_end is not None:
        t_end = float(time_end)
    elif times.size > 1:
        t_end = float(times[-1] + (times[-1] - times[-2]))
    else:
        t_end = np.inf

    def evaluator(t, x):
        k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 1))
        x = np.asarray(x, dtype=float)
        return interps[k](x.reshape(-1, n)).reshape(x.shape)

    return VectorField(
        dim=n,
        evaluator=evaluator,
        time_interval=(float(times[0]), t_end),
        domain=Box(lower, upper),
        jacobian_mode="central-difference",
        step=0.25 * min((hi - lo) / max(s - 1, 1) for lo, hi, s in zip(lower, upper, shape)),
        breakpoints=tuple(times[1:]),
        name=name,
        params={"shape": list(shape)},
    )


def sample_field(fld, lattice, times):
    """Amostra um campo numa grade (formato de save_grid_field)."""
    pts = lattice.points()
    return np.stack([fld.eval_batch(float(t), pts).reshape(lattice.shape + (fld.dim,)) for t in np.atleast_1d(times)])


def save_grid_field(path, lower, upper, shape, times, values, time_end=None):
    path = Path(path)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    values = np.asarray(values, dtype=float)
    n = len(shape)
    header = {"dim": n, "lower": list(map(float, lower)), "upper": list(map(float, upper)),
              "shape": [int(s) for s in shape], "times": times.tolist(),
              "time_end": None if time_end is None else float(time_end)}
    if path.suffix == ".npz":
        np.savez(path, header=json.dumps(header, sort_keys=True), values=values)
        return path
    df = pd.DataFrame(values.reshape(-1, n), columns=[f"b{i}" for i in range(n)])
    with open(path, "w") as fh:
        fh.write(GRID_HEADER_TAG + json.dumps(header, sort_keys=True) + "\n")
        df.to_csv(fh, index=False)
    return path


def load_grid_field(path, name=None):
    path = Path(path)
    if path.suffix == ".npz":
        data = np.load(path)
        header = json.loads(str(data["header"]))
        values = data["values"]
    else:
        with open(path) as fh:
            first = fh.readline()
        if not first.startswith(GRID_HEADER_TAG):
            raise InvalidParam(f"Arquivo {path.name} sem cabeçalho de grade")
        header = json.loads(first[len(GRID_HEADER_TAG):])
        values = pd.read_csv(path, skiprows=1).to_numpy(dtype=float)
    return grid_field(header["lower"], header["upper"], header["shape"], header["times"], values,
                      time_end=header.get("time_end"), name=name or path.stem)
