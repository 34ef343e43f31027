#!/usr/bin/env python3
"""
Testes de transporte e continuidade pelas características.
"""

import numpy as np
import pandas as pd
import pytest

from errors import InvalidParam, SupportViolation
from field import Box, Lattice
from gallery import make_example
from pde import (BumpTest, DensityInit, SpatialBump, bump_library, continuity_mode_gap, continuity_series,
                 duality_gap, initial_from_spec, load_particles, particles_from_density, propagated_sobolev_exponent,
                 residual_converges, save_particles, save_transport, solve_continuity, solve_transport,
                 transport_sobolev_study, weak_residual)


def _ones(x):
    return np.ones(np.asarray(x).shape[0])


def test_derivadas_do_bump():
    bump = SpatialBump((0.0, 0.0), (1.0, 0.5))
    x, h = np.array([0.2, 0.1]), 1e-6
    numeric = [(bump(x + h * e) - bump(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(bump.grad(x), numeric, rtol=1e-6, atol=1e-10)
    test = BumpTest(SpatialBump((0.5,), (0.2,)))
    y = np.array([0.55])
    numeric_t = (test.value(0.4 + h, y) - test.value(0.4 - h, y)) / (2 * h)
    assert test.dt(0.4, y) == pytest.approx(numeric_t, rel=1e-6)
    with pytest.raises(InvalidParam):
        SpatialBump((0.0,), (-1.0,))


def test_biblioteca_de_bumps():
    tests = bump_library(Box.interval(0.0, 1.0), count=3)
    np.testing.assert_allclose([t.space.center[0] for t in tests], [0.25, 0.5, 0.75])
    assert tests[0].space.radius == (0.15,)
    assert tests[0].time_support() == pytest.approx((0.1, 0.9))


def test_dados_iniciais():
    bump = initial_from_spec({"kind": "bump", "center": [0.5], "radius": [0.2], "amplitude": 2.0})
    assert bump(np.array([[0.5]]))[0] == pytest.approx(2.0)
    gauss = initial_from_spec({"kind": "gaussian", "center": [0.3], "width": 0.1})
    assert gauss(np.array([[0.3]]))[0] == pytest.approx(1.0)
    ind = initial_from_spec({"kind": "indicator", "lower": [0.0], "upper": [1.0]})
    np.testing.assert_allclose(ind(np.array([[0.5], [1.5]])), [1.0, 0.0])
    assert ind.grad is None
    poly = initial_from_spec({"kind": "polynomial", "coeffs": [1.0, 2.0, 3.0]})
    assert poly(np.array([[2.0]]))[0] == pytest.approx(17.0)
    assert poly.grad(np.array([[2.0]]))[0, 0] == pytest.approx(14.0)
    with pytest.raises(InvalidParam):
        initial_from_spec({"kind": "sinc"})


def test_transporte_por_deriva_constante():
    """b ≡ c: u(t, x) = ū(x − ct)."""
    fld = make_example("constant", c=0.5).base
    u0 = initial_from_spec({"kind": "gaussian", "center": [0.3], "width": 0.1})
    lat = Lattice.uniform(Box.interval(-1.0, 2.0), 61)
    times = np.linspace(0.0, 1.0, 11)
    sol = solve_transport(fld, u0, times, lat)
    pts = lat.points()
    for k, t in enumerate(times):
        np.testing.assert_allclose(sol.values[k], u0(pts - 0.5 * t), rtol=1e-7, atol=1e-10)
    lo, hi = sol.value_range()
    assert lo >= 0.0 and hi <= 1.0 + 1e-12
    with pytest.raises(InvalidParam):
        solve_transport(fld, u0, times, pts)


def test_residuo_fraco_do_transporte():
    fld = make_example("constant", c=0.5).base
    u0 = initial_from_spec({"kind": "gaussian", "center": [0.3], "width": 0.1})
    box = Box.interval(-1.0, 2.0)
    sol = solve_transport(fld, u0, grid=Lattice.uniform(box, 401))
    res = weak_residual(fld, sol, bump_library(box, count=3))
    assert res.shape == (3,)
    assert np.max(res) < 1e-4


def test_residuo_fraco_com_campo_nulo():
    """b ≡ 0: o resíduo é a integral no tempo de ∂_tφ, nula pela simetria do bump."""
    fld = make_example("constant", c=0.0).base
    u0 = initial_from_spec({"kind": "bump", "center": [0.5], "radius": [0.3]})
    box = Box.interval(0.0, 1.0)
    sol = solve_transport(fld, u0, grid=Lattice.uniform(box, 101))
    assert np.max(weak_residual(fld, sol, bump_library(box, count=3))) < 1e-10


def test_suporte_fora_da_janela():
    fld = make_example("constant", c=0.0).base
    u0 = initial_from_spec({"kind": "gaussian", "center": [0.5]})
    sol = solve_transport(fld, u0, grid=Lattice.uniform(Box.interval(0.0, 1.0), 21))
    with pytest.raises(SupportViolation):
        weak_residual(fld, sol, [BumpTest(SpatialBump((0.9,), (0.3,)))])
    with pytest.raises(SupportViolation):
        weak_residual(fld, sol, [BumpTest(SpatialBump((0.5,), (0.1,)), t_center=0.9)])


def test_continuidade_particulas_conserva_massa():
    lin = make_example("linear", lam=1.0).base
    init = particles_from_density(_ones, Box.interval(0.0, 1.0), per_axis=100)
    assert init.total_mass == pytest.approx(1.0)
    out = solve_continuity(lin, init, 1.0)
    assert out.total_mass == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(out.positions, init.positions * np.e, rtol=1e-7)
    assert out.provenance["pushed_from"] == 0.0
    with pytest.raises(InvalidParam):
        solve_continuity(lin, DensityInit(_ones, Box.interval(0.0, 1.0)), 1.0, mode="particle")
    with pytest.raises(InvalidParam):
        solve_continuity(lin, init, 1.0, mode="spectral")


def test_continuidade_modo_densidade():
    """ρ̄ = 1 em [0, 1] com x' = x: ρ_1 = 1/e em [0, e]."""
    lin = make_example("linear", lam=1.0).base
    init = DensityInit(_ones, Box.interval(0.0, 1.0))
    dens = solve_continuity(lin, init, 1.0, mode="density", cells=20)
    assert dens.total_mass == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(dens.density, np.exp(-1.0), rtol=1e-6)
    assert continuity_mode_gap(lin, init, 1.0, cells=20) < 0.01
    with pytest.raises(InvalidParam):
        continuity_series(lin, init, mode="density")


def test_residuo_fraco_das_particulas():
    lin = make_example("linear", lam=1.0).base
    init = particles_from_density(_ones, Box.interval(0.0, 1.0), per_axis=100)
    series = continuity_series(lin, init)
    assert series.positions.shape == (81, 100, 1)
    res = weak_residual(lin, series, bump_library(Box.interval(0.0, np.e), count=3))
    assert np.max(res) < 1e-3
    short = continuity_series(lin, init, times=np.linspace(0.0, 0.5, 11))
    with pytest.raises(SupportViolation):
        weak_residual(lin, short, bump_library(Box.interval(0.0, 1.0), count=1))


def test_convergencia_do_residuo():
    assert residual_converges([1e-3, 1e-4], [4e-4, 1e-11])
    assert residual_converges([1.0], [0.375]) and residual_converges([1.0], [0.625])
    assert residual_converges([1e-3], [0.6e-3])
    assert not residual_converges([1e-3], [0.65e-3])
    assert not residual_converges([1e-3], [0.1e-3])
    assert not residual_converges([1e-3], [0.35e-3])
    assert residual_converges([0.0], [0.0])


def test_particulas_em_csv(tmp_path):
    init = particles_from_density(_ones, Box((0.0, 0.0), (1.0, 1.0)), per_axis=4)
    path = save_particles(init, tmp_path / "particulas.csv")
    back = load_particles(path)
    np.testing.assert_allclose(back.positions, init.positions)
    np.testing.assert_allclose(back.weights, init.weights)
    pd.DataFrame({"a": [1.0], "b": [2.0]}).to_csv(tmp_path / "ruim.csv", index=False)
    with pytest.raises(InvalidParam):
        load_particles(tmp_path / "ruim.csv")


def test_salvar_transporte(tmp_path):
    fld = make_example("constant", c=0.5).base
    u0 = initial_from_spec({"kind": "gaussian", "center": [0.3]})
    sol = solve_transport(fld, u0, [0.0, 0.5], Lattice.uniform(Box.interval(0.0, 1.0), 5))
    manifest = save_transport(sol, tmp_path)
    assert manifest.exists()
    assert len(list(tmp_path.glob("transport_*.csv"))) == 2
    assert len(sol.to_frame()) == 10


def test_expoente_de_propagacao():
    assert propagated_sobolev_exponent(3.0, 2.0, 1) == pytest.approx(12.0 / 13.0)
    with pytest.raises(InvalidParam):
        propagated_sobolev_exponent(1.0, 2.0, 1)
    with pytest.raises(InvalidParam):
        propagated_sobolev_exponent(3.0, 0.5, 1)
    ind = initial_from_spec({"kind": "indicator", "lower": [0.0], "upper": [1.0]})
    with pytest.raises(InvalidParam):
        transport_sobolev_study(make_example("loglinear").base, ind, 1.0, Box.interval(0.0, 1.0), 0.9)


def test_dualidade_transporte_continuidade():
    """div b = 0 ⇒ u = ρ; para x' = x a razão é J = e^{−1}."""
    u0 = initial_from_spec({"kind": "gaussian", "center": [0.3, 0.0], "width": 0.3})
    lat = Lattice.uniform(Box((-1.0, -1.0), (1.0, 1.0)), 9)
    assert duality_gap(make_example("rotation").base, u0, 1.0, lat) == pytest.approx(0.0, abs=1e-12)
    u1 = initial_from_spec({"kind": "gaussian", "center": [0.3], "width": 0.3})
    gap = duality_gap(make_example("linear", lam=1.0).base, u1, 1.0, Lattice.uniform(Box.interval(0.0, 1.0), 11))
    assert gap == pytest.approx(1.0 - np.exp(-1.0), rel=1e-7)
