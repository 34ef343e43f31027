#!/usr/bin/env python3
"""
Testes do integrador de fluxo, da equação variacional e do funil de unicidade.
"""

import numpy as np
import pytest

from errors import DomainExit, InvalidParam
from field import Box, Lattice, VectorField
from flow import (SolverConfig, flow_lattice, flow_map, flow_point, funnel_envelope, gronwall_check,
                  integrate_trajectory, interval_length_bound, inverse_flow_residual, maximal_interval_length,
                  save_flow_grid, semigroup_residual, sup_speed, tolerance_convergence, uniqueness_funnel,
                  variational_solve)
from gallery import example_from_spec, make_example
from presets import ELL_CASES


def _bounded_linear(time_interval=(-np.inf, np.inf)):
    return VectorField(dim=1, evaluator=lambda t, x: np.asarray(x, dtype=float),
                       analytic_jacobian=lambda t, x: np.ones(np.shape(x) + (1,)),
                       domain=Box.interval(-1.0, 1.0), time_interval=time_interval, name="lin-box")


def test_configuracao_do_solver():
    with pytest.raises(InvalidParam):
        SolverConfig(rel_tol=0.5)
    with pytest.raises(InvalidParam):
        SolverConfig(method_order=4)
    cfg = SolverConfig()
    assert cfg.scaled(1e10).rel_tol == 1e-2
    assert cfg.fingerprint() == cfg.with_workers(8).fingerprint()
    assert cfg.fingerprint() != cfg.scaled(10.0).fingerprint()


def test_trajetoria_linear():
    lin = make_example("linear", lam=1.0).base
    traj = integrate_trajectory(lin, 0.0, [0.5], 1.0)
    assert traj.reached
    assert traj.end_state[0] == pytest.approx(0.5 * np.e, rel=1e-7)
    assert traj(0.5)[0] == pytest.approx(0.5 * np.exp(0.5), rel=1e-6)


def test_saida_pelo_espaco():
    """x' = x a partir de 0.5 sai de [−1, 1] em t = log 2."""
    traj = integrate_trajectory(_bounded_linear(), 0.0, [0.5], 2.0)
    assert traj.exit == "hit_space_boundary"
    assert traj.end_time == pytest.approx(np.log(2.0), abs=1e-6)
    assert traj.ell == pytest.approx(np.log(2.0), abs=1e-6)
    with pytest.raises(DomainExit):
        flow_point(_bounded_linear(), 2.0, 0.0, [0.5])


def test_saida_pelo_tempo():
    traj = integrate_trajectory(_bounded_linear((0.0, 0.5)), 0.0, [0.1], 2.0)
    assert traj.exit == "hit_time_boundary"
    assert traj.end_time == pytest.approx(0.5)


def test_intervalo_maximal():
    fld = _bounded_linear((0.0, 10.0))
    assert maximal_interval_length(fld, 0.0, [0.5]) == pytest.approx(np.log(2.0), abs=1e-6)


def test_cota_inferior_de_ell():
    fld = make_example("linear", lam=1.0).base.restricted((0.0, 1.0), Box.interval(-1.0, 1.0))
    assert sup_speed(fld, fld.domain, [0.0, 1.0]) == pytest.approx(1.0)
    rep = interval_length_bound(fld, 50, np.random.default_rng(3))
    assert rep.violations == 0
    assert rep.worst_ratio >= 0.9
    assert np.all(rep.lengths <= 1.0 + 1e-9)
    assert list(rep.to_frame().columns) == ["s", "x0", "ell", "bound", "holds"]
    # sup|b| subestimado de propósito: a cota passa a exigir ℓ(s, x) = |I|
    loose = interval_length_bound(fld, 50, np.random.default_rng(3), sup_b=1e-3)
    assert loose.violations > 0
    with pytest.raises(InvalidParam):
        interval_length_bound(make_example("linear").base, 10)


@pytest.mark.slow
@pytest.mark.parametrize("field_spec, window, box", ELL_CASES)
def test_cota_de_ell_na_galeria(field_spec, window, box):
    fld = example_from_spec(field_spec).base.restricted(tuple(window), Box(*box))
    rep = interval_length_bound(fld, 500, np.random.default_rng(0))
    assert rep.violations == 0


def test_erro_cai_com_a_tolerancia_no_loglinear():
    ex = make_example("loglinear")
    pts = np.linspace(0.2, 2.5, 12)[:, None]
    study = tolerance_convergence(ex.base, ex.closed_flow, [0.5, 1.0], [0.0], pts)
    assert study.errors.shape == (2, 1, 12)
    assert study.max_error < 1e-6
    assert study.max_error_halved < study.max_error
    assert study.expected_ratio == pytest.approx(0.5 ** (5.0 / 6.0))
    assert study.consistent


def test_convergencia_no_piso_de_erro():
    """Deriva constante é integrada exatamente; o erro fica no piso e a razão não importa."""
    ex = make_example("constant", c=0.5)
    study = tolerance_convergence(ex.base, ex.closed_flow, [1.0], [0.0], [[0.1], [0.7]])
    assert study.max_error_halved <= 1e-13
    assert study.consistent


def test_mapa_de_fluxo_loglinear_contra_fechado():
    ex = make_example("loglinear")
    pts = np.linspace(0.05, 2.6, 20)[:, None]
    fm = flow_map(ex.base, 1.0, 0.0, pts)
    assert np.all(fm.valid)
    err = np.abs(fm.images[:, 0] - ex.closed_flow(1.0, 0.0, pts[:, 0]))
    assert np.max(err) < 1e-6


def test_fluxo_para_tras_e_inversa():
    ex = make_example("loglinear")
    pts = np.linspace(0.2, 2.4, 12)[:, None]
    fm = flow_map(ex.base, -0.5, 0.0, pts)
    np.testing.assert_allclose(fm.images[:, 0], ex.closed_flow(-0.5, 0.0, pts[:, 0]), rtol=1e-6)
    assert inverse_flow_residual(ex.base, 0.7, 0.0, pts) < 1e-6


def test_nos_fora_do_dominio_ficam_nan():
    fm = flow_map(_bounded_linear(), 1.0, 0.0, np.array([[0.1], [0.9], [2.0]]))
    assert fm.status[0] == "reached_target"
    assert fm.status[1] == "hit_space_boundary" and np.isnan(fm.images[1, 0])
    assert fm.status[2] == "hit_space_boundary" and np.isnan(fm.images[2, 0])


def test_resultado_independe_de_workers():
    rot = make_example("rotation").base
    lat = Lattice.uniform(Box((-1.0, -1.0), (1.0, 1.0)), 9)
    one = flow_map(rot, 1.0, 0.0, lat, SolverConfig(batch_size=16, workers=1))
    four = flow_map(rot, 1.0, 0.0, lat, SolverConfig(batch_size=16, workers=4))
    assert np.array_equal(one.images, four.images)


def test_flow_lattice_formato():
    lin = make_example("linear", lam=-1.0).base
    out = flow_lattice(lin, [0.0, 0.5, 1.0], [0.0, 1.0], [[1.0], [2.0]])
    assert out.shape == (3, 2, 2, 1)
    assert out[2, 0, 1, 0] == pytest.approx(2.0 * np.exp(-1.0), rel=1e-7)
    assert out[0, 1, 0, 0] == pytest.approx(np.e, rel=1e-7)


def test_semigrupo_rotacao():
    rot = make_example("rotation").base
    assert semigroup_residual(rot, 0.0, 0.4, 1.3, [0.6, -0.2]) < 1e-7
    assert semigroup_residual(rot, 0.2, 0.2, 0.2, [0.6, -0.2]) == 0.0


def test_variacional_liouville_e_gronwall():
    """Para x' = x: Y = det Y = exp ∫div b = e^{t−s}, e Gronwall vale com igualdade."""
    lin = make_example("linear", lam=1.0).base
    traj = integrate_trajectory(lin, 0.0, [0.3], 1.0)
    var = variational_solve(lin, traj, [1.0])
    assert var.matrices[-1, 0, 0] == pytest.approx(np.e, rel=1e-7)
    assert var.jac_det[-1] == pytest.approx(var.jac_liouville[-1], rel=1e-7)
    rep = gronwall_check(lin, traj, var)
    assert rep.holds
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-6)
    own = gronwall_check(lin, traj)
    assert own.lhs == pytest.approx(np.e, rel=1e-7)
    assert own.holds


def test_mapa_com_variacional_rotacao():
    rot = make_example("rotation").base
    fm = flow_map(rot, 1.0, 0.0, np.array([[0.5, 0.0], [0.0, -0.3]]), variational=True)
    np.testing.assert_allclose(fm.jac, 1.0, rtol=1e-7)
    np.testing.assert_allclose(fm.liouville_jac, 1.0, rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(fm.dx_matrices, 2, axis=(1, 2)), 1.0, rtol=1e-7)


def test_salvar_mapa(tmp_path):
    lin = make_example("linear").base
    fm = flow_map(lin, 1.0, 0.0, Lattice.uniform(Box.interval(0.0, 1.0), 5), variational=True)
    path = save_flow_grid(fm, tmp_path / "mapa.csv", {"example": "linear"}, SolverConfig())
    assert path.exists() and path.with_suffix(".json").exists()
    assert {"x0", "X0", "D00", "jac", "liouville_jac", "status"} <= set(fm.to_frame().columns)


def test_envelope_do_funil():
    assert funnel_envelope(lambda d: d, 1e-3, 1.0) == pytest.approx(1e-3 * np.e, rel=1e-7)
    assert funnel_envelope(lambda d: d, 0.0, 1.0) == 0.0


def test_funil_da_rotacao():
    """Numa isometria o espalhamento é δ, abaixo do envelope δe^{∫φ}."""
    rot = make_example("rotation").base
    reports = uniqueness_funnel(rot, 0.0, [0.5, 0.0], [1e-2, 1e-3], 1.0, lambda d: d, 1.0, directions=16)
    for r in reports:
        assert r.holds
        assert r.max_spread == pytest.approx(r.delta, rel=1e-4)
