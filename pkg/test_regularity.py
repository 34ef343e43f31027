#!/usr/bin/env python3
"""
Testes de regularidade: vereditos de refinamento, gradiente em grade,
densidades do pushforward, distorção e a medida da imagem do Cantor.
"""

import warnings

import numpy as np
import pytest

from errors import InconsistentGrids, InvalidParam, TooCoarse
from field import Box, Lattice
from flow import flow_map
from gallery import make_example
from regularity import (cantor_endpoints, cantor_image_measure, density_l1_gap, distortion_profile, grid_gradient,
                        hadamard_check, holder_study, orlicz_density_check, phi_alpha, pushforward_density, q_distortion,
                        refinement_verdict, sharp_exponent_table, sobolev_bound_check, sobolev_study)

HS = [0.5, 0.25, 0.125, 0.0625]


def test_veredito_de_refinamento():
    assert refinement_verdict(HS, [1.0, 1.0, 1.0, 1.0], [1.0] * 4)[1] == "bounded"
    slope, verdict, _ = refinement_verdict(HS, [1.0, 2.0, 3.0, 4.0], [1.0] * 4)
    assert verdict == "diverging" and slope < 0
    assert refinement_verdict(HS, [1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 0.5])[1] == "inconclusive"
    assert refinement_verdict(HS[:2], [1.0, 1.0], [1.0, 1.0])[1] == "inconclusive"


def test_gradiente_em_grade():
    lin = make_example("linear", lam=1.0).base
    fm = flow_map(lin, 1.0, 0.0, Lattice.uniform(Box.interval(0.0, 1.0), 11))
    grad = grid_gradient(fm)
    assert np.all(grad.valid)
    np.testing.assert_allclose(grad.matrices[:, 0, 0], np.e, rtol=1e-6)
    with pytest.raises(TooCoarse):
        grid_gradient(flow_map(lin, 1.0, 0.0, Lattice.uniform(Box.interval(0.0, 1.0), 2)))
    with pytest.raises(InvalidParam):
        grid_gradient(flow_map(lin, 1.0, 0.0, np.array([[0.1], [0.2], [0.3]])))


def test_densidade_do_pushforward_linear():
    """x' = x leva L¹⌞[0,1] em densidade 1/e sobre [0, e]."""
    lin = make_example("linear", lam=1.0).base
    src = Box.interval(0.0, 1.0)
    jac = pushforward_density(lin, 1.0, 0.0, src, "jacobian_inverse", cells=20)
    assert jac.total_mass == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(jac.density, np.exp(-1.0), rtol=1e-6)
    assert jac.edges[0][-1] == pytest.approx(np.e, rel=1e-6)
    assert jac.zero_jacobian == []
    target = Box((jac.edges[0][0],), (jac.edges[0][-1],))
    hist = pushforward_density(lin, 1.0, 0.0, src, "histogram", cells=20, target_box=target)
    assert hist.total_mass == pytest.approx(1.0, rel=1e-6)
    assert density_l1_gap(hist, jac) < 0.02
    with pytest.raises(InvalidParam):
        pushforward_density(lin, 1.0, 0.0, src, "kde")


def test_densidades_incompativeis():
    lin = make_example("linear", lam=1.0).base
    src = Box.interval(0.0, 1.0)
    a = pushforward_density(lin, 0.5, 0.0, src, "jacobian_inverse", cells=10)
    b = pushforward_density(lin, 0.5, 0.0, src, "jacobian_inverse", cells=12)
    with pytest.raises(InconsistentGrids):
        density_l1_gap(a, b)


def test_checagem_orlicz_de_densidade_uniforme():
    lin = make_example("linear", lam=1.0).base
    d = pushforward_density(lin, 1.0, 0.0, Box.interval(0.0, 1.0), "jacobian_inverse", cells=20)
    res = orlicz_density_check(d, 0.5)
    assert res["finite"]
    assert res["growth"] == pytest.approx(1.0, rel=1e-6)
    assert phi_alpha(1.0, 0.5) == pytest.approx(1.0)
    assert phi_alpha(np.e, 1.0) == pytest.approx(np.e ** 2)
    with pytest.raises(InvalidParam):
        orlicz_density_check(d, 1.5)


def test_distorcao_e_hadamard_na_rotacao():
    """Rotação é conforme: K_q = 1 e |J| = ‖D_xX‖² em todos os nós."""
    rot = make_example("rotation").base
    lat = Lattice.uniform(Box((-1.0, -1.0), (1.0, 1.0)), 5)
    fwd = flow_map(rot, 0.5, 0.0, lat, variational=True)
    bwd = flow_map(rot, 0.0, 0.5, lat, variational=True)
    np.testing.assert_allclose(q_distortion(fwd, 2.0), 1.0, rtol=1e-6)
    prof = distortion_profile(fwd, bwd, 2.0, p=4.0)
    assert prof["r"] == pytest.approx(1.0 / (0.5 + 1.0))
    assert np.isfinite(prof["forward_norm"])
    had = hadamard_check(fwd, tol=1e-6)
    assert had["holds"]
    assert had["equality_nodes"] == had["nodes"] == 25
    with pytest.raises(InconsistentGrids):
        distortion_profile(fwd, fwd, 2.0)


def test_extremos_do_cantor():
    left, right = cantor_endpoints(2)
    np.testing.assert_allclose(left, [0.0, 2 / 9, 6 / 9, 8 / 9])
    np.testing.assert_allclose(right - left, 1 / 9)


def test_medida_da_imagem_do_cantor():
    """|X(t,0,C)| = amplitude·t²."""
    for t in (0.5, 1.0, 2.0):
        r = cantor_image_measure(10, t, amplitude=0.5, via_flow=False)
        assert r["target"] == pytest.approx(0.5 * t * t)
        assert r["rel_error"] < 1e-9
    assert cantor_image_measure(4, 0.0)["measure_estimate"] == 0.0
    with pytest.raises(InvalidParam):
        cantor_image_measure(0, 1.0)
    with pytest.raises(InvalidParam):
        cantor_image_measure(4, 1.0, pushed_level=5)


def test_cantor_lacunas_finas_so_transladam():
    """Empurrar os extremos de qualquer nível M ≤ N dá a mesma estimativa."""
    full = cantor_image_measure(8, 1.0, via_flow=False, pushed_level=8)
    for m in (1, 3, 5):
        r = cantor_image_measure(8, 1.0, via_flow=False, pushed_level=m)
        assert r["pushed_level"] == m
        assert r["measure_estimate"] == pytest.approx(full["measure_estimate"], rel=1e-12)
        assert r["raw_measure"] == pytest.approx(full["raw_measure"], rel=1e-12)


def test_cantor_pelo_integrador_em_nivel_baixo():
    flow = cantor_image_measure(3, 1.0, amplitude=0.5, pushed_level=2)
    closed = cantor_image_measure(3, 1.0, amplitude=0.5, via_flow=False, pushed_level=2)
    assert flow["measure_estimate"] == pytest.approx(closed["measure_estimate"], rel=1e-3)


@pytest.mark.slow
def test_cantor_pelo_integrador():
    for t in (0.5, 1.0, 2.0):
        r = cantor_image_measure(10, t, amplitude=0.5)
        assert r["rel_error"] < 0.01


def test_tabela_de_expoentes_sem_expoente_critico():
    with pytest.raises(InvalidParam):
        sharp_exponent_table(make_example("cantor", level=3), [(1.0, 0.0)], Box.interval(0.0, 1.0))


def test_sobolev_study_parametros():
    fld = make_example("loglinear").base
    with pytest.raises(InvalidParam):
        sobolev_study(fld, 1.0, 0.0, Box.interval(0.0, 1.0), 0.5)
    with pytest.raises(InvalidParam):
        sobolev_study(fld, 1.0, 0.0, Box.interval(0.0, 1.0), 1.5, levels=2)



def test_holder_do_fluxo_linear():
    """X(1,0,x) = ex: quociente de Lipschitz constante, veredito bounded."""
    lin = make_example("linear", lam=1.0).base
    study = holder_study(lin, 1.0, 0.0, Box.interval(0.0, 1.0), 1.0)
    assert study.verdict == "bounded"
    assert study.levels[-1]["log_value"] == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(InvalidParam):
        holder_study(lin, 1.0, 0.0, Box.interval(0.0, 1.0), 0.0)

@pytest.mark.slow
def test_expoente_critico_do_loglinear():
    """X(1,0,·) ∈ W^{1,p} para p < q* ≈ 1.582 e fora para p > q*."""
    fld = make_example("loglinear").base
    box = Box.interval(0.0, 1.0)
    assert sobolev_study(fld, 1.0, 0.0, box, 1.4).verdict == "bounded"
    assert sobolev_study(fld, 1.0, 0.0, box, 1.75).verdict == "diverging"


@pytest.mark.slow
def test_cota_de_sobolev_por_lambda_p():
    """∫_I∫‖D_xX‖³ ≤ ℓ^{1/2}Λ_3 para ℓ = 0.05 no loglinear."""
    fld = make_example("loglinear").base
    rep = sobolev_bound_check(fld, 0.0, Box.interval(-1.0, 3.0), 3.0, (-0.025, 0.025))
    assert not rep["skipped"]
    assert rep["holds"]
    assert rep["lhs"] == pytest.approx(0.2, rel=0.05)


def test_phi_alpha_satura_sem_avisos():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        out = phi_alpha(np.array([0.0, 1.0, 1e300]), 2.0)
    assert out[0] == 0.0 and out[1] == 1.0
    assert np.isinf(out[2])
