#!/usr/bin/env python3
"""
Testes dos gauges de Orlicz, do módulo ω e das integrais de somabilidade.
"""

import warnings

import numpy as np
import pytest

from errors import (DivergentIntegral, InvalidParam, InverseDomain, NoFiniteNorm, OutOfDomain, Overflow)
from field import Box
from gallery import make_example
from orlicz import (exp_phi, exponential_gauge, gauge_from_spec, h_factor, iterated_exp, iterated_log,
                    lambda_p, log_product, luxemburg_norm, modulus_omega, osgood_modulus_integral, power_gauge,
                    power_phi, subexp_gauge, summability_integral, validate_gauge)


def test_exponenciais_e_logaritmos_iterados():
    assert iterated_exp(2, 0.0) == pytest.approx(np.e)
    assert iterated_log(2, np.exp(np.e)) == pytest.approx(1.0)
    assert log_product(2, np.exp(np.e)) == pytest.approx(np.e)
    with pytest.raises(Overflow):
        iterated_exp(3, 10.0)
    with pytest.raises(OutOfDomain):
        iterated_log(2, 1.0)
    with pytest.raises(InvalidParam):
        iterated_exp(0, 1.0)


def test_h_factor_e_a_derivada_logaritmica():
    """Θ'/Θ da família E_{k,β} bate com a derivada numérica de log Θ."""
    g = subexp_gauge(2, 0.5, s_bar=20.0, c_theta=1e3)
    s, h = 1e4, 1e-2
    numeric = (g.log_eval(s + h) - g.log_eval(s - h)) / (2 * h)
    assert g.rate(s) == pytest.approx(numeric, rel=1e-6)
    assert h_factor(1, 1.0, s) == pytest.approx((np.log(s) - 1.0) / np.log(s) ** 2)


def test_gauge_exponencial():
    g = exponential_gauge(1.0)
    assert g.c_theta == 2.0
    assert g.eval(2.0) == pytest.approx(np.exp(2.0))
    assert g.inverse(np.exp(2.0)) == pytest.approx(2.0)
    with pytest.raises(InverseDomain):
        g.inverse(0.5)
    with pytest.raises(InverseDomain):
        g.inverse(0.0)
    with pytest.raises(Overflow):
        g.eval(1e4)


def test_gauge_potencia():
    g = power_gauge(2.0)
    assert g.c_theta == 1.0
    assert g.inverse(9.0) == pytest.approx(3.0)


def test_gauge_por_especificacao():
    assert gauge_from_spec({"family": "exponential", "beta": 2.0}).params == {"beta": 2.0}
    with pytest.raises(InvalidParam):
        gauge_from_spec({"family": "gaussian"})
    with pytest.raises(InvalidParam):
        gauge_from_spec({"family": "power", "q": 2.0})


@pytest.mark.parametrize("spec, expected", [
    ({"family": "subexp", "k": 1, "beta": 1.0}, "diverging"),
    ({"family": "subexp", "k": 1, "beta": 1.5}, "converging"),
    ({"family": "exponential", "beta": 1.0}, "diverging"),
    ({"family": "power", "p": 2.0}, "converging"),
])
def test_dicotomia_de_osgood(spec, expected):
    verdict = validate_gauge(gauge_from_spec(spec))
    assert verdict.osgood_integral["verdict"] == expected
    assert verdict.submultiplicative_ok


def test_validate_gauge_exige_escada_crescente():
    with pytest.raises(InvalidParam):
        validate_gauge(exponential_gauge(), s_ladder=(1e3, 1e6, 1e9))
    with pytest.raises(InvalidParam):
        validate_gauge(exponential_gauge(), alpha=3.0, dim=2)


def test_modulo_omega_exponencial():
    """Com Θ = exp e α = 2: ω(δ) = δ·max(C_Θ, 2 log(1/δ))."""
    g = exponential_gauge(1.0)
    assert modulus_omega(g, 2.0, 1e-4) == pytest.approx(1e-4 * 2.0 * np.log(1e4))
    assert modulus_omega(g, 2.0, 0.9) == pytest.approx(0.9 * 2.0)
    with pytest.raises(InvalidParam):
        modulus_omega(g, 1.0, 1e-4)


def test_integral_de_osgood_do_modulo():
    assert osgood_modulus_integral(exponential_gauge(1.0), 2.0)["verdict"] == "diverging"
    assert osgood_modulus_integral(power_gauge(2.0), 2.0)["verdict"] == "converging"


def test_somabilidade_sem_singularidade():
    """∫_0^1∫_0^1 exp(‖D_xb‖) = e para b(x) = x."""
    lin = make_example("linear", lam=1.0).base
    val = summability_integral(lin, exponential_gauge(1.0), 1.0, Box.interval(0.0, 1.0), (0.0, 1.0))
    assert val == pytest.approx(np.e, rel=1e-12)


def test_somabilidade_loglinear():
    """Θ(c|log x|) = x^{−c}: finito para c = 1/2 (valor 2), divergente para c = 3/2."""
    fld = make_example("loglinear").base
    g = exponential_gauge(1.0)
    val, ladder = summability_integral(fld, g, 0.5, Box.interval(0.0, 1.0), (0.0, 1.0), with_ladder=True)
    assert val == pytest.approx(2.0, rel=1e-6)
    assert len(ladder) == 4
    with pytest.raises(DivergentIntegral) as info:
        summability_integral(fld, g, 1.5, Box.interval(0.0, 1.0), (0.0, 1.0))
    assert len(info.value.ladder) == 4


def test_lambda_p_finito_e_divergente():
    """Λ_3 do loglinear: finito para ℓ = 0.05, divergente para ℓ = 0.3."""
    fld = make_example("loglinear").base
    box = Box.interval(-1.0, 3.0)
    value = lambda_p(fld, 3.0, box, (-0.025, 0.025))
    assert np.isfinite(value) and value > 0
    with pytest.raises(DivergentIntegral):
        lambda_p(fld, 3.0, box, (-0.15, 0.15))
    with pytest.raises(InvalidParam):
        lambda_p(fld, 1.5, box, (-0.025, 0.025))


def test_norma_de_luxemburg():
    w = np.full(4, 0.25)
    assert luxemburg_norm(np.ones(4), w, power_phi(2.0)) == pytest.approx(1.0, rel=1e-8)
    assert luxemburg_norm(np.full(4, 3.0), w, power_phi(2.0)) == pytest.approx(3.0, rel=1e-8)
    assert luxemburg_norm(np.zeros(4), w, power_phi(2.0)) == 0.0
    assert luxemburg_norm(np.ones(4), w, exp_phi()) == pytest.approx(1.0 / np.log(2.0), rel=1e-8)
    with pytest.raises(NoFiniteNorm):
        luxemburg_norm(np.full(4, 1e15), w, exp_phi())


def test_taxa_do_gauge_em_zero_sem_avisos():
    g = power_gauge(2.0, c_theta=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        np.testing.assert_allclose(g.rate(np.array([0.0, 2.0])), [0.0, 1.0])
