#!/usr/bin/env python3
"""
Testes das regras de quadratura e do veredito por escada.
"""

import numpy as np
import pytest

from errors import InvalidParam, QuadratureFailure
from field import Box
from quadrature import (adaptive_quad, geometric_tail, graded_axis, graded_rule, ladder_verdict, log_sum,
                        pairwise_sum, panel_axis)


def test_eixo_uniforme_sem_singularidade():
    rule = graded_axis(0.0, 2.0, level=1)
    assert not rule.graded
    assert rule.nodes.size == 32
    assert np.sum(np.exp(rule.log_weights)) == pytest.approx(2.0)


def test_eixo_graduado_integra_singularidade_integravel():
    """∫_0^1 x^{−1/2} = 2 na coordenada logarítmica, melhorando a cada nível."""
    errors = []
    for level in range(4):
        rule = graded_axis(0.0, 1.0, singular=(0.0,), level=level)
        approx = np.sum(np.exp(rule.log_weights) * rule.nodes ** -0.5)
        errors.append(abs(approx - 2.0))
    assert errors[-1] < 1e-3
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_regra_tensorial():
    box = Box((0.0, 0.0), (1.0, 2.0))
    rule = graded_rule(box, singular_coords=((0, 0.0),), level=0)
    assert rule.axes[0].graded and not rule.axes[1].graded
    assert rule.points().shape == (int(np.prod(rule.shape)), 2)
    with pytest.raises(InvalidParam):
        graded_rule(Box.whole_space(1))


def test_paineis_gauss_com_singularidade_logaritmica():
    x, w = panel_axis(0.0, 1.0, singular=(0.0,), epsilon=0.0)
    assert np.sum(w * np.log(x)) == pytest.approx(-1.0, abs=1e-9)
    x, w = panel_axis(-1.0, 1.0, cuts=(0.0,))
    assert np.sum(w * np.abs(x)) == pytest.approx(1.0, abs=1e-13)


def test_log_sum_e_soma_em_arvore():
    assert log_sum([0.0, 0.0]) == pytest.approx(np.log(2.0))
    assert log_sum([-np.inf, 0.0]) == pytest.approx(0.0)
    assert log_sum([-np.inf]) == -np.inf
    assert pairwise_sum([1.0, 2.0, 3.0, 4.0, 5.0]) == 15.0
    assert pairwise_sum([]) == 0.0


def test_veredito_da_escada():
    assert ladder_verdict([1.0, 2.0, 3.0, 4.0]) == "diverging"
    assert ladder_verdict([1.0, 1.5, 1.55, 1.555]) == "converging"
    assert ladder_verdict([0.0, 1.0, 1.3, 1.45]) == "inconclusive"
    assert ladder_verdict([1.0, 2.0]) == "inconclusive"
    assert ladder_verdict([1.0, 2.0, np.inf]) == "diverging"


def test_cauda_geometrica():
    partial = [1.0, 1.5, 1.75, 1.875]
    assert partial[-1] + geometric_tail(partial) == pytest.approx(2.0)
    assert geometric_tail([1.0, 2.0, 3.0]) == 0.0


def test_quadratura_adaptativa():
    val, err = adaptive_quad(lambda x: x * x, 0.0, 1.0)
    assert val == pytest.approx(1.0 / 3.0)
    assert err < 1e-10
    with pytest.raises(QuadratureFailure) as info:
        adaptive_quad(lambda x: 1.0 / x, 0.0, 1.0)
    assert info.value.partial is not None
