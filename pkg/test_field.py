#!/usr/bin/env python3
"""
Testes de field.py: caixas, grades, avaliação e jacobianos de VectorField.
"""

import numpy as np
import pytest

from errors import InvalidParam, NonFinite, OutOfDomain, StencilOutsideDomain
from field import (Box, Lattice, VectorField, divergence_by_differences, extend_dim, grid_field,
                   load_grid_field, save_grid_field)
from gallery import make_example


def _linear_1d(domain=None, lam=1.0):
    return VectorField(dim=1, evaluator=lambda t, x: lam * np.asarray(x),
                       analytic_jacobian=lambda t, x: np.full(np.shape(x) + (1,), lam),
                       domain=domain, name="lin")


def test_box_basico():
    """Caixa vazia é rejeitada; contains e dist_to_boundary por ponto."""
    with pytest.raises(InvalidParam):
        Box((1.0,), (0.0,))
    b = Box((0.0, 0.0), (2.0, 1.0))
    assert b.dim == 2 and b.bounded
    assert b.volume() == pytest.approx(2.0)
    assert list(b.contains([[0.5, 0.5], [2.5, 0.5]])) == [True, False]
    assert b.dist_to_boundary([0.5, 0.25]) == pytest.approx(0.25)
    assert not Box.whole_space(3).bounded


def test_lattice_cell_centers_cobre_a_caixa():
    """Volumes das células duais somam o volume da caixa."""
    box = Box((0.0, -1.0), (1.0, 1.0))
    lat = Lattice.cell_centers(box, (10, 8))
    assert lat.shape == (10, 8)
    assert lat.points().shape == (80, 2)
    assert np.sum(lat.cell_volumes()) == pytest.approx(box.volume())


def test_lattice_rejeita_eixo_nao_crescente():
    with pytest.raises(InvalidParam):
        Lattice((np.array([0.0, 1.0, 0.5]),))


def test_jacobiano_central_bate_com_analitico():
    """Diferenças centrais reproduzem o jacobiano analítico da rotação."""
    rot = make_example("rotation").base
    cd = VectorField(dim=2, evaluator=rot.evaluator, jacobian_mode="central-difference", name="rot-cd")
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(cd.jacobian(0.0, x).entries, rot.jacobian(0.0, x).entries, atol=1e-8)
    assert rot.jacobian(0.0, x).det == pytest.approx(1.0)


def test_avaliacao_fora_do_dominio():
    fld = _linear_1d(Box.interval(-1.0, 1.0))
    with pytest.raises(OutOfDomain):
        fld.eval(0.0, [2.0])
    limited = fld.restricted(time_interval=(0.0, 1.0))
    with pytest.raises(OutOfDomain):
        limited.eval(2.0, [0.0])


def test_estencil_fora_do_dominio():
    """Jacobiano por diferenças na borda do domínio levanta StencilOutsideDomain."""
    fld = VectorField(dim=1, evaluator=lambda t, x: np.asarray(x) ** 2, jacobian_mode="central-difference",
                      domain=Box.interval(0.0, 1.0))
    with pytest.raises(StencilOutsideDomain):
        fld.jacobian(0.0, [0.0])
    assert fld.jacobian(0.0, [0.5]).trace == pytest.approx(1.0, rel=1e-6)


def test_avaliador_nao_finito():
    fld = VectorField(dim=1, evaluator=lambda t, x: np.full(np.shape(x), np.nan),
                      jacobian_mode="central-difference")
    with pytest.raises(NonFinite):
        fld.eval(0.0, [0.0])


def test_modo_analitico_exige_jacobiano():
    with pytest.raises(InvalidParam):
        VectorField(dim=1, evaluator=lambda t, x: x)


def test_divergente_por_diferencas():
    lin = make_example("linear", lam=0.7, dim=3).base
    x = np.array([0.1, 0.2, 0.3])
    assert divergence_by_differences(lin, 0.0, x) == pytest.approx(2.1, rel=1e-8)
    assert lin.divergence(0.0, x) == pytest.approx(2.1)


def test_extend_dim():
    """h(t,(x,y)) = (b(t,x), 0) com bloco de jacobiano nulo nas coordenadas novas."""
    ext = extend_dim(make_example("loglinear").base, 2)
    z = np.array([1.0, 5.0, -3.0])
    v = ext.eval(0.0, z)
    assert v[0] == pytest.approx(1.0) and v[1] == 0.0 and v[2] == 0.0
    m = ext.jacobian(0.0, z).entries
    assert m.shape == (3, 3)
    assert np.all(m[1:, :] == 0.0) and np.all(m[:, 1:] == 0.0)
    with pytest.raises(InvalidParam):
        extend_dim(ext, 0)


def test_campo_em_grade_salvo_e_lido(tmp_path):
    """Campo linear amostrado é reproduzido pela interpolação, também após gravar em CSV."""
    values = 2.0 * np.linspace(0.0, 1.0, 5).reshape(1, 5, 1)
    fld = grid_field([0.0], [1.0], (5,), [0.0], values)
    assert fld.eval(0.5, [0.3])[0] == pytest.approx(0.6)
    path = save_grid_field(tmp_path / "campo.csv", [0.0], [1.0], (5,), [0.0], values)
    loaded = load_grid_field(path)
    assert loaded.eval(0.5, [0.3])[0] == pytest.approx(0.6)
    assert loaded.name == "campo"
