#!/usr/bin/env python3
"""
Testes do executor de experimentos: esquema, códigos de saída, relatório e CLI.
"""

import json
from pathlib import Path

import pytest
import yaml

from errors import SchemaError
from presets import PRESETS
from roughflow import emit_report, get_run_config, load_spec, main, run_experiment, spec_hash, validate_spec

CANTOR_SPEC = {
    "name": "cantor-teste",
    "field": {"example": "cantor", "level": 10, "amplitude": 0.5},
    "seed": 0,
    "operations": [{"op": "cantor_measure", "params": {"ts": [0.5, 1.0], "via_flow": False}}],
}


def _spec(**changes):
    spec = json.loads(json.dumps(CANTOR_SPEC))
    spec.update(changes)
    return spec


@pytest.mark.parametrize("spec, path", [
    ({"field": {"example": "linear"}}, "/name"),
    (_spec(extra=1), "/extra"),
    (_spec(field={"example": "vortex"}), "/field/example"),
    (_spec(field={"example": "linear", "alpha": 2.0}), "/field/alpha"),
    (_spec(solver={"rel_tol": "fino"}), "/solver/rel_tol"),
    (_spec(solver={"passo": 1.0}), "/solver/passo"),
    (_spec(seed=1.5), "/seed"),
    (_spec(operations=[{"op": "magica"}]), "/operations/0/op"),
    (_spec(operations=[{"op": "cantor_measure", "params": {"nivel": 3}}]), "/operations/0/params/nivel"),
    (_spec(operations=[{"op": "cantor_measure", "params": {"via_flow": "sim"}}]), "/operations/0/params/via_flow"),
    (_spec(gauge={"family": "gaussian"}), "/gauge/family"),
])
def test_erros_de_esquema_com_caminho(spec, path):
    with pytest.raises(SchemaError) as info:
        validate_spec(spec)
    assert info.value.path == path
    assert str(info.value).startswith(path + ": ")


def test_defaults_preenchidos():
    spec = validate_spec(CANTOR_SPEC)
    params = spec["operations"][0]["params"]
    assert params["level"] == 10 and params["tol"] == 0.05 and params["ts"] == [0.5, 1.0]
    bare = validate_spec(_spec(operations=[{"op": "cantor_measure"}]))["operations"][0]["params"]
    assert bare["via_flow"] is True and bare["pushed_level"] is None


def test_todos_os_presets_sao_validos():
    for name, spec in PRESETS.items():
        assert validate_spec(spec)["name"] == name


def test_especificacoes_de_exemplo_sao_validas():
    files = sorted(Path(__file__).with_name("specs").glob("*.yaml"))
    assert files
    for path in files:
        validate_spec(load_spec(path))


def test_especificacao_sem_operacoes():
    result = run_experiment(_spec(operations=[]), verbose=False)
    assert result.exit_code == 0
    assert result.checks == []


def test_checagem_falha_da_codigo_2():
    spec = _spec(operations=[{"op": "cantor_measure", "params": {"tol": -1.0, "via_flow": False}}])
    result = run_experiment(spec, verbose=False)
    assert result.exit_code == 2
    assert all(not c.passed for c in result.checks)


def test_erro_de_operacao_da_codigo_1():
    """Cantor não tem expoente crítico; a operação registra o erro e o restante roda."""
    spec = _spec(operations=[{"op": "sharp_exponents"}, {"op": "cantor_measure", "params": {"via_flow": False}}])
    result = run_experiment(spec, verbose=False)
    assert result.exit_code == 1
    assert result.records[0].error.startswith("InvalidParam")
    assert result.records[1].result is not None
    assert all(c.passed for c in result.checks)


def test_relatorio_deterministico(tmp_path):
    files_a = emit_report(run_experiment(CANTOR_SPEC, verbose=False), tmp_path / "a")
    files_b = emit_report(run_experiment(CANTOR_SPEC, verbose=False), tmp_path / "b")
    names = sorted(p.name for p in files_a)
    assert names == ["00_cantor_measure_cantor.csv", "00_cantor_measure_cantor.plot.dat", "report.json"]
    for a, b in zip(sorted(files_a), sorted(files_b)):
        assert a.read_bytes() == b.read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["exit_code"] == 0
    assert report["summary"] == {"checks": 2, "passed": 2, "failed": 0, "errors": 0}


def test_hash_depende_da_seed():
    spec = validate_spec(CANTOR_SPEC)
    assert spec_hash(spec, 0) == spec_hash(spec, 0)
    assert spec_hash(spec, 0) != spec_hash(spec, 1)
    assert run_experiment(CANTOR_SPEC, seed=7, verbose=False).seed == 7


def test_config_invalida_no_ambiente(monkeypatch):
    monkeypatch.setenv("ROUGHFLOW_WORKERS", "zero")
    with pytest.raises(RuntimeError):
        get_run_config()
    assert main(["list-presets"]) == 1
    monkeypatch.setenv("ROUGHFLOW_WORKERS", "0")
    with pytest.raises(RuntimeError):
        get_run_config()


def test_cli(tmp_path, monkeypatch):
    monkeypatch.delenv("ROUGHFLOW_WORKERS", raising=False)
    monkeypatch.delenv("ROUGHFLOW_TOL_SCALE", raising=False)
    monkeypatch.delenv("ROUGHFLOW_SEED", raising=False)
    good = tmp_path / "cantor.yaml"
    good.write_text(yaml.safe_dump(CANTOR_SPEC))
    bad = tmp_path / "ruim.yaml"
    bad.write_text(yaml.safe_dump(_spec(field={"example": "vortex"})))

    assert main(["list-presets"]) == 0
    assert main(["validate", str(good)]) == 0
    assert main(["validate", str(bad)]) == 1
    assert main(["validate", str(tmp_path / "inexistente.yaml")]) == 1
    assert main(["preset", "verify-nada"]) == 1
    assert main(["run", str(good), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "cantor-teste" / "report.json").exists()


@pytest.mark.slow
def test_preset_do_cantor(tmp_path):
    assert main(["preset", "verify-cantor", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify-cantor" / "report.json").read_text())
    assert report["summary"]["failed"] == 0


def test_operacoes_de_tolerancia_e_ell():
    spec = {
        "name": "linear-teste",
        "field": {"example": "linear", "lam": 1.0},
        "seed": 0,
        "operations": [
            {"op": "flow_accuracy", "params": {"box": [0.1, 1.0], "nodes": [3, 2, 5], "tol": 1e-6}},
            {"op": "ell_bound", "params": {"box": [-1.0, 1.0], "samples": 20}},
        ],
    }
    result = run_experiment(spec, verbose=False)
    assert [c.name for c in result.checks] == ["tolerance_halving_ratio", "max_abs_error", "coverage",
                                               "ell_lower_bound"]
    assert result.records[0].result.values["tolerance_study"]["expected_ratio"] == pytest.approx(0.5 ** (5 / 6))
    assert result.checks[-1].passed
    assert list(result.records[1].result.tables["ell"].columns) == ["s", "x0", "ell", "bound", "holds"]
