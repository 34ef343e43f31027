#!/usr/bin/env python3
"""
Presets embutidos: uma especificação de experimento por critério de aceitação.

Cada preset tem o mesmo formato de uma especificação YAML carregada
(ver PRESETS_README.md) e roda com `python roughflow.py preset <nome>`.
"""

from gallery import SUBLOG_EDGE

# ===== CONFIG =====
SUBLOG_BOX = [0.0, round(SUBLOG_EDGE - 0.006, 4)]
LOGLINEAR_BOX = [0.05, 2.668]
ELL_CASES = [
    ({"example": "loglinear"}, [-0.5, 0.5], [-1.0, 3.0]),
    ({"example": "sublog", "alpha": 1.0}, [0.0, 1.0], [-0.02, 0.08]),
    ({"example": "cantor", "level": 6, "amplitude": 0.5}, [0.0, 1.0], [-0.5, 1.5]),
    ({"example": "rotation"}, [0.0, 1.0], [[-1.0, -1.0], [1.0, 1.0]]),
    ({"example": "linear", "lam": 1.0}, [0.0, 1.0], [-1.0, 1.0]),
    ({"example": "constant", "c": 0.5}, [0.0, 1.0], [0.0, 1.0]),
]
# ==================

PRESETS = {
    "verify-loglinear": {
        "name": "verify-loglinear",
        "description": "fluxo fechado, semigrupo, expoente crítico de Sobolev e funil de Osgood do loglinear",
        "field": {"example": "loglinear"},
        "gauge": {"family": "exponential", "beta": 1.0},
        "seed": 0,
        "operations": [
            {"op": "flow_accuracy", "params": {"box": LOGLINEAR_BOX, "nodes": [20, 20, 20], "tol": 1e-6}},
            {"op": "semigroup", "params": {"box": LOGLINEAR_BOX, "samples": 50}},
            {"op": "sharp_exponents", "params": {"pairs": [[1.0, 0.0]], "box": [0.0, 1.0], "levels": 4}},
            {"op": "sobolev_study", "params": {"t": 1.0, "s": 0.0, "p": [1.4, 1.75], "box": [0.0, 1.0],
                                               "expect": ["bounded", "diverging"]}},
            {"op": "funnel", "params": {"x0": [1.0], "radii": [1e-4, 1e-6, 1e-8], "horizon": 1.0,
                                        "box": LOGLINEAR_BOX}},
            {"op": "distortion", "params": {"t": 0.5, "s": 0.0, "box": [0.2, 2.5], "q": 1.0, "p": 3.0}},
        ],
    },
    "verify-sublog": {
        "name": "verify-sublog",
        "description": "patologia do sublog(1) e não unicidade do sublog(1.5)",
        "field": {"example": "sublog", "alpha": 1.0},
        "seed": 0,
        "operations": [
            {"op": "sobolev_study", "params": {"t": 0.5, "s": 0.0, "p": [1.5, 1.0], "box": SUBLOG_BOX,
                                               "expect": ["diverging", "bounded"]}},
            {"op": "holder_study", "params": {"t": 0.5, "s": 0.0, "gamma": 0.5, "box": SUBLOG_BOX,
                                              "expect": "diverging"}},
            {"op": "nonuniqueness", "params": {"alpha": 1.5}},
            {"op": "pushforward", "params": {"t": 0.5, "s": 0.0, "box": SUBLOG_BOX, "cells": 50,
                                             "factor": 10.0, "alpha": 0.5}},
        ],
    },
    "verify-cantor": {
        "name": "verify-cantor",
        "description": "medida de X(t,0,C) para o campo de Cantor",
        "field": {"example": "cantor", "level": 10, "amplitude": 0.5},
        "seed": 0,
        "operations": [
            {"op": "cantor_measure", "params": {"level": 10, "ts": [0.5, 1.0, 2.0], "amplitude": 0.5,
                                                "tol": 0.05}},
        ],
    },
    "verify-gronwall": {
        "name": "verify-gronwall",
        "description": "cota de Gronwall e identidade de Liouville em amostras aleatórias",
        "field": {"example": "linear", "lam": 1.0},
        "seed": 0,
        "operations": (
            [{"op": "gronwall", "params": {"field": f, "samples": 250}}
             for f in ({"example": "loglinear"}, {"example": "sublog", "alpha": 1.0},
                       {"example": "rotation"}, {"example": "linear", "lam": 1.0})]
            + [{"op": "liouville", "params": {"field": f, "samples": 125}}
               for f in ({"example": "loglinear"}, {"example": "sublog", "alpha": 1.0},
                         {"example": "rotation"}, {"example": "linear", "lam": 1.0})]
        ),
    },
    "verify-lambda-p": {
        "name": "verify-lambda-p",
        "description": "Λ_p finito para ℓ = 0.05, divergente para ℓ = 0.3, cota ∫∫‖D_xX‖^p ≤ ℓ^{n/(p−n)}Λ_p",
        "field": {"example": "loglinear"},
        "seed": 0,
        "operations": [
            {"op": "lambda_p", "params": {"p": 3.0, "tspan": [-0.025, 0.025], "box": [-1.0, 3.0],
                                          "expect": "finite"}},
            {"op": "sobolev_bound", "params": {"t": 0.0, "p": 3.0, "tspan": [-0.025, 0.025],
                                               "box": [-1.0, 3.0], "expect": "holds"}},
            {"op": "lambda_p", "params": {"p": 3.0, "tspan": [-0.15, 0.15], "box": [-1.0, 3.0],
                                          "expect": "divergent"}},
            {"op": "sobolev_study", "params": {"t": 0.15, "s": -0.15, "p": 2.0, "box": [0.0, 1.0],
                                               "expect": "bounded"}},
        ] + [
            {"op": "ell_bound", "params": {"field": f, "time_window": window, "box": box, "samples": 500}}
            for f, window, box in ELL_CASES
        ],
    },
    "verify-transport": {
        "name": "verify-transport",
        "description": "resíduo fraco do transporte por características",
        "field": {"example": "constant", "c": 0.5},
        "seed": 0,
        "operations": [
            {"op": "transport", "params": {"box": [-2.0, 2.0], "nodes": 200,
                                           "u0": {"kind": "gaussian", "center": [0.0], "width": 0.3}}},
            {"op": "transport", "params": {"field": {"example": "rotation"},
                                           "box": [[-2.0, -2.0], [2.0, 2.0]], "nodes": 48,
                                           "u0": {"kind": "gaussian", "center": [0.5, 0.0], "width": 0.3}}},
            {"op": "transport", "params": {"field": {"example": "loglinear"}, "box": [0.2, 2.5], "nodes": 200,
                                           "u0": {"kind": "bump", "center": [1.0], "radius": [0.5]}}},
        ],
    },
    "verify-continuity": {
        "name": "verify-continuity",
        "description": "conservação de massa e concordância entre representações da continuidade",
        "field": {"example": "loglinear"},
        "seed": 0,
        "operations": [
            {"op": "continuity", "params": {"box": [0.5, 1.5], "t": 0.5, "cells": 50}},
            {"op": "continuity", "params": {"field": {"example": "rotation"},
                                            "box": [[-0.5, -0.5], [0.5, 0.5]], "t": 0.5, "cells": 16,
                                            "particles_per_axis": 800,
                                            "rho0": {"kind": "bump", "center": [0.0, 0.0],
                                                     "radius": [0.45, 0.45]},
                                            "weak": True, "weak_nodes": 100}},
        ],
    },
    "verify-gauges": {
        "name": "verify-gauges",
        "description": "dicotomia de Osgood da família E_{k,β} e integrais de somabilidade",
        "field": {"example": "loglinear"},
        "gauge": {"family": "exponential", "beta": 1.0},
        "seed": 0,
        "operations": [
            {"op": "gauges", "params": {}},
            {"op": "modulus", "params": {"alpha": 2.0, "expect": "diverging"}},
            {"op": "modulus", "params": {"gauge": {"family": "subexp", "k": 1, "beta": 1.0}, "alpha": 2.0,
                                         "expect": "diverging"}},
            {"op": "summability", "params": {"c": 0.5, "box": [0.0, 1.0], "tspan": [0.0, 1.0],
                                             "expect": "finite"}},
            {"op": "summability", "params": {"c": 1.5, "box": [0.0, 1.0], "tspan": [0.0, 1.0],
                                             "expect": "divergent"}},
        ],
    },
}
