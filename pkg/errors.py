#!/usr/bin/env python3
"""
Hierarquia de erros do roughflow.

Todos os erros herdam de RoughFlowError (um RuntimeError), assim o runner
separa "o programa falhou" de "a verificação matemática falhou".
"""


class RoughFlowError(RuntimeError):
    """Erro operacional base."""


class OutOfDomain(RoughFlowError, ValueError):
    """(t, x) fora da região declarada do campo."""


class NonFinite(RoughFlowError, ArithmeticError):
    """O avaliador produziu NaN ou infinito."""


class StencilOutsideDomain(OutOfDomain):
    """O estêncil de diferenças centrais saiu do domínio."""


class UnknownExample(RoughFlowError, KeyError):
    """Nome de exemplo desconhecido na galeria."""

    def __str__(self):
        return str(self.args[0]) if self.args else "exemplo desconhecido"


class InvalidParam(RoughFlowError, ValueError):
    """Parâmetro fora da faixa aceita."""


class OutOfRange(InvalidParam):
    """Argumento fora do intervalo de definição."""


class Overflow(RoughFlowError, OverflowError):
    """Valor além da faixa representável em ponto flutuante."""


class InvalidThreshold(InvalidParam):
    """Limiar s̄ pequeno demais para a família de gauges."""


class InverseDomain(RoughFlowError, ValueError):
    """Θ⁻¹ avaliada fora da sua imagem."""


class QuadratureFailure(RoughFlowError):
    """Quadratura instável; carrega o valor parcial e a cota de erro."""

    def __init__(self, message, partial=None, error_bound=None):
        super().__init__(message)
        self.partial = partial
        self.error_bound = error_bound


class DivergentIntegral(QuadratureFailure):
    """A escada de truncamentos indica integral divergente."""

    def __init__(self, message, partial=None, ladder=None):
        super().__init__(message, partial=partial)
        self.ladder = list(ladder or [])


class NoFiniteNorm(RoughFlowError):
    """Nenhum λ até o teto satisfaz ∫Φ(f/λ) ≤ 1."""


class DomainExit(RoughFlowError):
    """Composição de fluxos saiu do domínio."""


class TooCoarse(RoughFlowError, ValueError):
    """Grade com menos de 3 nós por eixo."""


class ZeroJacobian(RoughFlowError):
    """Jacobiano nulo em células do grid."""

    def __init__(self, message, cells=None):
        super().__init__(message)
        self.cells = list(cells or [])


class InconsistentGrids(RoughFlowError, ValueError):
    """Grades direta e reversa não são compatíveis."""


class SupportViolation(RoughFlowError, ValueError):
    """Suporte da função teste sai da janela calculada."""


class SchemaError(RoughFlowError, ValueError):
    """Especificação de experimento inválida, com o caminho do erro."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
