"""General cavity description, commutator constraints and degeneracy analysis.

A cavity with unwanted noise is fully described by the c-numbers of its
quantum Langevin equation and input-output relation. Preserving the
bosonic commutators forces three constraints on them; a parametrization
is *degenerate* when it only reaches a submanifold of the allowed set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonAdmissiblePoint

CONSTRAINT_TOL = 1e-10
RANK_THRESHOLD = 1e-7


@dataclass(frozen=True)
class CavityCoefficients:
    """Coefficients of the extended Langevin equation and input-output relation.

    ``a_c`` and ``a_o`` are index-aligned noise amplitudes: entry ``k`` is the
    weight of noise input ``k`` in the Langevin equation and in the output.
    """

    gamma_total: float
    omega_cav: float
    t_c: complex
    t_o: complex
    r_o: complex
    a_c: tuple = (0j, 0j, 0j)
    a_o: tuple = (0j, 0j, 0j)

    def __post_init__(self):
        object.__setattr__(self, "a_c", tuple(complex(v) for v in self.a_c))
        object.__setattr__(self, "a_o", tuple(complex(v) for v in self.a_o))
        if len(self.a_c) != len(self.a_o):
            raise ValueError("a_c and a_o must be index-aligned (equal length)")

    def as_dict(self) -> dict:
        return {
            "gamma_total": self.gamma_total, "omega_cav": self.omega_cav,
            "t_c": self.t_c, "t_o": self.t_o, "r_o": self.r_o,
            **{f"a_c{k + 1}": v for k, v in enumerate(self.a_c)},
            **{f"a_o{k + 1}": v for k, v in enumerate(self.a_o)},
        }

    def replace(self, **changes) -> "CavityCoefficients":
        d = dict(gamma_total=self.gamma_total, omega_cav=self.omega_cav,
                 t_c=self.t_c, t_o=self.t_o, r_o=self.r_o,
                 a_c=self.a_c, a_o=self.a_o)
        d.update(changes)
        return CavityCoefficients(**d)


@dataclass(frozen=True)
class ConstraintReport:
    decay: float      # |Gamma - sum|a_c|^2 - |T_c|^2| / Gamma
    unitarity: float  # ||R_o|^2 + sum|a_o|^2 - 1|
    cross: float      # |T_o + T_c* R_o + sum a_c* a_o| / sqrt(Gamma)
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", self.max_residual < self.tol)

    @property
    def residuals(self) -> tuple:
        return (self.decay, self.unitarity, self.cross)

    @property
    def max_residual(self) -> float:
        return max(self.residuals)


def check_constraints(c: CavityCoefficients, tol: float = CONSTRAINT_TOL) -> ConstraintReport:
    """Residuals of the three commutator-preservation constraints.

    The decay-rate residual is divided by ``Gamma`` and the cross residual
    by ``sqrt(Gamma)`` so that all three are dimensionless.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a_c = np.asarray(c.a_c)
    a_o = np.asarray(c.a_o)
    scale = c.gamma_total if c.gamma_total > 0 else 1.0
    decay = abs(c.gamma_total - np.sum(abs(a_c) ** 2) - abs(c.t_c) ** 2) / scale
    unitarity = abs(abs(c.r_o) ** 2 + np.sum(abs(a_o) ** 2) - 1.0)
    cross = abs(c.t_o + c.t_c.conjugate() * c.r_o + np.sum(a_c.conj() * a_o)) / math.sqrt(scale)
    return ConstraintReport(float(decay), float(unitarity), float(cross), tol)


@dataclass(frozen=True)
class GeneralNoiseModel:
    """Two-source representation: only the noise commutators are kept.

    ``cross`` is ``e^{i kappa} cos(zeta)``, the normalized cross-commutator of
    the Langevin and output noise operators.
    """

    gamma_total: float
    omega_cav: float
    t_c: complex
    t_o: complex
    r_o: complex
    abs_a_c: float
    abs_a_o: float
    cross: complex

    def residuals(self) -> tuple:
        g = self.gamma_total if self.gamma_total > 0 else 1.0
        r7 = abs(self.gamma_total - self.abs_a_c ** 2 - abs(self.t_c) ** 2) / g
        r8 = abs(abs(self.r_o) ** 2 + self.abs_a_o ** 2 - 1.0)
        r9 = abs(self.t_o + self.t_c.conjugate() * self.r_o
                 + self.abs_a_c * self.abs_a_o * self.cross) / math.sqrt(g)
        return (r7, r8, r9)

    def to_vector(self) -> np.ndarray:
        """Real coordinates in the fixed order of ``GENERAL_LABELS``."""
        return np.array([
            self.gamma_total, self.omega_cav,
            self.t_c.real, self.t_c.imag, self.t_o.real, self.t_o.imag,
            self.r_o.real, self.r_o.imag,
            self.abs_a_c, self.abs_a_o, self.cross.real, self.cross.imag])


GENERAL_LABELS = ("gamma_total", "omega_cav", "re_t_c", "im_t_c", "re_t_o", "im_t_o",
                  "re_r_o", "im_r_o", "abs_a_c", "abs_a_o", "re_cross", "im_cross")


def reduce_to_general(c: CavityCoefficients) -> GeneralNoiseModel:
    a_c = np.asarray(c.a_c)
    a_o = np.asarray(c.a_o)
    abs_c = math.sqrt(float(np.sum(abs(a_c) ** 2)))
    abs_o = math.sqrt(float(np.sum(abs(a_o) ** 2)))
    if abs_c == 0.0 or abs_o == 0.0:
        cross = 0j
    else:
        cross = complex(np.sum(a_c.conj() * a_o)) / (abs_c * abs_o)
    return GeneralNoiseModel(c.gamma_total, c.omega_cav, c.t_c, c.t_o, c.r_o,
                             abs_c, abs_o, cross)


def general_vector(c: CavityCoefficients) -> np.ndarray:
    """Real-vectorize a coefficient set through its general-model reduction."""
    return reduce_to_general(c).to_vector()


def degenerate_residual(c: CavityCoefficients) -> float:
    """``|T_o T_c / Gamma + R_o|``; zero marks a cavity that cannot mode-match."""
    if c.gamma_total <= 0:
        raise ValueError("degenerate_residual needs Gamma > 0")
    return abs(c.t_o * c.t_c / c.gamma_total + c.r_o)


def numerical_jacobian(func: Callable[[np.ndarray], np.ndarray],
                       point: Sequence[float], step: float) -> np.ndarray:
    """Central-difference Jacobian, one column per input coordinate."""
    if step <= 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(point, dtype=float)

    def evaluate(x):
        try:
            y = np.asarray(func(x), dtype=float)
        except Exception as exc:
            raise NonAdmissiblePoint(f"parametrization failed at {x!r}: {exc}") from exc
        if not np.all(np.isfinite(y)):
            raise NonAdmissiblePoint(f"parametrization is not finite at {x!r}")
        return y

    y0 = evaluate(x0)
    jac = np.empty((y0.size, x0.size))
    for j in range(x0.size):
        dx = np.zeros_like(x0)
        dx[j] = step
        jac[:, j] = (evaluate(x0 + dx) - evaluate(x0 - dx)) / (2 * step)
    return jac


def jacobian_rank(parametrization: Callable[[np.ndarray], np.ndarray],
                  point: Sequence[float], step: float = 1e-5,
                  rank_threshold: float = RANK_THRESHOLD) -> int:
    """Numerical rank of the parametrization's Jacobian at ``point``.

    Singular values at or below ``rank_threshold`` times the largest one are
    treated as null directions.
    """
    jac = numerical_jacobian(parametrization, point, step)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rank_threshold * sv[0]))


def _general_constraints(g: np.ndarray) -> np.ndarray:
    t_c = complex(g[2], g[3])
    t_o = complex(g[4], g[5])
    r_o = complex(g[6], g[7])
    cross = complex(g[10], g[11])
    c9 = t_o + t_c.conjugate() * r_o + g[8] * g[9] * cross
    return np.array([g[0] - g[8] ** 2 - abs(t_c) ** 2,
                     abs(r_o) ** 2 + g[9] ** 2 - 1.0,
                     c9.real, c9.imag])


def manifold_dimension(c: CavityCoefficients, step: float = 1e-6) -> int:
    """Dimension of the constraint manifold through ``c``.

    Computed as the number of real coordinates minus the rank of the
    constraint Jacobian, rather than assumed.
    """
    v = general_vector(c)
    return v.size - jacobian_rank(_general_constraints, v, step)
