"""Beam-splitter algebra and the replacement-scheme cavity coefficients.

The replacement scheme models a one-sided cavity with unwanted noise as a
lossless cavity (decay rate ``gamma``, frequency ``omega0``, internal loss
amplitude ``a_internal``) embedded in three beam splitters: two symmetric
SU(2) elements in the input and output paths and an asymmetric U(2)
element closing a feedback loop.

Two independent routes produce the Langevin / input-output coefficients:

* :func:`coefficients` evaluates the closed-form expressions;
* :func:`coefficients_by_elimination` propagates operator coefficient
  vectors through each beam splitter and solves the loop equation for the
  one unknown internal field.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularLoop
from .noise_model import CavityCoefficients

DENOMINATOR_FLOOR = 1e-8

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"


@dataclass(frozen=True)
class BeamSplitterParams:
    """One four-port element, ``T = cos(theta) e^{i mu}``, ``R = sin(theta) e^{i nu}``.

    Symmetric (SU(2)) elements carry three real parameters; asymmetric
    (U(2)) elements add the determinant phase ``phi`` on the first output.
    Angles are kept raw (not reduced mod 2 pi).
    """

    theta: float
    mu: float = 0.0
    nu: float = 0.0
    phi: float = 0.0
    kind: str = SYMMETRIC

    def __post_init__(self):
        if self.kind not in (SYMMETRIC, ASYMMETRIC):
            raise ValueError(f"unknown beam-splitter kind {self.kind!r}")
        if self.kind == SYMMETRIC and self.phi != 0.0:
            raise ValueError("symmetric beam splitters have no determinant phase")

    @classmethod
    def asymmetric(cls, theta, mu=0.0, nu=0.0, phi=0.0):
        return cls(theta, mu, nu, phi, kind=ASYMMETRIC)

    @property
    def transmission(self) -> complex:
        return math.cos(self.theta) * cmath.exp(1j * self.mu)

    @property
    def reflection(self) -> complex:
        return math.sin(self.theta) * cmath.exp(1j * self.nu)

    @property
    def n_params(self) -> int:
        return 4 if self.kind == ASYMMETRIC else 3

    def matrix(self) -> np.ndarray:
        """2x2 transfer matrix mapping ``(a_in, b_in)`` to ``(a_out, b_out)``."""
        t, r = self.transmission, self.reflection
        ph = cmath.exp(1j * self.phi)
        return np.array([[ph * t, ph * r], [-r.conjugate(), t.conjugate()]])


def bs_forward(bs: BeamSplitterParams, a_in, b_in):
    """Apply the beam-splitter input-output relation.

    ``a_in`` and ``b_in`` may be complex scalars or arrays of operator
    expansion coefficients (the map is linear).
    """
    t, r = bs.transmission, bs.reflection
    ph = cmath.exp(1j * bs.phi)
    a_out = ph * (t * a_in + r * b_in)
    b_out = -r.conjugate() * a_in + t.conjugate() * b_in
    return a_out, b_out


def bs_inverse(bs: BeamSplitterParams, a_out, b_out):
    """Recover the inputs from the outputs of :func:`bs_forward`."""
    t, r = bs.transmission, bs.reflection
    phc = cmath.exp(-1j * bs.phi)
    a_in = phc * t.conjugate() * a_out - r * b_out
    b_in = phc * r.conjugate() * a_out + t * b_out
    return a_in, b_in


@dataclass(frozen=True)
class ReplacementScheme:
    bs1: BeamSplitterParams
    bs2: BeamSplitterParams
    bs3: BeamSplitterParams
    gamma: float
    omega0: float = 0.0
    a_internal: complex = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.bs1.kind != SYMMETRIC or self.bs2.kind != SYMMETRIC:
            raise ValueError("bs1 and bs2 must be symmetric beam splitters")
        if self.bs3.kind != ASYMMETRIC:
            raise ValueError("bs3 must be an asymmetric beam splitter")

    @property
    def loop_gain(self) -> complex:
        """``R3* T1 T2``, the round-trip amplitude of the feedback loop."""
        return (self.bs3.reflection.conjugate() * self.bs1.transmission
                * self.bs2.transmission)

    def loop_denominator(self) -> complex:
        return 1.0 - self.loop_gain

    def to_vector(self) -> np.ndarray:
        b1, b2, b3 = self.bs1, self.bs2, self.bs3
        a = complex(self.a_internal)
        return np.array([b1.theta, b1.mu, b1.nu, b2.theta, b2.mu, b2.nu,
                         b3.theta, b3.mu, b3.nu, b3.phi,
                         self.gamma, self.omega0, a.real, a.imag])


SCHEME_LABELS = ("theta1", "mu1", "nu1", "theta2", "mu2", "nu2",
                 "theta3", "mu3", "nu3", "phi3", "gamma", "omega0",
                 "re_a", "im_a")

DEGENERATE_LABELS = ("theta1", "mu1", "nu1", "theta2", "mu2", "nu2",
                     "phi3", "gamma", "omega0")


def scheme_from_vector(x: Sequence[float]) -> ReplacementScheme:
    """Inverse of :meth:`ReplacementScheme.to_vector` (order in ``SCHEME_LABELS``)."""
    x = [float(v) for v in x]
    return ReplacementScheme(
        BeamSplitterParams(x[0], x[1], x[2]),
        BeamSplitterParams(x[3], x[4], x[5]),
        BeamSplitterParams.asymmetric(x[6], x[7], x[8], x[9]),
        gamma=x[10], omega0=x[11], a_internal=complex(x[12], x[13]))


def degenerate_scheme_from_vector(x: Sequence[float]) -> ReplacementScheme:
    """Scheme with ``T3 = 1``, ``R3 = 0`` and no internal loss.

    Only the two path beam splitters, the phase of the feedback element
    and the bare cavity parameters remain free (``DEGENERATE_LABELS``).
    """
    x = [float(v) for v in x]
    return ReplacementScheme(
        BeamSplitterParams(x[0], x[1], x[2]),
        BeamSplitterParams(x[3], x[4], x[5]),
        BeamSplitterParams.asymmetric(0.0, 0.0, 0.0, x[6]),
        gamma=x[7], omega0=x[8], a_internal=0.0)


def ideal_scheme(gamma=1.0, omega0=1.0) -> ReplacementScheme:
    """All loss channels closed: the bare lossless one-sided cavity."""
    return ReplacementScheme(BeamSplitterParams(0.0), BeamSplitterParams(0.0),
                             BeamSplitterParams.asymmetric(0.0),
                             gamma=gamma, omega0=omega0)


def reflecting_scheme(eta_ext, gamma_total=1.0, omega0=0.0) -> ReplacementScheme:
    """Cavity whose coupling mirror does not absorb input light (``|R_o| = 1``).

    All unwanted loss sits inside the cavity, so the extraction efficiency
    is ``gamma / (gamma + |A|^2) = eta_ext``.
    """
    if not 0.0 < eta_ext <= 1.0:
        raise ValueError(f"eta_ext must lie in (0, 1], got {eta_ext}")
    gamma = eta_ext * gamma_total
    a = math.sqrt(gamma_total - gamma)
    return ReplacementScheme(BeamSplitterParams(0.0), BeamSplitterParams(0.0),
                             BeamSplitterParams.asymmetric(0.0),
                             gamma=gamma, omega0=omega0, a_internal=a)


def random_scheme(rng: np.random.Generator) -> ReplacementScheme:
    """Draw a scheme covering the parameter manifold without clustering.

    Mixing angles uniform on [0, pi/2], phases uniform on [0, 2 pi),
    ``gamma`` and ``|A|^2`` log-uniform on [0.1, 10] and [1e-3, 10].
    """
    th = rng.uniform(0.0, math.pi / 2, size=3)
    ph = rng.uniform(0.0, 2 * math.pi, size=8)
    gamma = 10 ** rng.uniform(-1.0, 1.0)
    a_abs = math.sqrt(10 ** rng.uniform(-3.0, 1.0))
    return ReplacementScheme(
        BeamSplitterParams(th[0], ph[0], ph[1]),
        BeamSplitterParams(th[1], ph[2], ph[3]),
        BeamSplitterParams.asymmetric(th[2], ph[4], ph[5], ph[6]),
        gamma=gamma, omega0=rng.uniform(-1.0, 1.0),
        a_internal=a_abs * cmath.exp(1j * ph[7]))


def _check_loop(scheme: ReplacementScheme, floor: float) -> complex:
    den = scheme.loop_denominator()
    if abs(den) < floor:
        raise SingularLoop(
            f"|1 - R3* T1 T2| = {abs(den):.3e} is below the floor {floor:.1e}; "
            "the feedback loop is resonant")
    return den


def coefficients(scheme: ReplacementScheme,
                 denominator_floor: float = DENOMINATOR_FLOOR) -> CavityCoefficients:
    """Closed-form Langevin and input-output coefficients of a scheme."""
    den = _check_loop(scheme, denominator_floor)
    t1, r1 = scheme.bs1.transmission, scheme.bs1.reflection
    t2, r2 = scheme.bs2.transmission, scheme.bs2.reflection
    t3, r3 = scheme.bs3.transmission, scheme.bs3.reflection
    ph3 = cmath.exp(1j * scheme.bs3.phi)
    g = scheme.gamma
    sg = math.sqrt(g)
    a = complex(scheme.a_internal)
    x = r3.conjugate() * t1 * t2
    den2 = abs(den) ** 2

    gamma_total = g * (1.0 - abs(x) ** 2) / den2 + abs(a) ** 2
    omega_cav = scheme.omega0 + g * x.imag / den2

    t_c = sg * t1 * t3.conjugate() / den
    a_c1 = sg * r1 / den
    a_c2 = -sg * t1 * r2 * r3.conjugate() / den
    t_o = sg * ph3 * t2 * t3 / den
    r_o = ph3 * (r3 - t1 * t2) / den
    a_o1 = -ph3 * t2 * r1 * t3 / den
    a_o2 = ph3 * r2 * t3 / den
    return CavityCoefficients(gamma_total, omega_cav, t_c, t_o, r_o,
                              (a_c1, a_c2, a), (a_o1, a_o2, 0j))


# operator basis for the elimination route
_A, _B, _C1, _C2, _C, _G = range(6)


def _unit(k: int) -> np.ndarray:
    v = np.zeros(6, dtype=complex)
    v[k] = 1.0
    return v


def coefficients_by_elimination(scheme: ReplacementScheme,
                                denominator_floor: float = DENOMINATOR_FLOOR
                                ) -> CavityCoefficients:
    """Same coefficients, obtained by walking the network operator by operator.

    Every field is a coefficient vector over
    ``(a_cav, b_in, c1_in, c2_in, c_in, g_in)``. Going once around the
    loop expresses ``g_in`` in terms of itself; that scalar equation is
    solved and substituted back.
    """
    _check_loop(scheme, denominator_floor)
    sg = math.sqrt(scheme.gamma)
    a_cav, b_in, c1, c2, c_int, g_in = (_unit(k) for k in range(6))

    def around_loop(g):
        d_in, _ = bs_forward(scheme.bs1, g, c1)
        d_out = sg * a_cav - d_in
        g_out, _ = bs_forward(scheme.bs2, d_out, c2)
        _, g_new = bs_forward(scheme.bs3, g_out, b_in)
        return g_new

    loop = around_loop(g_in)
    self_coupling = loop[_G]
    rest = loop.copy()
    rest[_G] = 0.0
    if abs(1.0 - self_coupling) < denominator_floor:
        raise SingularLoop(f"loop equation is singular (|1-x| = {abs(1 - self_coupling):.3e})")
    g_solved = np.linalg.solve(np.array([[1.0 - self_coupling]]), rest[None, :])[0]

    d_in, _ = bs_forward(scheme.bs1, g_solved, c1)
    a = complex(scheme.a_internal)
    drift = -(1j * scheme.omega0 + 0.5 * (scheme.gamma + abs(a) ** 2))
    langevin = drift * a_cav + sg * d_in + a * c_int

    d_out = sg * a_cav - d_in
    g_out, _ = bs_forward(scheme.bs2, d_out, c2)
    b_out, _ = bs_forward(scheme.bs3, g_out, b_in)

    return CavityCoefficients(
        gamma_total=-2.0 * langevin[_A].real,
        omega_cav=-langevin[_A].imag,
        t_c=langevin[_B], t_o=b_out[_A], r_o=b_out[_B],
        a_c=(langevin[_C1], langevin[_C2], langevin[_C]),
        a_o=(b_out[_C1], b_out[_C2], b_out[_C]))
