"""Nonmonochromatic temporal modes of a cavity with unwanted noise.

The intracavity field leaks into the cavity-associated output mode (CAOM).
Unwanted noise makes it possible to reflect a matched input mode (MIM)
into the CAOM as well; the remainder of the reflected MIM lands in an
additional output mode (AOM). All three share the envelope
``exp(-(i omega_cav + Gamma/2) t)`` for ``t >= 0``.

Time grids are uniform numpy arrays; quadratures use Simpson's rule.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.special import eval_laguerre

from .errors import GridTooCoarse, NonOrthonormalBasis, ZeroReflection
from .noise_model import CavityCoefficients

ZERO_REFLECTION_TOL = 1e-14
MAX_DT = 0.01        # in units of 1/Gamma
DEFAULT_DT = 0.005   # in units of 1/Gamma
DEFAULT_SPAN = 40.0  # in units of 1/Gamma


@dataclass(frozen=True)
class ModeProfile:
    """A temporal mode function ``U(t)``.

    Analytic kinds (``caom``, ``mim``, ``aom``) are
    ``amplitude * poly(t) * exp(-(i omega + gamma/2) t) * Theta(t)`` with
    ``poly`` given by its coefficients in ascending powers of ``t``. The
    ``custom`` kind is a sampled function on ``grid``.
    """

    kind: str
    amplitude: complex = 1.0
    poly: tuple = (1.0,)
    omega: float = 0.0
    gamma: float = 1.0
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @property
    def is_analytic(self) -> bool:
        return self.values is None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if not self.is_analytic:
            re = np.interp(t, self.grid, self.values.real, left=0.0, right=0.0)
            im = np.interp(t, self.grid, self.values.imag, left=0.0, right=0.0)
            return re + 1j * im
        tp = np.where(t >= 0, t, 0.0)
        envelope = np.exp(-(1j * self.omega + 0.5 * self.gamma) * tp)
        poly = np.polynomial.polynomial.polyval(tp, np.asarray(self.poly, dtype=complex))
        return np.where(t >= 0, self.amplitude * poly * envelope, 0.0)

    def sample(self, grid) -> np.ndarray:
        return np.asarray(self(grid), dtype=complex)

    def to_csv(self, path, grid) -> None:
        """Write ``t, re, im`` rows of the profile on ``grid``."""
        u = self.sample(grid)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, v in zip(grid, u):
                w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


def _rate(p: ModeProfile) -> complex:
    return 1j * p.omega + 0.5 * p.gamma


def analytic_inner(p: ModeProfile, q: ModeProfile) -> complex:
    """Closed-form ``<p, q> = int conj(p(t)) q(t) dt`` for analytic profiles."""
    if not (p.is_analytic and q.is_analytic):
        raise ValueError("analytic_inner needs two analytic profiles")
    z = _rate(p).conjugate() + _rate(q)
    total = 0j
    for j, pj in enumerate(p.poly):
        for k, qk in enumerate(q.poly):
            n = j + k
            total += complex(pj).conjugate() * qk * math.factorial(n) / z ** (n + 1)
    return complex(p.amplitude).conjugate() * q.amplitude * total


def quad_inner(u: np.ndarray, v: np.ndarray, grid: np.ndarray) -> complex:
    """Simpson quadrature of ``conj(u) v`` on a uniform grid."""
    return complex(simpson(np.conj(u) * v, x=grid))


def _cumulative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    # cumulative_simpson drops imaginary parts
    re = cumulative_simpson(y.real, x=x, initial=0.0)
    im = cumulative_simpson(y.imag, x=x, initial=0.0)
    return re + 1j * im


def time_grid(gamma: float, span: float = DEFAULT_SPAN, dt: float = DEFAULT_DT,
              start: float = 0.0) -> np.ndarray:
    """Uniform grid on ``[start, span/Gamma]`` with step ``dt/Gamma``."""
    n = int(round((span - start * gamma) / dt))
    return start + np.arange(n + 1) * (dt / gamma)


def _check_grid(grid: np.ndarray, gamma: float) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise GridTooCoarse("time grid must be a 1-D array with at least 3 points")
    steps = np.diff(grid)
    dt = float(steps.mean())
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise GridTooCoarse("time grid must be uniform")
    if dt > MAX_DT / gamma:
        raise GridTooCoarse(f"dt = {dt:.3g} exceeds {MAX_DT}/Gamma = {MAX_DT / gamma:.3g}")
    return dt


@dataclass(frozen=True)
class ModeBudget:
    """Efficiencies and phases of the CAOM / MIM / AOM mode structure.

    ``phase_phi`` and ``epsilon`` are ``None`` when the MIM cannot be
    reflected into the CAOM (``zero_reflection``).
    """

    eta_ext: float
    eta_ref_under: float
    eta_ref_over: float
    epsilon: Optional[float]
    phase_phi: Optional[float]
    phase_chi: Optional[float]
    zero_reflection: bool = False

    def lo_to_cavity_amplitude(self, beta: complex) -> complex:
        """Phase-space point probed by a MIM local oscillator of amplitude ``beta``."""
        if self.eta_ext <= 0:
            raise ZeroReflection("no extraction into the CAOM (eta_ext = 0)")
        return -math.sqrt(self.eta_ref_under / self.eta_ext) * beta

    def cavity_to_lo_amplitude(self, alpha: complex) -> complex:
        """Local-oscillator amplitude needed to probe ``alpha``."""
        if alpha == 0:
            return 0j
        if self.zero_reflection:
            raise ZeroReflection(
                "the MIM is not reflected into the CAOM; every LO amplitude maps to "
                "alpha = 0, so only the phase-space origin can be reconstructed")
        return -math.sqrt(self.eta_ext / self.eta_ref_under) * alpha


def mode_budget(c: CavityCoefficients) -> ModeBudget:
    if c.gamma_total <= 0:
        raise ValueError("mode_budget needs Gamma > 0")
    g = c.gamma_total
    eta_ext = abs(c.t_o) ** 2 / g
    matched = c.t_o * c.t_c / g + c.r_o
    eta_under = abs(matched) ** 2
    eta_over = abs(c.t_o) ** 2 * abs(c.t_c) ** 2 / g ** 2
    if eta_under < ZERO_REFLECTION_TOL:
        return ModeBudget(eta_ext, eta_under, eta_over, None, None, None, True)
    phi = cmath.phase(matched)
    chi = cmath.phase(c.t_o * c.t_c / g) + cmath.phase(c.t_o) - phi
    return ModeBudget(eta_ext, eta_under, eta_over, eta_over / eta_under, phi, chi)


def caom_profile(c: CavityCoefficients) -> ModeProfile:
    g = c.gamma_total
    amp = math.sqrt(g) * cmath.exp(1j * cmath.phase(c.t_o))
    return ModeProfile("caom", amp, (1.0,), c.omega_cav, g)


def build_modes(c: CavityCoefficients):
    """Return the normalized ``(caom, mim, aom)`` profiles."""
    budget = mode_budget(c)
    if budget.zero_reflection:
        raise ZeroReflection("eta_ref_under vanishes: no matched input mode exists")
    g = c.gamma_total
    caom = caom_profile(c)
    mim = ModeProfile("mim", caom.amplitude * cmath.exp(-1j * budget.phase_phi),
                      (1.0,), c.omega_cav, g)
    aom = ModeProfile("aom", math.sqrt(g) * cmath.exp(1j * budget.phase_chi),
                      (-1.0, g), c.omega_cav, g)
    return caom, mim, aom


def reflect(c: CavityCoefficients, profile: ModeProfile, grid) -> ModeProfile:
    """Apply the reflection kernel ``T_c xi*(t1, t2) + R_o delta(t1 - t2)``.

    The causal part only couples inputs at ``0 <= t2 <= t1``; the delta
    term is added pointwise.
    """
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid, c.gamma_total)
    if c.gamma_total * grid[-1] > 1000:
        raise GridTooCoarse("grid extends beyond 1000/Gamma; the envelope under/overflows")
    u = profile.sample(grid)
    rate = 1j * c.omega_cav + 0.5 * c.gamma_total
    out = c.r_o * u
    pos = grid >= 0
    if np.count_nonzero(pos) >= 2:
        tp = grid[pos]
        acc = _cumulative(np.exp(rate * tp) * u[pos], tp)
        out[pos] += c.t_c * c.t_o * np.exp(-rate * tp) * acc
    return ModeProfile("custom", omega=c.omega_cav, gamma=c.gamma_total,
                       grid=grid, values=out)


def mim_from_adjoint_kernel(c: CavityCoefficients, grid) -> ModeProfile:
    """MIM obtained by pulling the CAOM back through the adjoint kernel.

    Evaluated by quadrature; used to cross-check the closed-form MIM.
    """
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid, c.gamma_total)
    budget = mode_budget(c)
    if budget.zero_reflection:
        raise ZeroReflection("eta_ref_under vanishes: no matched input mode exists")
    caom = caom_profile(c).sample(grid)
    rate = 1j * c.omega_cav + 0.5 * c.gamma_total
    pos = grid >= 0
    tp = grid[pos]
    # int_{t1}^{inf} conj(T_c T_o) e^{-conj(rate)(t2 - t1)} caom(t2) dt2, tail beyond grid dropped
    integrand = np.exp(-np.conj(rate) * tp) * caom[pos]
    acc = _cumulative(integrand[::-1], -tp[::-1])[::-1]
    vals = np.conj(c.r_o) * caom
    vals[pos] += np.conj(c.t_c * c.t_o) * np.exp(np.conj(rate) * tp) * acc
    return ModeProfile("custom", omega=c.omega_cav, gamma=c.gamma_total, grid=grid,
                       values=vals / math.sqrt(budget.eta_ref_under))


def _fourier(profile: ModeProfile, omega: float) -> complex:
    # (2 pi)^{-1/2} int U(t) e^{i omega t} dt
    z = 0.5 * profile.gamma + 1j * (profile.omega - omega)
    total = sum(complex(pk) * math.factorial(k) / z ** (k + 1)
                for k, pk in enumerate(profile.poly))
    return profile.amplitude * total / math.sqrt(2 * math.pi)


def spectrum(profile: ModeProfile, omega) -> np.ndarray:
    """Spectral density ``|U(omega)|^2`` from the closed-form Fourier transform."""
    if profile.kind not in ("caom", "aom", "mim"):
        raise ValueError(f"closed-form spectrum not available for kind {profile.kind!r}")
    omega = np.asarray(omega, dtype=float)
    vals = np.vectorize(lambda w: abs(_fourier(profile, w)) ** 2, otypes=[float])(omega)
    return vals if vals.ndim else float(vals)


def lorentzian(omega, gamma: float, omega_cav: float):
    omega = np.asarray(omega, dtype=float)
    return gamma / (2 * np.pi * ((omega - omega_cav) ** 2 + gamma ** 2 / 4))


def gram_schmidt(vectors: Sequence[np.ndarray], grid: np.ndarray) -> list:
    out = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for b in out:
            w = w - quad_inner(b, w, grid) * b
        norm = math.sqrt(quad_inner(w, w, grid).real)
        out.append(w / norm)
    return out


def default_bases(c: CavityCoefficients, n_modes: int, grid):
    """Sampled input and output bases on ``grid``.

    Input: MIM followed by Laguerre functions on the MIM envelope.
    Output: CAOM, AOM, then Laguerre functions on the CAOM envelope.
    Both are Gram-Schmidt orthonormalized on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    caom, mim, aom = build_modes(c)
    g = c.gamma_total
    tp = np.where(grid >= 0, grid, 0.0)

    def laguerre(env, n):
        return np.where(grid >= 0, eval_laguerre(n, g * tp), 0.0) * env

    mim_s, caom_s = mim.sample(grid), caom.sample(grid)
    ins = [mim_s] + [laguerre(mim_s, n) for n in range(1, n_modes)]
    outs = [caom_s, aom.sample(grid)] + [laguerre(caom_s, n) for n in range(2, n_modes)]
    return gram_schmidt(ins, grid), gram_schmidt(outs[:n_modes], grid)


def _check_orthonormal(basis, grid, tol=1e-8):
    gram = np.array([[quad_inner(u, v, grid) for v in basis] for u in basis])
    err = np.max(np.abs(gram - np.eye(len(basis)))) if basis else 0.0
    if err > tol:
        raise NonOrthonormalBasis(f"basis deviates from orthonormality by {err:.3e}")


def discrete_kernel(c: CavityCoefficients, in_basis, out_basis, grid) -> np.ndarray:
    """Matrix ``K[m, n] = <U_n^out, G* U_m^in>`` (input index first).

    Basis elements are arrays sampled on ``grid`` (or profiles).
    """
    grid = np.asarray(grid, dtype=float)
    _check_grid(grid, c.gamma_total)
    ins = [b.sample(grid) if isinstance(b, ModeProfile) else np.asarray(b) for b in in_basis]
    outs = [b.sample(grid) if isinstance(b, ModeProfile) else np.asarray(b) for b in out_basis]
    _check_orthonormal(ins, grid)
    _check_orthonormal(outs, grid)
    kernel = np.empty((len(ins), len(outs)), dtype=complex)
    for m, u in enumerate(ins):
        reflected = reflect(c, ModeProfile("custom", grid=grid, values=u), grid).values
        for n, v in enumerate(outs):
            kernel[m, n] = quad_inner(v, reflected, grid)
    return kernel
