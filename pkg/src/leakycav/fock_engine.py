"""Truncated Fock-space state engine for a single bosonic mode.

States are density matrices in the photon-number basis ``|0>, ..., |N_max>``.
Truncation is never silently renormalized: the trace deficit of a state is
the probability it lost to levels above ``N_max``, and operations raise
:class:`TruncationTooSmall` when that loss exceeds ``tail_tol``.

Quadratures follow ``x(phi) = (a^dag e^{i phi} + a e^{-i phi}) / sqrt(2)``, so
the vacuum has quadrature variance 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import TruncationTooSmall

N_MAX = 32
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    elems: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.elems, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "elems", m)

    @classmethod
    def from_ket(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def fock(cls, n: int, dim: int = N_MAX + 1) -> "DensityMatrix":
        psi = np.zeros(dim, dtype=complex)
        psi[n] = 1.0
        return cls.from_ket(psi)

    @classmethod
    def vacuum(cls, dim: int = N_MAX + 1) -> "DensityMatrix":
        return cls.fock(0, dim)

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return np.clip(np.diagonal(self.elems).real, 0.0, None)

    @property
    def trace(self) -> float:
        return float(np.trace(self.elems).real)

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.dim), np.diagonal(self.elems).real))

    def expect_a(self) -> complex:
        """``<a> = sum_n sqrt(n+1) rho[n+1, n]``."""
        n = np.arange(1, self.dim)
        return complex(np.sum(np.sqrt(n) * np.diagonal(self.elems, offset=-1)))

    def fidelity_pure(self, psi) -> float:
        """``<psi| rho |psi>`` for a ket in the same truncation."""
        psi = np.asarray(psi, dtype=complex)
        return float((psi.conj() @ self.elems @ psi).real)

    def validate(self, tail_tol: float = TAIL_TOL) -> None:
        m = self.elems
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        tr = self.trace
        if not (1.0 - tail_tol <= tr <= 1.0 + 1e-12):
            raise TruncationTooSmall(f"trace {tr!r} outside [1 - {tail_tol:g}, 1]")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix has negative eigenvalues")


@dataclass(frozen=True)
class CountDistribution:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw photocounts by inverse-CDF lookup."""
        cdf = np.cumsum(self.probs)
        u = rng.random(size) * cdf[-1]
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.probs.size - 1)


def coherent_ket(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    logfact = 0.5 * gammaln(n + 1)
    if alpha == 0:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        return psi
    mag = np.exp(n * math.log(abs(alpha)) - logfact - 0.5 * abs(alpha) ** 2)
    return mag * np.exp(1j * n * np.angle(alpha))


def _poisson_tail(mean: float, dim: int) -> float:
    return float(poisson.sf(dim - 1, mean)) if mean > 0 else 0.0


def _check_amplitude(alpha: complex, dim: int, tail_tol: float) -> None:
    if abs(alpha) ** 2 >= dim / 4:
        raise TruncationTooSmall(f"|alpha|^2 = {abs(alpha) ** 2:.3g} needs dim > {4 * abs(alpha) ** 2:.3g}")
    tail = _poisson_tail(abs(alpha) ** 2, dim)
    if tail > tail_tol:
        raise TruncationTooSmall(f"coherent tail beyond dim={dim} is {tail:.2e}")


def coherent_state(alpha: complex, dim: int = N_MAX + 1,
                   tail_tol: float = TAIL_TOL) -> DensityMatrix:
    _check_amplitude(alpha, dim, tail_tol)
    return DensityMatrix.from_ket(coherent_ket(alpha, dim))


def odd_cat_ket(delta: complex, dim: int) -> np.ndarray:
    """``N (|delta> - |-delta>)`` with the exact normalization."""
    norm2 = -0.5 / math.expm1(-2.0 * abs(delta) ** 2)
    psi = math.sqrt(norm2) * (coherent_ket(delta, dim) - coherent_ket(-delta, dim))
    psi[::2] = 0.0
    return psi


def odd_cat_state(delta: complex, dim: int = N_MAX + 1,
                  tail_tol: float = TAIL_TOL) -> DensityMatrix:
    if delta == 0:
        raise ValueError("the odd cat state is undefined for delta = 0")
    _check_amplitude(delta, dim, tail_tol)
    psi = odd_cat_ket(delta, dim)
    tail = 1.0 - float(np.vdot(psi, psi).real)
    if tail > tail_tol:
        raise TruncationTooSmall(f"cat state tail beyond dim={dim} is {tail:.2e}")
    return DensityMatrix.from_ket(psi)


def _loss_operators(eta: float, dim: int):
    # Kraus operators E_k = sum_n sqrt(C(n, k) eta^{n-k} (1-eta)^k) |n-k><n|
    n = np.arange(dim)
    ops = []
    for k in range(dim):
        m = n[k:]
        logc = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
        with np.errstate(divide="ignore"):
            logw = logc + (m - k) * np.log(eta) + k * np.log1p(-eta)
        w = np.exp(0.5 * logw)
        e = np.zeros((dim, dim))
        e[m - k, m] = w
        ops.append(e)
    return ops


def loss_channel(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Beam splitter of transmissivity ``eta`` with a vacuum second port."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return DensityMatrix(rho.elems.copy())
    if eta == 0.0:
        out = np.zeros_like(rho.elems)
        out[0, 0] = rho.trace
        return DensityMatrix(out)
    m = rho.elems
    out = sum(e @ m @ e.T for e in _loss_operators(eta, rho.dim))
    return DensityMatrix(out)


def thin_populations(pops: np.ndarray, eta: float) -> np.ndarray:
    """Photon-number distribution after loss, computed on populations only."""
    dim = pops.size
    out = np.zeros(dim)
    for e in _loss_operators(eta, dim):
        out += (e ** 2) @ pops
    return out


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """Exact elements ``<m|D(alpha)|n>`` for ``m, n < dim``.

    Columns come from ``D|n> = (a^dag - alpha^*)^n / sqrt(n!) |alpha>``; the
    truncated ``a^dag`` only drops components above the kept rows, so every
    stored element is exact.
    """
    d = np.zeros((dim, dim), dtype=complex)
    d[:, 0] = coherent_ket(alpha, dim)
    sq = np.sqrt(np.arange(dim))
    for n in range(1, dim):
        prev = d[:, n - 1]
        raised = np.zeros(dim, dtype=complex)
        raised[1:] = sq[1:] * prev[:-1]
        d[:, n] = (raised - np.conj(alpha) * prev) / math.sqrt(n)
    return d


def displace(rho: DensityMatrix, alpha: complex, tail_tol: float = TAIL_TOL) -> DensityMatrix:
    """Apply ``D(alpha) rho D(alpha)^dag`` within the truncation."""
    if alpha == 0:
        return DensityMatrix(rho.elems.copy())
    d = displacement_matrix(alpha, rho.dim)
    out = d @ rho.elems @ d.conj().T
    leaked = rho.trace - float(np.trace(out).real)
    if leaked > tail_tol:
        raise TruncationTooSmall(
            f"displacement by |alpha|={abs(alpha):.3g} leaks {leaked:.2e} above dim={rho.dim}")
    return DensityMatrix(out)


def photon_distribution(rho: DensityMatrix) -> CountDistribution:
    return CountDistribution(rho.populations)


def output_mode_state(budget, rho_cav: DensityMatrix, beta: complex, eta_c: float,
                      tail_tol: float = TAIL_TOL) -> DensityMatrix:
    """State of the CAOM as seen by the detector.

    The intracavity state is attenuated by ``eta_ext``, displaced by the
    reflected MIM amplitude ``sqrt(eta_ref_under) beta`` (the MIM carries the
    phase ``e^{-i phi}``, so the coupling is real), then attenuated by the
    counting efficiency. Noise channels only add vacuum.
    """
    if not 0.0 <= eta_c <= 1.0:
        raise ValueError(f"eta_c must lie in [0, 1], got {eta_c}")
    extracted = loss_channel(rho_cav, budget.eta_ext)
    shifted = displace(extracted, math.sqrt(budget.eta_ref_under) * beta, tail_tol)
    return loss_channel(shifted, eta_c)


def output_count_distribution(budget, rho_cav: DensityMatrix, beta: complex, eta_c: float,
                              tail_tol: float = TAIL_TOL) -> CountDistribution:
    """Photocount distribution of the total outgoing field.

    CAOM counts convolved with the Poissonian counts of the coherent
    excitation the MIM leaves in the AOM.
    """
    mode0 = output_mode_state(budget, rho_cav, beta, eta_c, tail_tol)
    p0 = mode0.populations
    mean1 = eta_c * budget.eta_ref_over * abs(beta) ** 2
    mean_total = mode0.mean_photon_number() + mean1
    n_cut = max(int(4 * mean_total + 20), p0.size)
    p1 = poisson.pmf(np.arange(n_cut), mean1) if mean1 > 0 else np.eye(1, n_cut)[0]
    probs = np.convolve(p0, p1)[:n_cut]
    missing = 1.0 - probs.sum()
    if missing > tail_tol:
        raise TruncationTooSmall(f"count distribution misses {missing:.2e} of probability")
    return CountDistribution(probs)


def phase_space_weights(s: float, dim: int) -> np.ndarray:
    """``(1 - 2/(1-s))^n`` - the normally ordered ``exp(-2 n/(1-s))`` in Fock form."""
    if s >= 1:
        raise ValueError("s must be < 1")
    w = (s + 1.0) / (s - 1.0)
    n = np.arange(dim)
    return np.where(n == 0, 1.0, w ** n)


def exact_phase_space(rho: DensityMatrix, alpha: complex, s: float,
                      tail_tol: float = TAIL_TOL) -> float:
    """s-parametrized quasiprobability ``P(alpha; s)`` (Husimi Q at ``s = -1``)."""
    shifted = displace(rho, -alpha, tail_tol)
    w = phase_space_weights(s, rho.dim)
    return float(2.0 / (math.pi * (1.0 - s)) * np.dot(w, np.diagonal(shifted.elems).real))


def hermite_functions(x, n_max: int) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``psi_n(x)``, shape ``(n_max + 1, len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.zeros((n_max + 1, x.size))
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if n_max >= 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


class QuadratureDistribution:
    """Density of ``x(phi)`` for a state; ``phase=None`` averages over phi.

    Sampling uses an inverse CDF tabulated on a fine grid.
    """

    def __init__(self, rho: DensityMatrix, phase: Optional[float] = None,
                 grid_step: float = 1e-3):
        self.rho = rho
        self.phase = phase
        n = rho.dim
        self._half_width = math.sqrt(2.0 * n + 1.0) + 8.0
        self._grid_step = grid_step
        self._cdf = None
        if phase is None:
            self._matrix = np.diag(np.diagonal(rho.elems).real)
        else:
            k = np.arange(n)
            rot = np.exp(1j * (k[None, :] - k[:, None]) * phase)
            self._matrix = rho.elems * rot

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        psi = hermite_functions(x.ravel(), self.rho.dim - 1)
        vals = np.einsum("mx,mn,nx->x", psi, self._matrix, psi).real
        return vals.reshape(x.shape)

    def _table(self):
        if self._cdf is None:
            xs = np.arange(-self._half_width, self._half_width + self._grid_step,
                           self._grid_step)
            dens = np.clip(self.pdf(xs), 0.0, None)
            cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))))
            self._cdf = (xs, cdf / cdf[-1])
        return self._cdf

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        xs, cdf = self._table()
        return np.interp(rng.random(size), cdf, xs)


def quadrature_distribution(rho: DensityMatrix, phase: Optional[float] = None
                            ) -> QuadratureDistribution:
    return QuadratureDistribution(rho, phase)
