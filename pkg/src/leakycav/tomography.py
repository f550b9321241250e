"""Phase-space reconstruction of the intracavity state from outgoing-field data.

Two pipelines:

* unbalanced homodyning - photocounts of the signal displaced by a weak MIM
  local oscillator feed an alternating series in ``p_n``;
* cascaded homodyning - balanced homodyne data of the displaced signal with
  a phase-randomized second oscillator are averaged against a sampling
  function built on the Dawson integral. Only the CAOM enters the statistic,
  so AOM noise drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .bs_network import coefficients, reflecting_scheme
from .errors import (DegenerateScheme, DomainError, EmptySamples, NoIntersection,
                     SeriesDiverging)
from .fock_engine import (CountDistribution, DensityMatrix, TAIL_TOL, output_mode_state,
                          quadrature_distribution)
from .temporal_modes import ModeBudget, mode_budget

SERIES_CUT = 200
SERIES_FLOOR = 1e-14
SERIES_TOL = 1e-6


def xi_factor(s: float, eta: float) -> float:
    """Weight ``xi`` of the alternating photocount series."""
    g = eta * (1.0 - s)
    if g <= 0:
        raise DomainError(f"eta * (1 - s) must be positive, got {g}")
    return (2.0 - g) / g


def require_reconstructible(budget: ModeBudget) -> None:
    if budget.zero_reflection:
        raise DegenerateScheme(
            "the cavity cannot mode-match: every local-oscillator amplitude maps to "
            "alpha = 0, so only the phase-space origin is accessible")


@dataclass(frozen=True)
class UnbalancedConfig:
    s: float
    eta_c: float
    budget: ModeBudget
    beta_grid: tuple = ()
    series_cut: int = SERIES_CUT

    def __post_init__(self):
        if self.s >= 1:
            raise DomainError("s must be < 1")
        if not 0.0 < self.eta_c <= 1.0:
            raise ValueError(f"eta_c must lie in (0, 1], got {self.eta_c}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"overall efficiency {self.eta} outside (0, 1]")
        object.__setattr__(self, "beta_grid", tuple(complex(b) for b in self.beta_grid))

    @property
    def eta(self) -> float:
        return self.budget.eta_ext * self.eta_c

    @property
    def xi(self) -> float:
        return xi_factor(self.s, self.eta)

    @property
    def epsilon(self) -> float:
        return 0.0 if self.budget.epsilon is None else self.budget.epsilon

    def prefactor(self, alpha: complex) -> float:
        s = self.s
        return 2.0 / (math.pi * (1.0 - s)) * math.exp(2.0 * self.epsilon * abs(alpha) ** 2 / (1.0 - s))


@dataclass(frozen=True)
class CascadedConfig:
    s: float
    eta_c: float
    budget: ModeBudget
    alpha_grid: tuple = ()
    r: float = 10.0
    samples_per_point: int = 100_000

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("LO2 amplitude r must be positive")
        if not 0.0 < self.eta_c <= 1.0:
            raise ValueError(f"eta_c must lie in (0, 1], got {self.eta_c}")
        if self.samples_per_point < 1:
            raise ValueError("samples_per_point must be >= 1")
        object.__setattr__(self, "alpha_grid", tuple(complex(a) for a in self.alpha_grid))

    @property
    def eta(self) -> float:
        return self.budget.eta_ext * self.eta_c


@dataclass(frozen=True)
class SeriesResult:
    value: float
    n_terms: int
    last_term: float    # |xi^N p_N| times the prefactor
    tail_bound: float   # bound on the omitted terms, times the prefactor
    ok: bool


def unbalanced_reconstruct(p: CountDistribution, alpha: complex, cfg: UnbalancedConfig,
                           tol: float = SERIES_TOL, strict: bool = True) -> SeriesResult:
    """Quasiprobability at ``alpha`` from an exact photocount distribution.

    Terms beyond the last ``p_n >= 1e-14`` (or ``series_cut``) are dropped;
    their contribution is bounded by ``|xi|^n`` times the dropped mass, plus
    ``|xi|^(N+1)`` times any probability missing from ``p``. With ``strict``
    a bound above ``tol`` raises :class:`SeriesDiverging`; otherwise the
    result is returned with ``ok = False``.
    """
    probs = np.asarray(p.probs, dtype=float)
    total = float(probs.sum())
    if total < 1.0 - TAIL_TOL or total > 1.0 + 1e-9:
        raise ValueError(f"count distribution is not normalized (sum = {total})")
    xi = cfg.xi
    pref = cfg.prefactor(alpha)
    above = np.nonzero(probs >= SERIES_FLOOR)[0]
    last = int(above[-1]) if above.size else 0
    n_terms = min(last, cfg.series_cut, probs.size - 1) + 1
    n = np.arange(probs.size)
    terms = (-xi) ** n.astype(float) * probs
    value = pref * float(np.sum(terms[:n_terms]))
    dropped = float(np.sum(np.abs(terms[n_terms:])))
    missing = max(0.0, 1.0 - total)
    tail = pref * (dropped + abs(xi) ** max(n_terms, probs.size) * missing)
    last_term = pref * abs(terms[n_terms - 1])
    ok = tail <= tol
    if strict and not ok:
        raise SeriesDiverging(
            f"series tail bound {tail:.2e} exceeds {tol:.1e} at alpha={alpha} (xi={xi:.4f})")
    return SeriesResult(value, n_terms, last_term, tail, ok)


def unbalanced_monte_carlo(counts: Sequence[int], alpha: complex, cfg: UnbalancedConfig):
    """Sample-mean estimator of the series from recorded photocounts.

    Returns ``(estimate, stderr)``.
    """
    n = np.asarray(counts)
    if n.size == 0:
        raise EmptySamples("no photocount events")
    w = (-cfg.xi) ** n.astype(float)
    pref = cfg.prefactor(alpha)
    stderr = pref * float(np.std(w, ddof=1)) / math.sqrt(n.size) if n.size > 1 else math.inf
    return pref * float(np.mean(w)), stderr


# Dawson integral: Taylor series near zero, Rybicki's sampled-Gaussian sum elsewhere.
_RYBICKI_H = 0.2
_RYBICKI_N = 35  # odd; |n h| reaches 7, so omitted terms are below exp(-49)
_RYBICKI_ODD = np.arange(-_RYBICKI_N, _RYBICKI_N + 1, 2, dtype=float)
_RYBICKI_W = np.exp(-(_RYBICKI_ODD * _RYBICKI_H) ** 2)
_TAYLOR_EDGE = 0.2


def _dawson_taylor(x: np.ndarray) -> np.ndarray:
    # sum_k (-2)^k x^(2k+1) / (2k+1)!!
    x2 = x * x
    term = x.copy()
    out = x.copy()
    for k in range(1, 16):
        term = term * (-2.0 * x2) / (2 * k + 1)
        out = out + term
    return out


def _dawson_rybicki(x: np.ndarray) -> np.ndarray:
    n0 = 2.0 * np.round(0.5 * x / _RYBICKI_H)
    xp = x - n0 * _RYBICKI_H
    # exp(-(xp - n h)^2) = exp(-xp^2) exp(-(n h)^2) exp(2 xp n h)
    out = np.zeros_like(x)
    for n, w in zip(_RYBICKI_ODD, _RYBICKI_W):
        out += w * np.exp(2.0 * xp * n * _RYBICKI_H) / (n0 + n)
    return np.exp(-xp * xp) * out / math.sqrt(math.pi)


def dawson(x):
    """Dawson integral ``F(x) = exp(-x^2) int_0^x exp(t^2) dt``."""
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr).ravel()
    out = np.empty_like(ax)
    small = ax < _TAYLOR_EDGE
    out[small] = _dawson_taylor(ax[small])
    out[~small] = _dawson_rybicki(ax[~small])
    out = np.sign(arr).ravel() * out
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def f00(x):
    """``2 - 4 x F(x)``; even, equal to 2 at the origin and ~ -1/x^2 far out."""
    x = np.asarray(x, dtype=float)
    out = 2.0 - 4.0 * x * dawson(x)
    return float(out) if out.ndim == 0 else out


def sampling_function(x, s: float, eta: float):
    """Kernel turning phase-averaged quadrature data into ``P(alpha; s)``."""
    g = eta * (1.0 - s) - 1.0
    if g <= 0:
        raise DomainError(
            f"eta * (1 - s) = {eta * (1.0 - s):.4g} must exceed 1; lower s or raise eta")
    return eta / (math.pi * g) * f00(np.asarray(x, dtype=float) / math.sqrt(g))


def quadrature_from_counts(differences, r: float) -> np.ndarray:
    """Quadrature estimates from balanced photocount differences at LO amplitude ``r``."""
    return np.asarray(differences, dtype=float) / (math.sqrt(2.0) * r)


def cascaded_reconstruct(samples: Sequence[float], alpha: complex, s: float, eta: float):
    """``(estimate, stderr)`` of ``P(alpha; s)`` from quadrature samples.

    ``alpha`` only labels the point; the samples must already have been taken
    at the matching local-oscillator amplitude.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySamples("no quadrature samples")
    vals = sampling_function(x, s, eta)
    stderr = float(np.std(vals, ddof=1)) / math.sqrt(x.size) if x.size > 1 else math.inf
    return float(np.mean(vals)), stderr


def simulate_quadrature_samples(budget: ModeBudget, rho_cav: DensityMatrix, beta: complex,
                                eta_c: float, count: int, rng: np.random.Generator,
                                r: Optional[float] = None) -> np.ndarray:
    """Phase-randomized homodyne samples of the CAOM.

    Draws from the phase-averaged quadrature density of the detected mode-0
    state, which is the marginal of a uniform phase followed by ``x | phi``.
    With ``r`` given, each sample is recorded as an integer photocount
    difference ``round(sqrt(2) r x)`` and mapped back, modelling the finite
    resolution of the balanced detector.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    state = output_mode_state(budget, rho_cav, beta, eta_c)
    x = quadrature_distribution(state, None).sample(count, rng)
    if r is not None:
        x = quadrature_from_counts(np.round(math.sqrt(2.0) * r * x), r)
    return x


def reflecting_epsilon(eta_ext: float) -> float:
    """AOM weight of the totally reflecting (``|R_o| = 1``) cavity family."""
    b = mode_budget(coefficients(reflecting_scheme(eta_ext)))
    return b.epsilon


def tradeoff_curves(eta_c: float, s: float = -1.0, points: int = 199):
    """``(eta_ext, xi, epsilon)`` rows across the open unit interval."""
    grid = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return [(float(e), xi_factor(s, e * eta_c), reflecting_epsilon(float(e))) for e in grid]


def tradeoff_intersection(eta_c: float, s: float = -1.0, xtol: float = 1e-13):
    """``(eta_ext, value)`` where ``xi`` and ``epsilon`` coincide."""
    if not 0.0 < eta_c <= 1.0:
        raise ValueError(f"eta_c must lie in (0, 1], got {eta_c}")

    def gap(e):
        return xi_factor(s, e * eta_c) - reflecting_epsilon(e)

    lo, hi = 1e-6, 1.0 - 1e-6
    try:
        g_lo, g_hi = gap(lo), gap(hi)
    except DomainError as exc:
        raise NoIntersection(str(exc)) from exc
    if g_lo * g_hi > 0:
        raise NoIntersection(f"xi and epsilon do not cross in (0, 1) for eta_c={eta_c}, s={s}")
    root = brentq(gap, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return root, xi_factor(s, root * eta_c)
