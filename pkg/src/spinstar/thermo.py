"""Central-spin population for an infinite bath.

In the limit the bath enters only through two functions of time, ``f`` and
``g``. ``f`` is a power series in ``(gamma t)^2`` whose coefficients are
derivatives of ``exp(-A/2)/A`` at ``A = gamma^2/alpha^2``; ``g`` is a
difference of complex error functions. They are linked by
``f(t) = (gamma/2) * integral_0^t g``, which gives a second route to ``f``
wherever the series cancels too badly to be trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAlpha, NonConvergent, SolverError
from .faddeeva import erf_complex, faddeeva
from .model import ModelParams, XState

MAX_TERMS = 500
F_TOL = 1e-16
# absolute rounding budget of the series before it is declared ill-conditioned
F_ROUNDING_BUDGET = 1e-12
REALITY_TOL = 1e-10
_EPS = float(np.finfo(float).eps)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class FSeries:
    value: float
    terms_used: int
    residual: float
    rounding_error: float


@dataclass(frozen=True)
class LimitFunctions:
    f_val: float
    g_val: float
    f_terms_used: int
    f_truncation_residual: float


def _check_alpha(alpha: float) -> None:
    if alpha <= 0.0:
        raise DegenerateAlpha("the limit functions need alpha > 0; use the small-alpha expansion")


def f_series(t: float, gamma: float, alpha: float, tol: float = F_TOL) -> FSeries:
    """Sum the derivative series for ``f(t)``.

    Term ``n`` is ``A c_n D_{n-1}(A) e^{A/2}`` with
    ``c_n = (gamma t)^{2n} / (2^{n+2} (2n)!)``. The two exponentials cancel
    analytically, and ``A D_k + k D_{k-1} = (-1/2)^k e^{-A/2}`` becomes a
    recurrence on the terms themselves, so no factorial is ever formed.

    Stops after two consecutive terms below ``tol`` relative to the running
    sum. Raises :class:`NonConvergent` when that does not happen within
    ``MAX_TERMS`` terms, or when alternating cancellation would cost more than
    ``F_ROUNDING_BUDGET`` in absolute accuracy.
    """
    _check_alpha(alpha)
    t, gamma, alpha = float(t), float(gamma), float(alpha)
    if t < 0:
        raise SolverError(f"negative time {t}")
    if t == 0.0:
        return FSeries(0.0, 0, 0.0, 0.0)
    A = (gamma / alpha) ** 2
    x = (gamma * t) ** 2
    c = x / 16.0  # c_1
    term = c  # A * c_1 * D_0 e^{A/2}
    bound = c
    terms = [term]
    rounding = bound
    quiet = 0
    for n in range(1, MAX_TERMS):
        k = n  # derivative order entering term n + 1
        ratio = x / (4.0 * (k + 1) * (2 * k + 1))
        c *= ratio
        term = c * (-0.5) ** k - (k / A) * ratio * term
        bound = c * 0.5**k + (k / A) * ratio * bound
        if not (math.isfinite(term) and math.isfinite(bound)):
            raise NonConvergent(f"f series overflowed at term {n + 1} (alpha/gamma={alpha / gamma:g})")
        terms.append(term)
        rounding += (k + 1) * bound
        total = math.fsum(terms)
        if abs(term) <= tol * max(abs(total), 1e-300):
            quiet += 1
            if quiet == 2:
                err = 4.0 * _EPS * rounding
                if err > F_ROUNDING_BUDGET:
                    raise NonConvergent(
                        f"f series loses too many digits (estimated error {err:.1e}) "
                        f"at gamma*t={gamma * t:g}, alpha/gamma={alpha / gamma:g}"
                    )
                return FSeries(total, n + 1, abs(term), err)
        else:
            quiet = 0
    raise NonConvergent(f"f series did not converge in {MAX_TERMS} terms")


def _g_complex(t, gamma: float, alpha: float):
    """Complex assembly of ``g`` before projection to the real axis.

    ``exp(gamma^2/2alpha^2 - alpha^2 t^2/8) erf(z_-+)`` is rewritten with
    ``erf(z) = 1 - exp(-z^2) w(iz)`` so that the Gaussian prefactors cancel
    exactly; only bounded Faddeeva values remain.
    """
    t = np.asarray(t, dtype=float)
    x = gamma / (math.sqrt(2.0) * alpha)
    y = alpha * t / (2.0 * math.sqrt(2.0))
    phase = np.exp(0.5j * gamma * t)
    w_minus = faddeeva(-y + 1j * x)
    w_plus = faddeeva(y + 1j * x)
    pref = 1j * gamma / (4.0 * alpha) * math.sqrt(math.pi / 2.0)
    return pref * (w_minus / phase - phase * w_plus)


def g_values(times, gamma: float, alpha: float) -> np.ndarray:
    _check_alpha(alpha)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise SolverError("negative time in g evaluation")
    val = _g_complex(times, gamma, alpha)
    worst = np.max(np.abs(val.imag), initial=0.0)
    if worst >= REALITY_TOL:
        raise SolverError(f"g(t) has imaginary residue {worst:.2e}")
    return val.real


def g_function(t: float, gamma: float, alpha: float) -> float:
    return float(g_values([t], gamma, alpha)[0])


def g_function_erf_form(t: float, gamma: float, alpha: float) -> float:
    """``g`` exactly as the difference of two complex ``erf`` values.

    Overflows once ``gamma^2/(2 alpha^2)`` or ``alpha t`` get large; kept for
    cross-checks in the moderate regime. Raises :class:`NonConvergent` when
    the unscaled prefactor is out of floating-point range.
    """
    _check_alpha(alpha)
    zm = (2 * gamma - 1j * alpha**2 * t) / (2 * math.sqrt(2) * alpha)
    zp = (2 * gamma + 1j * alpha**2 * t) / (2 * math.sqrt(2) * alpha)
    exponent = gamma**2 / (2 * alpha**2) - alpha**2 * t**2 / 8
    if abs(exponent) > 700.0:
        raise NonConvergent(f"unscaled erf form out of range (exponent {exponent:.3g}); use g_function")
    pref = 1j * gamma / (4 * alpha) * math.exp(exponent)
    val = pref * math.sqrt(math.pi / 2) * (erf_complex(zm) - erf_complex(zp))
    return val.real


def _panel_width(gamma: float, alpha: float) -> float:
    return 2.0 / (gamma + 3.0 * alpha)


def _weighted_rows(values: np.ndarray) -> np.ndarray:
    """Gauss-Legendre sum of every row, correctly rounded so it cannot depend on the array shape."""
    return np.array([math.fsum(row) for row in values * _GL_WEIGHTS])


def f_quadrature(times, gamma: float, alpha: float) -> np.ndarray:
    """``f(t) = (gamma/2) * integral_0^t g(s) ds`` by composite 20-point Gauss-Legendre.

    Panels sit on a fixed lattice of width ``2/(gamma + 3 alpha)``, so the
    value at a given ``t`` does not depend on the other requested times.
    """
    _check_alpha(alpha)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        return times.copy()
    h = _panel_width(gamma, alpha)
    n_full = np.floor(times / h).astype(int)
    top = int(n_full.max())
    half = 0.5 * h
    if top > 0:
        mids = (np.arange(top) + 0.5) * h
        nodes = mids[:, None] + half * _GL_NODES[None, :]
        panel = half * _weighted_rows(g_values(nodes.ravel(), gamma, alpha).reshape(nodes.shape))
        cumulative = np.concatenate([[0.0], np.cumsum(panel)])
    else:
        cumulative = np.zeros(1)
    lo = n_full * h
    rem_half = 0.5 * (times - lo)
    nodes = (lo + rem_half)[:, None] + rem_half[:, None] * _GL_NODES[None, :]
    partial = rem_half * _weighted_rows(g_values(nodes.ravel(), gamma, alpha).reshape(nodes.shape))
    return 0.5 * gamma * (cumulative[n_full] + partial)


def f_values(times, gamma: float, alpha: float, tol: float = F_TOL) -> np.ndarray:
    """``f`` on a grid: the series where it is well conditioned, quadrature of ``g`` elsewhere."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty_like(times)
    fallback = []
    for i, t in enumerate(times):
        try:
            out[i] = f_series(t, gamma, alpha, tol).value
        except NonConvergent:
            fallback.append(i)
    if fallback:
        out[fallback] = f_quadrature(times[fallback], gamma, alpha)
    return out


def f_function(t: float, gamma: float, alpha: float) -> float:
    return float(f_values([t], gamma, alpha)[0])


def limit_functions(t: float, gamma: float, alpha: float, tol: float = F_TOL) -> LimitFunctions:
    try:
        series = f_series(t, gamma, alpha, tol)
        f_val, used, resid = series.value, series.terms_used, series.residual
    except NonConvergent:
        f_val, used, resid = float(f_quadrature([t], gamma, alpha)[0]), 0, 0.0
    return LimitFunctions(f_val, g_function(t, gamma, alpha), used, resid)


def f_small_alpha(t, gamma: float, alpha: float):
    """Expansion of ``f`` through order ``(alpha/gamma)^2``."""
    t = np.asarray(t, dtype=float)
    s4 = np.sin(gamma * t / 4) ** 2
    return s4 + (alpha / gamma) ** 2 * (-2 * s4 + gamma * t / 4 * np.sin(gamma * t / 2))


def g_small_alpha(t, gamma: float, alpha: float):
    """Expansion of ``g`` through order ``(alpha/gamma)^2``.

    Obtained by expanding the Gaussian average to first order in
    ``alpha^2/gamma^2``; it is the derivative of :func:`f_small_alpha` divided
    by ``gamma/2``, so the two expansions stay consistent with
    ``f' = (gamma/2) g``.
    """
    t = np.asarray(t, dtype=float)
    s, c = np.sin(gamma * t / 2), np.cos(gamma * t / 2)
    return 0.5 * s + alpha**2 / (4 * gamma**2) * (gamma * t * c - 2 * s)


def g_small_alpha_enveloped(t, gamma: float, alpha: float):
    """Small-alpha form of ``g`` resummed with a Gaussian envelope ``exp(-alpha^2 t^2 / 8)``.

    This is the commonly quoted enveloped form. It agrees with ``g`` only to
    order ``alpha^0`` uniformly: its ``alpha^2`` coefficient differs from
    :func:`g_small_alpha`, so its error shrinks like ``alpha^2`` rather than
    ``alpha^4``.
    """
    t = np.asarray(t, dtype=float)
    s, c = np.sin(gamma * t / 2), np.cos(gamma * t / 2)
    corr = alpha**2 / (4 * gamma**2) * (gamma * t * c + (gamma**2 * t**2 / 4 - 2) * s)
    return 0.5 * np.exp(-(alpha**2) * t**2 / 8) * (s + corr)


def limit_validity(params: ModelParams) -> str:
    """``"ok"`` for ``alpha <= gamma``, else ``"questionable"``: the limit is asymptotic in ``alpha``."""
    return "ok" if params.alpha <= params.gamma else "questionable"


def population_limit_grid(times, params: ModelParams, x0: XState, tol: float = F_TOL) -> np.ndarray:
    gamma, alpha = params.gamma, params.alpha
    _check_alpha(alpha)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    f = f_values(times, gamma, alpha, tol)
    g = g_values(times, gamma, alpha)
    c1 = x0.rho11 + x0.rho22 - x0.rho33 - x0.rho44
    c2 = 1j * (x0.rho23 - x0.rho32)
    d = x0.rho11 - x0.rho22 + x0.rho33 - x0.rho44
    cos = np.cos(gamma * times / 2)
    sin = np.sin(gamma * times / 2)
    osc = c1 * cos + c2 * sin
    pop = 0.5 * (1 + osc) - osc * f + (d * sin + c2 * cos) * g
    worst = np.max(np.abs(pop.imag), initial=0.0)
    if worst >= REALITY_TOL:
        raise SolverError(f"limit population has imaginary residue {worst:.2e}")
    pop = pop.real
    if np.any(pop < -1e-9) or np.any(pop > 1 + 1e-9):
        raise SolverError(f"limit population left [0, 1]: range [{pop.min()}, {pop.max()}]")
    return np.clip(pop, 0.0, 1.0)


def population_limit(t: float, params: ModelParams, x0: XState, tol: float = F_TOL) -> float:
    return float(population_limit_grid([t], params, x0, tol)[0])
