"""Independent reference implementations used only by the tests.

None of these share code paths with the package beyond the data classes.
"""

import math

import mpmath as mp
import numpy as np
from scipy.special import dawsn


def limit_fg_quadrature(t, gamma, alpha, dps=25, max_panels=600):
    """``f`` and ``g`` as averages over the Gaussian bath field, at ``dps`` digits.

    With ``u ~ Exp(1)`` (the squared modulus of a complex Gaussian field),
    ``kappa = gamma / r`` and ``omega = r / 4`` where
    ``r = sqrt(gamma^2 + 2 alpha^2 u)``:
    ``f = E[kappa^2 sin^2(omega t)]`` and ``g = E[(kappa/2) sin(2 omega t)]``.

    The average is taken over ``r``, where the integrands are a sinusoid in
    ``r`` times ``exp(-u)``; panels follow the oscillation period.
    """
    with mp.workdps(dps):
        g_, a_, t_ = mp.mpf(gamma), mp.mpf(alpha), mp.mpf(t)
        scale = 2 * a_**2

        def weight(r):
            return mp.exp(-(r * r - g_**2) / scale) / a_**2

        def f_int(r):
            return weight(r) * g_**2 / r * mp.sin(r * t_ / 4) ** 2

        def g_int(r):
            return weight(r) * g_ / 2 * mp.sin(r * t_ / 2)

        r_max = mp.sqrt(g_**2 + scale * 90)
        span = r_max - g_
        width = span / max_panels
        if t_ > 0:
            width = max(min(4 * mp.pi / t_, span / 8), width)
        n = int(mp.ceil(span / width))
        pts = [g_ + k * span / n for k in range(n + 1)] + [mp.inf]
        return float(mp.quad(f_int, pts)), float(mp.quad(g_int, pts))


def two_spin_population(t, gamma, x0):
    """Central-spin population with the bath switched off: a 4x4 exponential by hand.

    Only the ``{|+->, |-+>}`` pair rotates, at angle ``gamma t / 2``.
    """
    c, s = math.cos(gamma * t / 2), math.sin(gamma * t / 2)
    # amplitude of |+-> after evolving |+-> and |-+>
    u22, u23 = c, -1j * s
    mixed = (x0.rho22 * u22 + x0.rho32 * u23) * np.conj(u22) + (x0.rho23 * u22 + x0.rho33 * u23) * np.conj(u23)
    return x0.rho11 + mixed.real


def tcl2_matrix(N, gamma, alpha, coeff22):
    """Generator ``K`` of ``dy/dt = t K y`` built from the sector equations, keyed by labels.

    Returns ``(K, labels)`` with labels ``(component, two_j, two_m)``; the
    component order is R11, r11, R22, r22.
    """
    labels = []
    for comp in ("R11", "r11", "R22", "r22"):
        for two_j in range(N, -1, -2):
            for two_m in range(-two_j, two_j + 1, 2):
                labels.append((comp, two_j, two_m))
    index = {lab: i for i, lab in enumerate(labels)}
    K = np.zeros((len(labels), len(labels)))

    def link(a, b, rate):
        ia, ib = index[a], index[b]
        K[ia, ia] -= rate
        K[ia, ib] += rate
        K[ib, ib] -= rate
        K[ib, ia] += rate

    c11 = alpha**2 / (2 * N)
    for two_j in range(N, -1, -2):
        j = two_j / 2
        for two_m in range(-two_j, two_j + 1, 2):
            m = two_m / 2
            if two_m + 2 <= two_j:
                b = (j - m) * (j + m + 1)
                link(("R11", two_j, two_m), ("r11", two_j, two_m + 2), c11 * b)
                link(("R22", two_j, two_m), ("r22", two_j, two_m + 2), coeff22 * b)
            link(("r11", two_j, two_m), ("R22", two_j, two_m), gamma**2 / 2)
    return K, labels


def tcl2_closed_form(times, N, gamma, alpha, coeff22, y0, source):
    """Exact solution of ``dy/dt = t K y + source`` for symmetric ``K``.

    In the eigenbasis of ``K`` each mode obeys ``x' = mu t x + s`` with solution
    ``x(t) = exp(mu t^2/2) x(0) + s * D(sqrt(-mu/2) t) / sqrt(-mu/2)`` where
    ``D`` is Dawson's integral (``s t`` when ``mu = 0``).
    """
    K, labels = tcl2_matrix(N, gamma, alpha, coeff22)
    mu, V = np.linalg.eigh(K)
    mu = np.minimum(mu, 0.0)
    x0 = V.T @ y0
    s = V.T @ source
    out = []
    for t in times:
        a = -mu / 2
        safe = np.where(a > 1e-14, a, 1.0)
        integral = np.where(a > 1e-14, dawsn(np.sqrt(safe) * t) / np.sqrt(safe), t)
        x = np.exp(mu * t * t / 2) * x0 + s * integral
        out.append(V @ x)
    return np.array(out), labels
