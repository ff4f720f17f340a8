"""Closed-form evolution operator and exact central-spin population for a finite bath.

The two-qubit block of ``U(t) = exp(-iHt)`` is a 4x4 matrix of operator-valued
entries, each a word ``prefactor * left_ladder * diag(J_z, J^2) * right_ladder``
acting on collective bath states ``|j, m>``. All 16 words are registered in
:data:`WORDS`. Every diagonal function is a combination of the sector scalars
``F``, ``G+-``, ``C+-`` evaluated at the ``m`` reached after the right-hand
ladder.

The rows for a final intermediate spin down (rows 3 and 4) use ``C+-`` with
``J_z -> -J_z``. This is the mirror image of rows 1 and 2 under flipping
every spin, and it is what exponentiating the blocks directly gives.

Numerically, the ``G^-1`` and ``G^-2`` factors are never formed on their
own. ``G+-`` are purely imaginary, so ``sinh(A)/G`` and
``(cosh A - 1)/G^2`` reduce to ``sinc`` functions of a real angle. Sectors
with ``G+ = 0`` (edges of a multiplet, or ``alpha = 0``) therefore need no
special treatment. Only sectors with vanishing ``F`` are handed to the block
oracle.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularSector, SolverError
from .model import ModelParams, XState
from .oracle import block_propagators
from .sectors import SectorLabel, jmjp_value, jpjm_value, ladder_array, sector_arrays
from .trajectory import Trajectory

RESIDUE_TOL = 1e-10
SINGULAR_REL = 1e-12
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SectorScalars:
    """``F``, ``G+-`` and ``C+-`` of one sector, with the mirrored ``C+-`` used by rows 3-4."""

    g_plus: complex
    g_minus: complex
    f_cap: complex
    c_plus: complex
    c_minus: complex
    c_plus_mirror: complex
    c_minus_mirror: complex

    def a_plus(self, t: float) -> complex:
        return self.g_plus * t / _SQRT2

    def a_minus(self, t: float) -> complex:
        return self.g_minus * t / _SQRT2


@dataclass(frozen=True)
class OperatorWord:
    """One entry ``U_ij`` of the evolution operator.

    ``diagonal_fn`` names an entry of :data:`DIAGONAL_FUNCTIONS`. The word acts
    right to left: ``right_ladder``, then ``diagonal_fn``, then ``left_ladder``.
    With ``is_identity_plus`` the amplitude is ``1 + prefactor * (...)``.
    """

    row: int
    col: int
    prefactor: str
    left_ladder: Optional[str]
    diagonal_fn: str
    right_ladder: Optional[str]
    is_identity_plus: bool = False

    @property
    def name(self) -> str:
        return f"U{self.row}{self.col}"

    def shift(self) -> int:
        """Net change of ``two_m``."""
        step = {None: 0, "raise": 2, "lower": -2}
        return step[self.left_ladder] + step[self.right_ladder]


# excitations of |++>, |+->, |-+>, |--> : the bath absorbs what the pair loses
_EXCITATIONS = (2, 1, 1, 0)

_W = OperatorWord
WORDS: dict[tuple[int, int], OperatorWord] = {
    (w.row, w.col): w
    for w in [
        _W(1, 1, "outer", "lower", "outer", "raise", True),
        _W(1, 2, "ladder", "lower", "s_ratio", None),
        _W(1, 3, "mixed", "lower", "cosh_diff", None),
        _W(1, 4, "double", "lower", "s_diff", "lower"),
        _W(2, 1, "ladder", None, "s_ratio", "raise"),
        _W(2, 2, "one", None, "mid_diag", None),
        _W(2, 3, "swap", None, "mid_off", None),
        _W(2, 4, "mixed", None, "cosh_diff", "lower"),
        _W(3, 1, "mixed", None, "cosh_diff", "raise"),
        _W(3, 2, "swap", None, "mid_off", None),
        _W(3, 3, "one", None, "mid_diag_mirror", None),
        _W(3, 4, "ladder", None, "s_ratio_mirror", "lower"),
        _W(4, 1, "double", "raise", "s_diff", "raise"),
        _W(4, 2, "mixed", "raise", "cosh_diff", None),
        _W(4, 3, "ladder", "raise", "s_ratio_mirror", None),
        _W(4, 4, "outer", "raise", "outer_mirror", "lower", True),
    ]
}
del _W


def prefactor_value(kind: str, params: ModelParams) -> complex:
    g, a, N = params.gamma, params.alpha, params.N
    return {
        "one": 1.0,
        "outer": -(a**2) / (4 * N),
        "ladder": 1j * a / (2 * math.sqrt(2 * N)),
        "mixed": a * g / (4 * math.sqrt(N)),
        "double": 1j * _SQRT2 * a**2 * g / (8 * N),
        "swap": 1j * g / (2 * _SQRT2),
    }[kind]


# ---------------------------------------------------------------------------
# scalars


def _c_pair(p, q, F):
    """Roots ``p +- F`` of ``C^2 - 2pC - q = 0``, each from the non-cancelling side."""
    pos = p >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        c_plus = np.where(pos, p + F, q / (F - p))
        c_minus = np.where(pos, -q / (F + p), p - F)
    return c_plus, c_minus


def _scalar_arrays(two_j, two_m, params: ModelParams):
    """Vectorised sector scalars at ``(two_j, two_m)``; illegal entries give garbage, masked by callers."""
    g, a, N = params.gamma, params.alpha, params.N
    jz = np.asarray(two_m) / 2.0
    jpjm = np.asarray(jpjm_value(two_j, two_m), dtype=float)
    jmjp = np.asarray(jmjp_value(two_j, two_m), dtype=float)
    jsym = jpjm + jmjp
    F = 0.25 * np.sqrt(np.maximum(4 * a**4 * jz**2 / N**2 + 2 * a**2 * g**2 * jsym / N + g**4, 0.0))
    s = a**2 * jsym / (4 * N) + g**2 / 4
    with np.errstate(divide="ignore", invalid="ignore"):
        gp_sq = np.where(s + F > 0, -(a**4) * jpjm * jmjp / (4 * N**2 * (s + F)), 0.0)
    gm_sq = -(s + F)
    g_plus = np.sqrt(gp_sq.astype(complex))
    g_minus = np.sqrt(gm_sq.astype(complex))
    p = g**2 / 4 + a**2 * jz / (2 * N)
    q = a**2 * g**2 * jmjp / (4 * N)
    c_plus, c_minus = _c_pair(p, q, F)
    pm = g**2 / 4 - a**2 * jz / (2 * N)
    qm = a**2 * g**2 * jpjm / (4 * N)
    cm_plus, cm_minus = _c_pair(pm, qm, F)
    return {
        "F": F,
        "Gp": g_plus,
        "Gm": g_minus,
        "Cp": c_plus,
        "Cm": c_minus,
        "Cp_m": cm_plus,
        "Cm_m": cm_minus,
    }


def singular_threshold(params: ModelParams) -> float:
    return SINGULAR_REL * max(params.gamma**2, params.alpha**2 / params.N)


def sector_scalars(sector: SectorLabel, params: ModelParams) -> SectorScalars:
    """Scalars of one legal sector; raises :class:`SingularSector` when ``F`` vanishes."""
    sc = _scalar_arrays(np.array(sector.two_j), np.array(sector.two_m), params)
    F = float(sc["F"])
    if abs(F) < singular_threshold(params):
        raise SingularSector(f"F={F:.3e} in sector (2j={sector.two_j}, 2m={sector.two_m})")
    return SectorScalars(
        complex(sc["Gp"]),
        complex(sc["Gm"]),
        complex(F),
        complex(sc["Cp"]),
        complex(sc["Cm"]),
        complex(sc["Cp_m"]),
        complex(sc["Cm_m"]),
    )


class _AnchorFunctions:
    """Time-dependent building blocks shared by all words evaluated at the same ``m``.

    ``G+-^2 <= 0`` in every legal sector (``F <= s`` below), so ``A+- = i theta+-``
    with real ``theta = omega t / sqrt(2)``, ``omega = sqrt(-G^2)``. The
    hyperbolic functions become ``cosh A = cos theta``,
    ``sinh(A)/G = sin(theta)/omega`` and ``sinh(A) G = -omega sin(theta)``,
    with no branches.
    """

    def __init__(self, sc: dict, times):
        t = np.asarray(times, dtype=float)[:, None]
        self.t = t
        self.sc = sc
        with np.errstate(invalid="ignore"):
            self.w_plus = np.sqrt(-np.real(sc["Gp"] ** 2))[None, :]
            self.w_minus = np.sqrt(-np.real(sc["Gm"] ** 2))[None, :]
        self.th_plus = self.w_plus * t / _SQRT2
        self.th_minus = self.w_minus * t / _SQRT2
        self._memo = {}

    def get(self, key: str):
        if key not in self._memo:
            self._memo[key] = getattr(self, "_" + key)()
        return self._memo[key]

    def _sinc_plus(self):
        return np.sinc(self.th_plus / np.pi)

    def _sinc_minus(self):
        return np.sinc(self.th_minus / np.pi)

    def _half_plus(self):  # (cosh A+ - 1) / G+^2
        return self.t**2 / 4 * np.sinc(self.th_plus / (2 * np.pi)) ** 2

    def _half_minus(self):
        return self.t**2 / 4 * np.sinc(self.th_minus / (2 * np.pi)) ** 2

    def _cos_plus(self):
        return np.cos(self.th_plus)

    def _cos_minus(self):
        return np.cos(self.th_minus)

    def _cosh_diff(self):  # cosh A- - cosh A+
        return 2.0 * (np.sin(self.th_plus / 2) ** 2 - np.sin(self.th_minus / 2) ** 2)

    def _mid_off(self):  # sinh(A-) G- - sinh(A+) G+
        return self.w_plus * np.sin(self.th_plus) - self.w_minus * np.sin(self.th_minus)


def _diagonal(name: str, fn: _AnchorFunctions):
    """Diagonal function ``name`` on the (time, sector) grid of ``fn``; always real."""
    sc = fn.sc
    F = sc["F"][None, :]
    mirror = name.endswith("_mirror")
    base = name[: -len("_mirror")] if mirror else name
    Cp = sc["Cp_m" if mirror else "Cp"][None, :]
    Cm = sc["Cm_m" if mirror else "Cm"][None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if base == "outer":
            return (Cp * fn.get("half_minus") - Cm * fn.get("half_plus")) / F
        if base == "s_ratio":
            return fn.t / _SQRT2 * (fn.get("sinc_plus") * Cm - fn.get("sinc_minus") * Cp) / F
        if base == "cosh_diff":
            return fn.get("cosh_diff") / F
        if base == "s_diff":
            return fn.t / _SQRT2 * (fn.get("sinc_plus") - fn.get("sinc_minus")) / F
        if base == "mid_diag":
            return (Cp * fn.get("cos_minus") - Cm * fn.get("cos_plus")) / (2.0 * F)
        if base == "mid_off":
            return fn.get("mid_off") / F
    raise KeyError(name)


DIAGONAL_FUNCTIONS = ("outer", "s_ratio", "cosh_diff", "s_diff", "mid_diag", "mid_off") + tuple(
    n + "_mirror" for n in ("outer", "s_ratio", "mid_diag")
)

_STEP = {"raise": 2, "lower": -2}


def _ladders(word: OperatorWord, two_j, two_m):
    """Product of the word's ladder coefficients and the ``two_m`` its diagonal function sees."""
    coeff = np.ones(len(two_j))
    m_eval = np.array(two_m, copy=True)
    if word.right_ladder:
        coeff = coeff * ladder_array(two_j, m_eval, word.right_ladder)
        m_eval = m_eval + _STEP[word.right_ladder]
    if word.left_ladder:
        coeff = coeff * ladder_array(two_j, m_eval, word.left_ladder)
    return coeff, m_eval


def _anchor_functions(two_j, m_eval, times, params, cache):
    key = m_eval.tobytes()
    if key not in cache:
        with np.errstate(all="ignore"):
            cache[key] = _AnchorFunctions(_scalar_arrays(two_j, m_eval, params), times)
    return cache[key]


def _word_grid(word: OperatorWord, two_j, two_m, times, params: ModelParams, cache=None):
    """Amplitudes of ``word`` on ``|j, m>`` for every time (rows) and sector (columns).

    Returns ``(amplitude, F, active)``: ``F`` at the evaluation ``m``, and
    ``active`` marking sectors where all ladder coefficients are nonzero. Elsewhere
    the amplitude is exactly 0 (or 1 for the identity-plus shape).
    """
    cache = {} if cache is None else cache
    coeff, m_eval = _ladders(word, two_j, two_m)
    active = coeff != 0
    fn = _anchor_functions(two_j, m_eval, times, params, cache)
    base = 1.0 if word.is_identity_plus else 0.0
    amp = np.full((len(fn.t), len(two_j)), base, dtype=complex)
    if np.any(active):
        diag = _diagonal(word.diagonal_fn, fn)
        with np.errstate(invalid="ignore"):
            vals = base + prefactor_value(word.prefactor, params) * coeff[None, :] * diag
        amp[:, active] = vals[:, active]
    return amp, fn.sc["F"], active


def evaluate_u_word(word: OperatorWord, sector: SectorLabel, params: ModelParams, t: float):
    """Amplitude and output ``two_m`` of ``word`` applied to ``|j, m>``.

    Off-ladder words give exactly 0 (or 1 for the identity-plus shape).
    Raises :class:`SingularSector` if the scalars it needs are singular.
    """
    two_j = np.array([sector.two_j])
    two_m = np.array([sector.two_m])
    coeff, m_eval = _ladders(word, two_j, two_m)
    if coeff[0] != 0:
        sector_scalars(SectorLabel(sector.two_j, int(m_eval[0])), params)
    amp, _, _ = _word_grid(word, two_j, two_m, [t], params)
    return {"amplitude": complex(amp[0, 0]), "out_two_m": sector.two_m + word.shift()}


def _anchor_two_m(col: int, two_m):
    """Excitation-block anchor containing composite state ``col`` with bath ``two_m``."""
    return two_m + 2 * (_EXCITATIONS[col - 1] - 1)


@dataclass(frozen=True)
class ExactDiagnostics:
    fallback_sectors: int
    max_imag_residue: float


def _amplitude_table(times, params: ModelParams, two_j, two_m, rows=(1, 2)):
    """``amps[(i, k)]`` of shape (times, sectors), with singular sectors filled by the block oracle."""
    amps = {}
    singular = np.zeros(len(two_j), dtype=bool)
    thresh = singular_threshold(params)
    cache = {}
    for i in rows:
        for k in range(1, 5):
            amp, F, active = _word_grid(WORDS[(i, k)], two_j, two_m, times, params, cache)
            singular |= active & ~(np.abs(F) >= thresh)
            amps[(i, k)] = amp
    idx = np.flatnonzero(singular)
    if idx.size:
        for col in range(1, 5):
            anchors = _anchor_two_m(col, two_m[idx])
            for n, t in enumerate(times):
                U = block_propagators(two_j[idx], anchors, params, t)
                for i in rows:
                    amps[(i, col)][n, idx] = U[:, i - 1, col - 1]
    return amps, int(idx.size)


def _population_terms(amps, x0: XState):
    """Per-sector complex population contributions, as the bilinear sum over output rows 1-2."""
    total = 0
    for i in (1, 2):
        u1, u2, u3, u4 = (amps[(i, k)] for k in range(1, 5))
        total = total + x0.rho11 * u1 * np.conj(u1) + x0.rho44 * u4 * np.conj(u4)
        total = total + (x0.rho22 * u2 + x0.rho32 * u3) * np.conj(u2)
        total = total + (x0.rho23 * u2 + x0.rho33 * u3) * np.conj(u3)
    return total


def _population_chunk(times, params: ModelParams, x0: XState):
    two_j, two_m, weights = sector_arrays(params.N)
    amps, n_fallback = _amplitude_table(times, params, two_j, two_m)
    terms = _population_terms(amps, x0) * weights[None, :]
    real = np.array([math.fsum(row) for row in terms.real])
    imag = np.array([math.fsum(row) for row in terms.imag])
    return real, imag, n_fallback


def _worker_count(requested: Optional[int]) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("SPINSTAR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def exact_population_grid(times, params: ModelParams, x0: XState, workers: Optional[int] = None,
                          return_diagnostics: bool = False):
    """Exact population at every time in ``times``.

    Each time is computed independently, so chunking across ``workers``
    threads does not change any value.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise SolverError("times must be non-negative")
    # bound the (time x sector) working set to a few million complex entries
    n_sec = (params.N // 2 + 1) ** 2 + params.N
    chunk = max(1, min(len(times), 200_000 // max(1, n_sec)))
    pieces = [times[s:s + chunk] for s in range(0, len(times), chunk)] or [times]
    n_workers = min(_worker_count(workers), len(pieces))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(lambda ts: _population_chunk(ts, params, x0), pieces))
    else:
        results = [_population_chunk(ts, params, x0) for ts in pieces]
    real = np.concatenate([r[0] for r in results]) if results else np.zeros(0)
    imag = np.concatenate([r[1] for r in results]) if results else np.zeros(0)
    worst = float(np.max(np.abs(imag), initial=0.0))
    if worst >= RESIDUE_TOL:
        raise SolverError(f"exact population has imaginary residue {worst:.2e}")
    if np.any(real < -1e-9) or np.any(real > 1 + 1e-9):
        raise SolverError(f"exact population left [0, 1]: [{real.min()}, {real.max()}]")
    pop = np.clip(real, 0.0, 1.0)
    if return_diagnostics:
        return pop, ExactDiagnostics(max(r[2] for r in results), worst)
    return pop


def exact_population(t: float, params: ModelParams, x0: XState) -> float:
    if t < 0:
        raise SolverError("t must be non-negative")
    return float(exact_population_grid([t], params, x0, workers=1)[0])


def exact_trajectory(grid, params: ModelParams, x0: XState, workers: Optional[int] = None) -> Trajectory:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise SolverError("grid must be a non-empty 1-d array")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise SolverError("grid must be strictly increasing and start at t >= 0")
    pop, diag = exact_population_grid(grid, params, x0, workers, return_diagnostics=True)
    return Trajectory(
        grid,
        {"exact": pop},
        {"fallback_sectors": diag.fallback_sectors, "max_imag_residue": diag.max_imag_residue},
    )


def unitary_block(two_j: int, two_m: int, params: ModelParams, t: float) -> np.ndarray:
    """All 16 amplitudes ``U_ik`` acting on ``|j, m>`` (rows: output pair state, columns: input)."""
    out = np.zeros((4, 4), dtype=complex)
    sector = SectorLabel(two_j, two_m)
    for (i, k), word in WORDS.items():
        out[i - 1, k - 1] = evaluate_u_word(word, sector, params, t)["amplitude"]
    return out
