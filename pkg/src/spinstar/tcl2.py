"""Second-order time-convolutionless (TCL2) dynamics with a correlated projection.

The projection keeps, for every bath sector ``(j, m)`` and each
central-spin state, the occupations

* ``R11[j, m]`` of ``|++, m>`` and ``r11[j, m]`` of ``|+-, m>`` (central spin up),
* ``R22[j, m]`` of ``|-+, m>`` and ``r22[j, m]`` of ``|--, m>`` (central spin down).

The generator is linear in ``t`` and couples only ``m`` and ``m +- 1`` within
one multiplet, through

* ``R11[m] <-> r11[m + 1]`` with rate ``c11 * (j - m)(j + m + 1) * t``,
* ``R22[m] <-> r22[m + 1]`` with rate ``c22 * (j - m)(j + m + 1) * t``,
* ``r11[m] <-> R22[m]`` with rate ``(gamma^2 / 2) * t``,

plus a constant source ``lambda`` from the initial coherence ``rho23``. It
feeds ``r11`` and drains ``R22`` by the same amount.

``c11 = alpha^2 / 2N``. ``c22`` is ``2 alpha^2 / N`` in ``"published"`` mode
and ``alpha^2 / 2N`` in ``"symmetric"`` mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, StepTooLarge
from .model import ModelParams, XState
from .sectors import allowed_two_j, degeneracy_table, jmjp_value
from .trajectory import Trajectory

CoeffMode = Literal["published", "symmetric"]
Weighting = Literal["degeneracy", "literal"]

DEFAULT_STEP = 1e-3  # in units of 1/gamma
MAX_STEP = 1e-2
DRIFT_TARGET = 1e-9
DRIFT_LIMIT = 1e-6
# fraction of the RK4 real-axis stability interval (about 2.785) used by the step cap
STABILITY = 2.0


@dataclass(frozen=True)
class TclLayout:
    """Flat indexing of all sectors: ``two_j`` descending, ``two_m`` ascending.

    ``up`` points at the sector ``m + 1`` of the same multiplet (-1 at the top)
    and ``down`` at ``m - 1`` (-1 at the bottom).
    """

    bath_size: int
    two_j: np.ndarray
    two_m: np.ndarray
    nu_weight: np.ndarray
    up: np.ndarray
    down: np.ndarray

    @classmethod
    def build(cls, N: int) -> "TclLayout":
        table = degeneracy_table(N)
        two_j, two_m, weight = [], [], []
        for tj in allowed_two_j(N):
            for tm in range(-tj, tj + 1, 2):
                two_j.append(tj)
                two_m.append(tm)
                weight.append(table.weights[tj])
        two_j = np.array(two_j)
        two_m = np.array(two_m)
        idx = np.arange(len(two_j))
        up = np.where(two_m + 2 <= two_j, idx + 1, -1)
        down = np.where(two_m - 2 >= -two_j, idx - 1, -1)
        return cls(N, two_j, two_m, np.array(weight), up, down)

    @property
    def size(self) -> int:
        return len(self.two_j)


@dataclass(frozen=True)
class TclState:
    """Occupations of every sector at ``time``; each array is indexed like :class:`TclLayout`."""

    layout: TclLayout
    time: float
    R11: np.ndarray
    r11: np.ndarray
    R22: np.ndarray
    r22: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.stack([self.R11, self.r11, self.R22, self.r22])

    @classmethod
    def from_stacked(cls, layout: TclLayout, time: float, y: np.ndarray) -> "TclState":
        return cls(layout, time, y[0], y[1], y[2], y[3])

    def total(self) -> float:
        return math.fsum(self.stacked().ravel())

    def population(self) -> float:
        """Central-spin up population ``sum(R11 + r11)``."""
        return math.fsum(np.concatenate([self.R11, self.r11]))


@dataclass(frozen=True)
class Inhomogeneity:
    """Constant source from the initial ``rho23`` coherence, one value per sector.

    ``lambda_scalar = -gamma * Im(rho23) / 2^N`` is the per-state prefactor.
    With ``weighting="degeneracy"`` each sector receives it multiplied by its
    multiplicity ``nu(N, j)``, which reproduces the exact initial slope
    ``-gamma * Im(rho23)`` of the population. ``"literal"`` applies the bare
    scalar to every sector.
    """

    lambda_scalar: float
    per_sector: np.ndarray
    weighting: str

    @classmethod
    def build(cls, layout: TclLayout, gamma: float, x0: XState, weighting: Weighting = "degeneracy"):
        # i gamma / 2^(N+1) (rho23 - rho32) = -gamma Im(rho23) / 2^N
        lam = -gamma * x0.rho23.imag * 2.0 ** (-layout.bath_size)
        if weighting == "degeneracy":
            per = -gamma * x0.rho23.imag * layout.nu_weight
        elif weighting == "literal":
            per = np.full(layout.size, lam)
        else:
            raise ConfigError(f"unknown inhomogeneity weighting {weighting!r}")
        return cls(lam, per, weighting)


def chain_coefficients(params: ModelParams, mode: CoeffMode = "published") -> tuple[float, float]:
    """``(c11, c22)`` multiplying ``(j - m)(j + m + 1)`` on the two chains."""
    c11 = params.alpha**2 / (2 * params.N)
    if mode == "published":
        c22 = 2 * params.alpha**2 / params.N
    elif mode == "symmetric":
        c22 = c11
    else:
        raise ConfigError(f"unknown coefficient mode {mode!r}; expected 'published' or 'symmetric'")
    return c11, c22


def tcl2_initial_state(N: int, x0: XState) -> TclState:
    layout = TclLayout.build(N)
    w = layout.nu_weight
    return TclState(layout, 0.0, w * x0.rho11, w * x0.rho22, w * x0.rho33, w * x0.rho44)


class _Generator:
    """Pre-computed neighbour couplings; ``__call__`` returns the stacked derivative."""

    def __init__(self, layout: TclLayout, params: ModelParams, inhom: Inhomogeneity, mode: CoeffMode):
        c11, c22 = chain_coefficients(params, mode)
        # (j - m)(j + m + 1) is zero at the top of each multiplet, so the link to
        # the next flat index never crosses into another multiplet
        b = jmjp_value(layout.two_j, layout.two_m).astype(float)
        self.k11 = c11 * b
        self.k22 = c22 * b
        self.swap = params.gamma**2 / 2
        self.lam = inhom.per_sector

    def norm_bound(self) -> float:
        """Row-sum bound on the symmetric matrix ``K`` in ``dy/dt = t K y + lambda``."""
        k11_in = np.concatenate([[0.0], self.k11[:-1]])
        k22_in = np.concatenate([[0.0], self.k22[:-1]])
        rows = [2 * self.k11, 2 * (k11_in + self.swap), 2 * (self.k22 + self.swap), 2 * k22_in]
        return float(max(np.max(r, initial=0.0) for r in rows))

    def __call__(self, y: np.ndarray, t: float) -> np.ndarray:
        R11, r11, R22, r22 = y
        out = np.empty_like(y)
        # flux into the lower member of each link (m, m + 1)
        f11 = np.zeros_like(R11)
        f22 = np.zeros_like(R22)
        f11[:-1] = self.k11[:-1] * (r11[1:] - R11[:-1]) * t
        f22[:-1] = self.k22[:-1] * (r22[1:] - R22[:-1]) * t
        swap = self.swap * (R22 - r11) * t
        out[0] = f11
        out[1] = swap + self.lam
        out[1, 1:] -= f11[:-1]
        out[2] = f22 - swap - self.lam
        out[3] = 0.0
        out[3, 1:] -= f22[:-1]
        return out


def tcl2_rhs(state: TclState, t: float, params: ModelParams, inhom: Inhomogeneity,
             mode: CoeffMode = "published") -> TclState:
    """Time derivative of ``state`` at time ``t`` (returned with the same layout)."""
    gen = _Generator(state.layout, params, inhom, mode)
    return TclState.from_stacked(state.layout, t, gen(state.stacked(), t))


@dataclass(frozen=True)
class TclRunInfo:
    max_drift: float
    steps: int
    step: float


def integrate_tcl2(grid, params: ModelParams, x0: XState, step: float = DEFAULT_STEP,
                   mode: CoeffMode = "published", weighting: Weighting = "degeneracy",
                   return_info: bool = False):
    """RK4 integration of the TCL2 system; returns the population on ``grid``.

    Between consecutive grid points the interval is split into the smallest
    number of equal steps not longer than ``step / gamma``, so grid points are
    hit exactly. Strong bath coupling makes the system stiff: the generator
    grows like ``t * |K|``, and RK4 is only stable for ``h * t * |K| < 2.78``.
    Each interval therefore also caps its step at ``2 / (|K| * t_end)``. That
    cap depends only on the configuration, so runs stay bit-reproducible.
    Raises :class:`StepTooLarge` if the total occupation drifts by more than
    ``1e-6``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be non-empty, strictly increasing and start at t >= 0")
    if not 0 < step <= MAX_STEP:
        raise ConfigError(f"step must lie in (0, {MAX_STEP}] (units of 1/gamma), got {step}")
    scale = 1.0 / params.gamma if params.gamma > 0 else 1.0
    h_max = step * scale
    state = tcl2_initial_state(params.N, x0)
    inhom = Inhomogeneity.build(state.layout, params.gamma, x0, weighting)
    gen = _Generator(state.layout, params, inhom, mode)
    y = state.stacked()
    norm = gen.norm_bound()
    t = 0.0
    pops = np.empty(grid.size)
    max_drift = 0.0
    n_steps = 0
    for k, target in enumerate(grid):
        span = target - t
        n = 0
        if span > 0:
            n = int(math.ceil(span / h_max - 1e-12))
            n = max(n, int(math.ceil(span * norm * target / STABILITY)))
        for i in range(n):
            h = span / n
            t0 = t + i * h
            k1 = gen(y, t0)
            k2 = gen(y + 0.5 * h * k1, t0 + 0.5 * h)
            k3 = gen(y + 0.5 * h * k2, t0 + 0.5 * h)
            k4 = gen(y + h * k3, t0 + h)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            drift = abs(float(y.sum()) - 1.0)
            max_drift = max(max_drift, drift)
            if drift > DRIFT_LIMIT:
                raise StepTooLarge(f"occupation drift {drift:.2e} at t={t0 + h:g}; reduce the step")
        n_steps += n
        t = float(target)
        pops[k] = math.fsum(np.concatenate([y[0], y[1]]))
    if return_info:
        return pops, TclRunInfo(max_drift, n_steps, step)
    return pops


def tcl2_trajectory(grid, params: ModelParams, x0: XState, step: float = DEFAULT_STEP,
                    mode: CoeffMode = "published", weighting: Weighting = "degeneracy") -> Trajectory:
    pops, info = integrate_tcl2(grid, params, x0, step, mode, weighting, return_info=True)
    meta = {"tcl2_coeff_mode": mode, "tcl2_inhomogeneity": weighting,
            "tcl2_max_drift": info.max_drift, "tcl2_step": step}
    if info.max_drift > DRIFT_TARGET:
        meta["tcl2_drift_warning"] = True
    return Trajectory(np.asarray(grid, dtype=float), {"tcl2": pops}, meta)


# ---------------------------------------------------------------------------
# uncorrelated projection

_SP = np.array([[0.0, 1.0], [0.0, 0.0]])  # sigma+ in the (up, down) basis
_SM = _SP.T


def _dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``L^dag L rho + rho L^dag L - 2 L rho L^dag``."""
    LdL = L.T @ L
    return LdL @ rho + rho @ LdL - 2 * L @ rho @ L.T


def naive_me_rhs(rho: np.ndarray, t: float, gamma: float) -> np.ndarray:
    """Uncorrelated-projection TCL2 generator of the central spin alone.

    Two dissipators with ``sigma+`` and ``sigma-`` as jump operators, each at
    rate ``gamma^2 t / 4``. With this pairing the generator is trace
    preserving.
    """
    return -(gamma**2) * t / 4 * (_dissipator(_SM, rho) + _dissipator(_SP, rho))


def naive_me_population(grid, gamma: float, x0: XState, step: float = DEFAULT_STEP) -> Trajectory:
    """Central-spin population under the uncorrelated master equation (RK4)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be non-empty, strictly increasing and start at t >= 0")
    h_max = step / gamma if gamma > 0 else step
    rho = np.diag([x0.rho11 + x0.rho22, x0.rho33 + x0.rho44]).astype(complex)
    t = 0.0
    pops = np.empty(grid.size)
    for k, target in enumerate(grid):
        span = target - t
        n = int(math.ceil(span / h_max - 1e-12)) if span > 0 else 0
        for i in range(n):
            h = span / n
            t0 = t + i * h
            k1 = naive_me_rhs(rho, t0, gamma)
            k2 = naive_me_rhs(rho + 0.5 * h * k1, t0 + 0.5 * h, gamma)
            k3 = naive_me_rhs(rho + 0.5 * h * k2, t0 + 0.5 * h, gamma)
            k4 = naive_me_rhs(rho + h * k3, t0 + h, gamma)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = float(target)
        pops[k] = rho[0, 0].real
    return Trajectory(grid, {"naive": pops}, {})

