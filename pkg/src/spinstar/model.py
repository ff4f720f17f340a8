"""Model parameters and the initial two-qubit X-state of central + intermediate spin.

Two-qubit basis order throughout: ``|++>, |+->, |-+>, |-->`` with the central
spin first. ``|+>`` is the spin-up eigenvector of ``sigma_z``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError

STATE_TOL = 1e-12

FAMILY_ALIASES = {
    "phi_plus": "phi_plus",
    "phi+": "phi_plus",
    "phi_minus": "phi_minus",
    "phi-": "phi_minus",
    "psi_plus": "psi_plus",
    "psi+": "psi_plus",
    "psi_minus": "psi_minus",
    "psi-": "psi_minus",
}


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the spin-star Hamiltonian.

    ``gamma`` couples central and intermediate spin, ``alpha`` couples the
    intermediate spin to the collective bath with the usual ``1/sqrt(N)``
    normalisation. ``bath_size=None`` stands for the thermodynamic limit.
    """

    gamma: float
    alpha: float
    bath_size: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.bath_size is not None:
            if int(self.bath_size) != self.bath_size or self.bath_size < 1:
                raise ConfigError(f"bath_size must be a positive integer, got {self.bath_size}")

    @property
    def N(self) -> int:
        if self.bath_size is None:
            raise ConfigError("this solver needs a finite bath_size")
        return int(self.bath_size)


@dataclass(frozen=True)
class XState:
    """X-shaped density matrix of central and intermediate spin.

    Only the upper coherences are stored; ``rho32`` and ``rho41`` are their
    conjugates.
    """

    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho23: complex = 0j
    rho14: complex = 0j

    def __post_init__(self):
        for name in ("rho11", "rho22", "rho33", "rho44"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "rho23", complex(self.rho23))
        object.__setattr__(self, "rho14", complex(self.rho14))
        diag = (self.rho11, self.rho22, self.rho33, self.rho44)
        if not all(math.isfinite(x) for x in diag):
            raise ConfigError("X-state populations must be finite")
        if min(diag) < -STATE_TOL:
            raise ConfigError(f"negative population in X-state: {diag}")
        if abs(math.fsum(diag) - 1.0) > STATE_TOL:
            raise ConfigError(f"X-state trace is {math.fsum(diag)!r}, expected 1")
        if abs(self.rho23) ** 2 > self.rho22 * self.rho33 + STATE_TOL:
            raise ConfigError("|rho23|^2 exceeds rho22*rho33; state is not positive")
        if abs(self.rho14) ** 2 > self.rho11 * self.rho44 + STATE_TOL:
            raise ConfigError("|rho14|^2 exceeds rho11*rho44; state is not positive")

    @property
    def rho32(self) -> complex:
        return self.rho23.conjugate()

    @property
    def rho41(self) -> complex:
        return self.rho14.conjugate()

    def matrix(self) -> np.ndarray:
        m = np.diag(np.array([self.rho11, self.rho22, self.rho33, self.rho44], dtype=complex))
        m[1, 2] = self.rho23
        m[2, 1] = self.rho32
        m[0, 3] = self.rho14
        m[3, 0] = self.rho41
        return m

    @classmethod
    def from_matrix(cls, m) -> "XState":
        m = np.asarray(m, dtype=complex)
        if m.shape != (4, 4):
            raise ConfigError(f"expected a 4x4 matrix, got shape {m.shape}")
        mask = np.ones((4, 4), bool)
        mask[np.diag_indices(4)] = False
        mask[1, 2] = mask[2, 1] = mask[0, 3] = mask[3, 0] = False
        if np.max(np.abs(m[mask]), initial=0.0) > STATE_TOL:
            raise ConfigError("matrix is not X-shaped")
        if np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise ConfigError("matrix is not Hermitian")
        d = m.diagonal().real
        return cls(d[0], d[1], d[2], d[3], m[1, 2], m[0, 3])

    def initial_population(self) -> float:
        """Central-spin up population at ``t = 0``."""
        return self.rho11 + self.rho22

    def as_dict(self) -> dict:
        return {
            "rho11": self.rho11,
            "rho22": self.rho22,
            "rho33": self.rho33,
            "rho44": self.rho44,
            "rho23": [self.rho23.real, self.rho23.imag],
            "rho14": [self.rho14.real, self.rho14.imag],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "XState":
        def cplx(v):
            if v is None:
                return 0j
            if isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise ConfigError(f"complex entries are [re, im] pairs, got {v!r}")
                return complex(v[0], v[1])
            if isinstance(v, str):
                return complex(v.replace(" ", ""))
            return complex(v)

        try:
            return cls(
                float(data["rho11"]),
                float(data["rho22"]),
                float(data["rho33"]),
                float(data["rho44"]),
                cplx(data.get("rho23")),
                cplx(data.get("rho14")),
            )
        except KeyError as exc:
            raise ConfigError(f"custom state is missing {exc.args[0]}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed custom state: {exc}") from None


def canonical_family(family: str) -> str:
    try:
        return FAMILY_ALIASES[family.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown state family {family!r}; expected one of phi+, phi-, psi+, psi-"
        ) from None


def build_state(family: str, theta: float, beta: float) -> XState:
    """Pure Bell-like state ``sin(theta)|a> +- exp(i beta) cos(theta)|b>``.

    The ``phi`` families superpose ``|+->`` and ``|-+>``; the ``psi`` families
    superpose ``|++>`` and ``|-->``.
    """
    family = canonical_family(family)
    s, c = math.sin(theta), math.cos(theta)
    sign = 1.0 if family.endswith("plus") else -1.0
    coherence = sign * s * c * cmath.exp(-1j * beta)
    if family.startswith("phi"):
        return XState(0.0, s * s, c * c, 0.0, rho23=coherence)
    return XState(s * s, 0.0, 0.0, c * c, rho14=coherence)


def random_xstate(rng: np.random.Generator) -> XState:
    """Valid X-state with Dirichlet populations and uniformly random phases."""
    p = rng.dirichlet(np.ones(4))
    p = p / math.fsum(p)
    r23 = math.sqrt(p[1] * p[2]) * rng.uniform()
    r14 = math.sqrt(p[0] * p[3]) * rng.uniform()
    return XState(
        p[0],
        p[1],
        p[2],
        1.0 - math.fsum(p[:3]),
        r23 * cmath.exp(2j * math.pi * rng.uniform()),
        r14 * cmath.exp(2j * math.pi * rng.uniform()),
    )


def random_params(rng: np.random.Generator, bath_sizes=(1, 2, 4, 6, 8), gamma: float = 1.0) -> ModelParams:
    """Coupling ratio log-uniform in ``[0.01, 100]`` and a bath size drawn from ``bath_sizes``."""
    ratio = 10 ** rng.uniform(-2, 2)
    return ModelParams(gamma, ratio * gamma, int(rng.choice(bath_sizes)))
