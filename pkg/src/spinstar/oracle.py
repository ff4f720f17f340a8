"""Brute-force reference solvers.

Two independent routes to the central-spin population:

* ``block_*`` diagonalises the 4x4 Hamiltonian of every excitation block
  ``{|++, M-1>, |+-, M>, |-+, M>, |--, M+1>}`` of every bath multiplet and
  sums with multiplet weights. Works for any bath size.
* ``dense_*`` builds the Hamiltonian from individual bath-spin operators in
  the full ``2^(N+2)``-dimensional space and traces out everything but the
  central spin. It never uses the collective basis or multiplet weights.

Both exponentiate by Hermitian eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import BathTooLarge
from .model import ModelParams, XState
from .sectors import allowed_two_j, degeneracy_table, jmjp_value, jpjm_value

MAX_DENSE_BATH = 10

# Largest number of (block, time) phase entries materialised at once.
_CHUNK = 2_000_000

BLOCK_STATES = ("++", "+-", "-+", "--")


@dataclass(frozen=True)
class ExcitationBlock:
    """Invariant subspace of one multiplet with fixed total ``z`` magnetisation ``M``.

    ``basis`` lists the surviving composite states as ``(two_qubit_label, two_m_bath)``;
    states whose bath projection leaves ``[-j, j]`` are dropped.
    """

    two_j: int
    anchor_two_m: int
    basis: tuple[tuple[str, int], ...]
    h_matrix: np.ndarray


def _block_couplings(two_j, anchor_two_m, params: ModelParams):
    """Off-diagonal elements ``(a, g, b)`` of the padded block and the existence mask."""
    two_j = np.asarray(two_j)
    M2 = np.asarray(anchor_two_m)
    scale = params.alpha / (2.0 * math.sqrt(params.N))
    exists = np.stack(
        [np.abs(M2 - 2) <= two_j, np.abs(M2) <= two_j, np.abs(M2) <= two_j, np.abs(M2 + 2) <= two_j],
        axis=-1,
    )
    a = scale * np.sqrt(np.maximum(jpjm_value(two_j, M2), 0))
    b = scale * np.sqrt(np.maximum(jmjp_value(two_j, M2), 0))
    a = np.where(exists[..., 0] & exists[..., 1], a, 0.0)
    b = np.where(exists[..., 2] & exists[..., 3], b, 0.0)
    g = np.where(exists[..., 1] & exists[..., 2], params.gamma / 2.0, 0.0)
    return a, g, b, exists


def excitation_block(two_j: int, anchor_two_m: int, params: ModelParams) -> ExcitationBlock:
    a, g, b, exists = _block_couplings(two_j, anchor_two_m, params)
    full = np.zeros((4, 4))
    full[0, 1] = full[1, 0] = a
    full[1, 2] = full[2, 1] = g
    full[2, 3] = full[3, 2] = b
    keep = np.flatnonzero(exists)
    bath_m = (anchor_two_m - 2, anchor_two_m, anchor_two_m, anchor_two_m + 2)
    basis = tuple((BLOCK_STATES[i], bath_m[i]) for i in keep)
    return ExcitationBlock(two_j, anchor_two_m, basis, full[np.ix_(keep, keep)])


def _all_blocks(params: ModelParams):
    """Padded Hamiltonians, existence masks and weights of every excitation block."""
    table = degeneracy_table(params.N)
    two_j, anchors, weights = [], [], []
    for tj in allowed_two_j(params.N):
        for M2 in range(-tj - 2, tj + 3, 2):
            two_j.append(tj)
            anchors.append(M2)
            weights.append(table.weights[tj])
    two_j = np.array(two_j)
    anchors = np.array(anchors)
    a, g, b, exists = _block_couplings(two_j, anchors, params)
    H = np.zeros((len(two_j), 4, 4))
    H[:, 0, 1] = H[:, 1, 0] = a
    H[:, 1, 2] = H[:, 2, 1] = g
    H[:, 2, 3] = H[:, 3, 2] = b
    return two_j, anchors, H, exists, np.array(weights)


def _phase_sum(M: np.ndarray, w: np.ndarray, weights: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``sum_b weight_b sum_kl M_bkl exp(-i (w_bk - w_bl) t)`` for every ``t``."""
    dw = (w[:, :, None] - w[:, None, :]).reshape(len(w), -1)
    Mw = (M * weights[:, None, None]).reshape(len(w), -1)
    out = np.empty(len(times), dtype=complex)
    step = max(1, _CHUNK // max(1, dw.size))
    for start in range(0, len(times), step):
        ts = times[start:start + step]
        phases = np.exp(-1j * dw[None, :, :] * ts[:, None, None])
        out[start:start + step] = np.einsum("tbk,bk->t", phases, Mw)
    return out


def block_population_grid(times, params: ModelParams, x0: XState) -> np.ndarray:
    """Central-spin up population on a time grid via per-block diagonalisation."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    _, _, H, exists, weights = _all_blocks(params)
    w, V = np.linalg.eigh(H)
    rho = np.zeros((4, 4), dtype=complex)
    rho[np.diag_indices(4)] = [x0.rho11, x0.rho22, x0.rho33, x0.rho44]
    rho[1, 2] = x0.rho23
    rho[2, 1] = x0.rho32
    mask = exists[:, :, None] & exists[:, None, :]
    rho_b = np.where(mask, rho[None], 0.0)
    Vh = np.conj(np.swapaxes(V, 1, 2))
    rho_t = Vh @ rho_b @ V
    # projector onto central spin up is diag(1, 1, 0, 0) in every block
    P_t = Vh[:, :, :2] @ V[:, :2, :]
    M = np.swapaxes(P_t, 1, 2) * rho_t
    pop = _phase_sum(M, w, weights, times)
    return pop.real


def block_evolution(t: float, params: ModelParams, x0: XState) -> float:
    return float(block_population_grid([t], params, x0)[0])


def block_propagator(two_j: int, anchor_two_m: int, params: ModelParams, t: float) -> np.ndarray:
    """Padded 4x4 ``exp(-i H t)`` of one excitation block (rows/cols in block order)."""
    return block_propagators(np.array([two_j]), np.array([anchor_two_m]), params, t)[0]


def block_propagators(two_j, anchor_two_m, params: ModelParams, t: float) -> np.ndarray:
    """Stacked :func:`block_propagator` for arrays of anchors."""
    two_j = np.atleast_1d(two_j)
    anchor_two_m = np.atleast_1d(anchor_two_m)
    a, g, b, _ = _block_couplings(two_j, anchor_two_m, params)
    H = np.zeros((len(two_j), 4, 4))
    H[:, 0, 1] = H[:, 1, 0] = a
    H[:, 1, 2] = H[:, 2, 1] = g
    H[:, 2, 3] = H[:, 3, 2] = b
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2))


# ---------------------------------------------------------------------------
# dense Hilbert space

_SP = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |+><-|
_SM = _SP.T.tocsr()
_ID = sp.identity(2, format="csr")


def _site_operator(op, site: int, n_sites: int):
    factors = [_ID] * n_sites
    factors[site] = op
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), factors)


def dense_hamiltonian(params: ModelParams):
    """Sparse Hamiltonian on central (x) intermediate (x) N bath spins."""
    N = params.N
    n = N + 2
    s_p, s_m = _site_operator(_SP, 0, n), _site_operator(_SM, 0, n)
    t_p, t_m = _site_operator(_SP, 1, n), _site_operator(_SM, 1, n)
    J_p = sum(_site_operator(_SP, 2 + k, n) for k in range(N))
    J_m = sum(_site_operator(_SM, 2 + k, n) for k in range(N))
    H = params.gamma / 2.0 * (s_p @ t_m + s_m @ t_p)
    H = H + params.alpha / (2.0 * math.sqrt(N)) * (t_p @ J_m + t_m @ J_p)
    return H.tocsr()


def _check_dense(params: ModelParams) -> None:
    if params.N > MAX_DENSE_BATH:
        raise BathTooLarge(
            f"dense evolution supports at most {MAX_DENSE_BATH} bath spins, got {params.N}"
        )


def _magnetisation(n_sites: int) -> np.ndarray:
    """Number of up spins for every computational basis index (site 0 most significant)."""
    idx = np.arange(2**n_sites)
    ups = np.zeros_like(idx)
    for k in range(n_sites):
        ups += 1 - ((idx >> (n_sites - 1 - k)) & 1)
    return ups


def _dense_initial(params: ModelParams, x0: XState):
    """Sparse ``rho_SI (x) I / 2^N``."""
    bath = sp.identity(2**params.N, format="csr") / 2**params.N
    return sp.kron(sp.csr_matrix(x0.matrix()), bath, format="csr")


def _dense_sectors(params: ModelParams):
    """Eigendecomposition of each fixed-magnetisation block of the dense Hamiltonian."""
    _check_dense(params)
    n = params.N + 2
    H = dense_hamiltonian(params)
    ups = _magnetisation(n)
    # the block split is only valid if H never changes the magnetisation
    coo = H.tocoo()
    if np.any(ups[coo.row] != ups[coo.col]):
        raise AssertionError("dense Hamiltonian does not conserve magnetisation")
    for count in range(n + 1):
        idx = np.flatnonzero(ups == count)
        w, V = np.linalg.eigh(H[idx][:, idx].toarray())
        yield idx, w, V


def dense_population_grid(times, params: ModelParams, x0: XState) -> np.ndarray:
    """Central-spin up population from the full many-body evolution."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = params.N + 2
    rho0 = _dense_initial(params, x0)
    central_up = np.arange(2**n) < 2 ** (n - 1)
    total = np.zeros(len(times), dtype=complex)
    for idx, w, V in _dense_sectors(params):
        rho_s = rho0[idx][:, idx].toarray()
        rho_t = V.conj().T @ rho_s @ V
        P_t = V[central_up[idx]].conj().T @ V[central_up[idx]]
        M = (P_t.T * rho_t)[None]
        total += _phase_sum(M, w[None], np.ones(1), times)
    return total.real


def dense_evolution(t: float, params: ModelParams, x0: XState) -> float:
    return float(dense_population_grid([t], params, x0)[0])


def dense_propagator(params: ModelParams, t: float) -> np.ndarray:
    """Full ``exp(-i H t)`` as a dense matrix; intended for small baths only."""
    d = 2 ** (params.N + 2)
    U = np.zeros((d, d), dtype=complex)
    for idx, w, V in _dense_sectors(params):
        U[np.ix_(idx, idx)] = (V * np.exp(-1j * w * t)) @ V.conj().T
    return U


def dense_total_state(t: float, params: ModelParams, x0: XState) -> np.ndarray:
    U = dense_propagator(params, t)
    rho0 = _dense_initial(params, x0).toarray()
    return U @ rho0 @ U.conj().T


def dense_reduced_state(t: float, params: ModelParams, x0: XState) -> np.ndarray:
    """2x2 density matrix of the central spin."""
    rho = dense_total_state(t, params, x0)
    d = rho.shape[0] // 2
    return np.array(
        [[np.trace(rho[:d, :d]), np.trace(rho[:d, d:])], [np.trace(rho[d:, :d]), np.trace(rho[d:, d:])]]
    )
