"""Short- and open-circuit modal analysis of the assembled harvester.

Short-circuit modes solve the plain structural pencil (K, M). Open-circuit
modes use the electrically stiffened K* = K + Theta*Theta^T / Cp obtained by
statically condensing the voltage out of the governing equations; the added
term is rank-1 positive semidefinite, so every open-circuit frequency sits at
or above its short-circuit counterpart, with equality exactly when the mode is
electromechanically blind (Theta^T phi = 0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .harvester import AssembledSystem

__all__ = ["ModalBasis", "short_circuit_modes", "open_circuit_modes"]

# relative residual ||(K - w^2 M) phi|| / ||K phi|| accepted from the solver
_RESIDUAL_TOL = 1e-8


@dataclass(eq=False)
class ModalBasis:
    """Mass-normalized eigenpairs of one electrical boundary condition.

    circuit     : "short" or "open"
    frequencies : ascending natural frequencies (Hz), length N_m
    shapes      : n_m x N_m matrix of mass-normalized mode vectors
    """

    circuit: str
    frequencies: np.ndarray
    shapes: np.ndarray

    @property
    def N_m(self) -> int:
        return len(self.frequencies)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies


def _solve_pencil(K: np.ndarray, M: np.ndarray, n_modes: int, circuit: str) -> ModalBasis:
    n_m = K.shape[0]
    if not (1 <= n_modes <= n_m):
        raise ValueError(f"need 1 <= n_modes <= {n_m}, got {n_modes}")
    # symmetric-definite generalized solve (Cholesky reduction internally);
    # dense is fine at the ~10^2 DOF counts this mesh produces
    try:
        w2, V = eigh(K, M, subset_by_index=[0, n_modes - 1])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed on the {circuit}-circuit pencil: {exc}") from exc

    if w2[0] <= 0.0:
        raise RuntimeError(
            f"{circuit}-circuit pencil returned a non-positive eigenvalue {w2[0]:.3e}; "
            "the system is not clamped properly"
        )

    # backward error per eigenpair: ||K v - w2 M v|| / ((||K|| + w2 ||M||) ||v||),
    # the right yardstick when the pencil mixes stiff axial and soft bending rows
    nrm_K = np.linalg.norm(K, ord=np.inf)
    nrm_M = np.linalg.norm(M, ord=np.inf)
    raw = np.linalg.norm(K @ V - (M @ V) * w2, axis=0)
    res = raw / ((nrm_K + w2 * nrm_M) * np.linalg.norm(V, axis=0))
    if np.any(res > _RESIDUAL_TOL):
        raise RuntimeError(
            f"eigen residuals too large for the {circuit}-circuit solve: "
            + ", ".join(f"{r:.2e}" for r in res)
        )

    gaps = np.diff(w2) / w2[1:]
    if np.any(gaps < 1e-6):
        # not expected for a straight cantilever; re-orthonormalize just in case
        warnings.warn(
            "near-degenerate eigenvalues detected; orthonormalizing within the cluster",
            RuntimeWarning,
        )
        B = V.T @ M @ V
        V = V @ np.linalg.inv(np.linalg.cholesky(B)).T

    # deterministic sign: largest-magnitude entry of every shape made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    V = V * signs

    return ModalBasis(circuit=circuit, frequencies=np.sqrt(w2) / (2.0 * np.pi), shapes=V)


def short_circuit_modes(sys_: AssembledSystem, n_modes: int = 5) -> ModalBasis:
    """Lowest n_modes eigenpairs with the electrodes shorted (R_l -> 0)."""
    return _solve_pencil(sys_.K, sys_.M, n_modes, "short")


def open_circuit_modes(sys_: AssembledSystem, n_modes: int = 5) -> ModalBasis:
    """Lowest n_modes eigenpairs with the electrodes open (R_l -> inf).

    The voltage is condensed statically: K* = K + Theta Theta^T / Cp.
    """
    K_star = sys_.K + np.outer(sys_.Theta, sys_.Theta) / sys_.Cp
    return _solve_pencil(K_star, sys_.M, n_modes, "open")
