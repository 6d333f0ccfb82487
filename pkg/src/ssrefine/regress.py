"""Closed-form least-squares estimation of (B, D) and (C, D) blocks.

With A and C fixed the predicted output is linear in (B, D); with A and B
fixed it is linear in (C, D).  Both blocks are therefore solved by a
single orthogonal-factorization least squares, in the time domain and the
frequency domain.  Rank-deficient problems return the minimum-norm
solution together with a flag instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .models import (
    FrequencyData,
    StateSpaceModel,
    TimeSeriesData,
    frequency_cost,
    prediction_cost,
    resolvent_bank,
    state_trajectory,
)

__all__ = [
    "RegressionResult",
    "estimate_bd_time",
    "estimate_cd_time",
    "estimate_bd_freq",
    "estimate_cd_freq",
    "normal_equation_residual",
]


@dataclass(frozen=True)
class RegressionResult:
    """Least-squares solution for one coordinate block.

    ``estimate`` carries the full model with the re-estimated matrices
    substituted in, ``cost`` is the relevant cost recomputed on it, and
    ``rank`` is the numerical rank of the design matrix.
    """

    estimate: StateSpaceModel
    cost: float
    rank: int
    rank_deficient: bool


def _as_2d(x, name):
    m = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def input_response_bank(A: np.ndarray, C: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-channel unit-basis responses used as B-regressors.

    Entry ``[t, j, i, k]`` is the output ``i`` at time ``t`` of the system
    (A, e_k, C, 0) driven by input channel ``j``, i.e. the sensitivity of
    the prediction to B[k, j].  Computed by one batched matrix recursion
    per step, which matches the one-simulation-per-basis-entry definition
    exactly by superposition.
    """
    N, nu = u.shape
    n = A.shape[0]
    ny = C.shape[0]
    W = np.zeros((nu, n, n))
    CW = np.empty((N, nu, ny, n))
    diag = np.arange(n)
    for t in range(N):
        CW[t] = C @ W
        W = A @ W
        W[:, diag, diag] += u[t][:, None]
    return CW


def _bd_time_design(A, C, u):
    N, nu = u.shape
    n = A.shape[0]
    ny = C.shape[0]
    CW = input_response_bank(A, C, u)
    # column order matches vec(B) row-major, then vec(D) row-major
    phi_b = np.transpose(CW, (0, 2, 3, 1)).reshape(N, ny, n * nu)
    phi_d = np.zeros((N, ny, ny * nu))
    for i in range(ny):
        phi_d[:, i, i * nu:(i + 1) * nu] = u
    return np.concatenate([phi_b, phi_d], axis=2).reshape(N * ny, n * nu + ny * nu)


def estimate_bd_time(A: np.ndarray, C: np.ndarray,
                     data: TimeSeriesData) -> RegressionResult:
    """Minimize the time-domain cost over (B, D) with (A, C) fixed."""
    A = _as_2d(A, "A")
    C = _as_2d(C, "C")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got {A.shape}")
    if C.shape[1] != n:
        raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
    ny, nu = C.shape[0], data.nu
    if data.ny != ny:
        raise ValueError(f"data has {data.ny} outputs, C has {ny} rows")
    cols = n * nu + ny * nu
    if data.n_samples * ny < cols:
        raise ValueError(
            f"{data.n_samples * ny} equations for {cols} unknowns: too few samples"
        )
    Phi = _bd_time_design(A, C, data.u)
    sol, _, rank, _ = np.linalg.lstsq(Phi, data.y.reshape(-1), rcond=None)
    B = sol[:n * nu].reshape(n, nu)
    D = sol[n * nu:].reshape(ny, nu)
    model = StateSpaceModel(A, B, C, D, ts=data.ts)
    return RegressionResult(model, prediction_cost(model, data), int(rank),
                            bool(rank < cols))


def estimate_cd_time(A: np.ndarray, B: np.ndarray,
                     data: TimeSeriesData) -> RegressionResult:
    """Minimize the time-domain cost over (C, D) with (A, B) fixed.

    The regression of y(t) on [x(t); u(t)] separates by output row, so a
    single multi-column solve handles all outputs at once.
    """
    A = _as_2d(A, "A")
    B = _as_2d(B, "B")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
    if B.shape[1] != data.nu:
        raise ValueError(f"data has {data.nu} inputs, B has {B.shape[1]} columns")
    cols = n + data.nu
    if data.n_samples < cols:
        raise ValueError(f"{data.n_samples} samples for {cols} unknowns per row")
    X = state_trajectory(A, B, data.u)
    Phi = np.hstack([X, data.u])
    sol, _, rank, _ = np.linalg.lstsq(Phi, data.y, rcond=None)
    C = sol[:n].T
    D = sol[n:].T
    model = StateSpaceModel(A, B, C, D, ts=data.ts)
    return RegressionResult(model, prediction_cost(model, data), int(rank),
                            bool(rank < cols))


def _real_lstsq(phi_c: np.ndarray, rhs_c: np.ndarray):
    """Real least squares of a complex system by stacking Re and Im rows."""
    Phi = np.vstack([phi_c.real, phi_c.imag])
    rhs = np.vstack([rhs_c.real, rhs_c.imag])
    sol, _, rank, _ = np.linalg.lstsq(Phi, rhs, rcond=None)
    return sol, int(rank), Phi.shape[1]


def estimate_bd_freq(A: np.ndarray, C: np.ndarray,
                     fd: FrequencyData) -> RegressionResult:
    """Minimize the frequency-domain cost over real (B, D) with (A, C) fixed."""
    A = _as_2d(A, "A")
    C = _as_2d(C, "C")
    n = A.shape[0]
    if C.shape != (fd.ny, n):
        raise ValueError(f"C must be {fd.ny}x{n}, got {C.shape}")
    R = resolvent_bank(A, fd.omega, fd.ts)
    CR = C @ R                                    # (K, ny, n)
    K, ny, nu = fd.n_freqs, fd.ny, fd.nu
    if 2 * K * ny < n + ny:
        raise ValueError("too few frequency points for the (B, D) unknowns")
    phi_c = np.concatenate(
        [CR.reshape(K * ny, n), np.tile(np.eye(ny), (K, 1))], axis=1
    )
    rhs_c = fd.G.reshape(K * ny, nu)
    sol, rank, cols = _real_lstsq(phi_c, rhs_c)
    B = sol[:n]
    D = sol[n:]
    model = StateSpaceModel(A, B, C, D, ts=fd.ts)
    return RegressionResult(model, frequency_cost(model, fd), rank,
                            bool(rank < cols))


def estimate_cd_freq(A: np.ndarray, B: np.ndarray,
                     fd: FrequencyData) -> RegressionResult:
    """Minimize the frequency-domain cost over real (C, D) with (A, B) fixed."""
    A = _as_2d(A, "A")
    B = _as_2d(B, "B")
    n = A.shape[0]
    if B.shape != (n, fd.nu):
        raise ValueError(f"B must be {n}x{fd.nu}, got {B.shape}")
    R = resolvent_bank(A, fd.omega, fd.ts)
    RB = R @ B                                    # (K, n, nu)
    K, ny, nu = fd.n_freqs, fd.ny, fd.nu
    if 2 * K * nu < n + nu:
        raise ValueError("too few frequency points for the (C, D) unknowns")
    phi_c = np.concatenate(
        [np.transpose(RB, (0, 2, 1)).reshape(K * nu, n), np.tile(np.eye(nu), (K, 1))],
        axis=1,
    )
    rhs_c = np.transpose(fd.G, (0, 2, 1)).reshape(K * nu, ny)
    sol, rank, cols = _real_lstsq(phi_c, rhs_c)
    C = sol[:n].T
    D = sol[n:].T
    model = StateSpaceModel(A, B, C, D, ts=fd.ts)
    return RegressionResult(model, frequency_cost(model, fd), rank,
                            bool(rank < cols))


def normal_equation_residual(model: StateSpaceModel, fd: FrequencyData,
                             which: str = "cd") -> float:
    """Norm of the frequency-cost gradient with respect to one matrix pair.

    A value near zero certifies stationarity of the selected block, i.e.
    that the block satisfies its least-squares normal equations.
    """
    if which not in ("bd", "cd"):
        raise ValueError(f"which must be 'bd' or 'cd', got {which!r}")
    if model.nu != fd.nu or model.ny != fd.ny:
        raise ValueError("model and data dimensions disagree")
    if model.ts != fd.ts:
        raise ValueError("model and data domains disagree")
    R = resolvent_bank(model.A, fd.omega, model.ts)
    E = model.C @ R @ model.B + model.D - fd.G      # (K, ny, nu)
    grad_d = 2.0 * np.sum(E, axis=0).real
    if which == "bd":
        CR = model.C @ R
        grad_b = 2.0 * np.einsum("kia,kij->aj", CR.conj(), E).real
        stacked = np.concatenate([grad_b.ravel(), grad_d.ravel()])
    else:
        RB = R @ model.B
        grad_c = 2.0 * np.einsum("kij,klj->il", E, RB.conj()).real
        stacked = np.concatenate([grad_c.ravel(), grad_d.ravel()])
    return float(np.linalg.norm(stacked))
