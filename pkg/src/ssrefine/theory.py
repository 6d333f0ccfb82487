"""Constructive checks of the structural optimality results.

For a single-output map, any observable replacement row c0 admits a
polynomial-in-A transform T with c = c0 T, which commutes with A by
construction and yields an input-output equivalent realization (A, TB,
c0, D).  The commutant of a cyclic A is exactly the polynomials in A of
degree below n.  When A has distinct eigenvalues, the products of the
output map and input matrix in the eigenbasis collapse into a single
regression unknown, which this module solves directly.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .models import StateSpaceModel, TimeSeriesData, observability_matrix

__all__ = [
    "CommutantCoefficients",
    "EigenRegressionProblem",
    "commuting_transform",
    "equivalent_realization",
    "equivalent_realization_dual",
    "commutant_coefficients",
    "eigen_regression",
    "eigen_predict",
    "extract_input_matrix",
]


@dataclass(frozen=True)
class CommutantCoefficients:
    """Coefficients b with B = sum_i b_i A^i, plus the reconstruction residual."""

    coefficients: np.ndarray
    residual: float


@dataclass
class EigenRegressionProblem:
    """Combined regression data for a fixed A with distinct eigenvalues.

    ``x`` is the single matrix of combined output-map/input-matrix
    unknowns in the eigenbasis (conjugate-pair structured rows), ``d`` the
    jointly estimated feedthrough.  ``cbar`` and ``bbar`` are filled in by
    :func:`extract_input_matrix` once an output map is chosen.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    x: np.ndarray
    d: np.ndarray
    cost: float
    design_rank: int
    cbar: np.ndarray | None = None
    bbar: np.ndarray | None = None


def _row(x, name):
    r = np.atleast_2d(np.asarray(x, dtype=float))
    if r.shape[0] != 1:
        raise ValueError(f"{name} must be a single row, got shape {r.shape}")
    return r


def _matrix_polynomial(coeffs: np.ndarray, A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = coeffs[-1] * np.eye(n)
    for c in coeffs[-2::-1]:
        out = out @ A + c * np.eye(n)
    return out


def commuting_transform(A: np.ndarray, c_target: np.ndarray,
                        c_basis: np.ndarray, tol: float = 1e-8):
    """Polynomial-in-A transform T with c_target = c_basis T.

    The coefficients solve the linear system whose rows are c_basis A^i,
    which has full rank exactly when (A, c_basis) is observable.  T
    commutes with A by construction.  Returns (T, coefficients).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    ct = _row(c_target, "c_target")
    cb = _row(c_basis, "c_basis")
    if ct.shape[1] != n or cb.shape[1] != n:
        raise ValueError(f"output rows must have {n} entries")
    O = observability_matrix(A, cb)
    sv = np.linalg.svd(O, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= tol * sv[0]:
        rank = int(np.sum(sv > tol * max(sv[0], np.finfo(float).tiny)))
        raise ValueError(
            f"(A, c_basis) unobservable: observability matrix has numerical "
            f"rank {rank} < {n}"
        )
    coeffs, _, _, _ = np.linalg.lstsq(O.T, ct.ravel(), rcond=None)
    return _matrix_polynomial(coeffs, A), coeffs


def equivalent_realization(A, B, C, D, C0):
    """Input-output equivalent realization with the output row replaced by C0.

    Applies to single-output (row C) systems; returns (B0, D0) such that
    (A, B0, C0, D0) has the same Markov parameters as (A, B, C, D).
    """
    T, _ = commuting_transform(A, C, C0)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.ndim == 2 and B.shape[0] == 1 and T.shape[0] > 1:
        B = B.reshape(-1, 1)
    return T @ B, np.atleast_2d(np.asarray(D, dtype=float)).copy()


def equivalent_realization_dual(A, B, C, D, B0):
    """Single-input counterpart realized through the transposed system.

    Given a single-input system and a replacement column B0 with (A, B0)
    controllable, returns (C0, D0) such that (A, B0, C0, D0) matches the
    Markov parameters of (A, B, C, D).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    B0 = np.asarray(B0, dtype=float).reshape(A.shape[0], -1)
    if B.shape[1] != 1 or B0.shape[1] != 1:
        raise ValueError("dual construction applies to single-input systems")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    T, _ = commuting_transform(A.T, B.T, B0.T)
    return C @ T.T, np.atleast_2d(np.asarray(D, dtype=float)).copy()


def commutant_coefficients(A: np.ndarray, B: np.ndarray, v: np.ndarray,
                           tol: float = 1e-8) -> CommutantCoefficients:
    """Expand a matrix commuting with A as a polynomial in A.

    Requires the vectors v, Av, ..., A^(n-1) v to span the state space and
    A B = B A up to tolerance; violating either raises, the commutation
    error carrying the commutator norm.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    v = np.asarray(v, dtype=float).ravel()
    n = A.shape[0]
    if B.shape != (n, n) or v.size != n:
        raise ValueError("A, B must be n x n and v of length n")
    comm = np.linalg.norm(A @ B - B @ A)
    scale = np.linalg.norm(A) * np.linalg.norm(B) + np.finfo(float).tiny
    if comm > tol * scale:
        raise ValueError(
            f"matrices do not commute: commutator norm {comm:.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )
    K = np.empty((n, n))
    w = v.copy()
    for i in range(n):
        K[:, i] = w
        w = A @ w
    sv = np.linalg.svd(K, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= tol * sv[0]:
        rank = int(np.sum(sv > tol * max(sv[0], np.finfo(float).tiny)))
        raise ValueError(f"Krylov basis rank-deficient: rank {rank} < {n}")
    rhs = B @ v
    b, _, _, _ = np.linalg.lstsq(K, rhs, rcond=None)
    b += np.linalg.lstsq(K, rhs - K @ b, rcond=None)[0]
    residual = float(np.linalg.norm(B - _matrix_polynomial(b, A)))
    return CommutantCoefficients(coefficients=b, residual=residual)


def _pair_eigenvalues(lam: np.ndarray, scale: float):
    """Group eigenvalue indices into real singles and conjugate pairs."""
    n = lam.size
    used = np.zeros(n, dtype=bool)
    groups = []
    imag_tol = 1e-12 * max(scale, 1.0)
    for i in range(n):
        if used[i]:
            continue
        if abs(lam[i].imag) <= imag_tol:
            used[i] = True
            groups.append((i, None))
            continue
        partner = None
        best = np.inf
        for j in range(i + 1, n):
            if used[j]:
                continue
            d = abs(lam[j] - lam[i].conjugate())
            if d < best:
                best = d
                partner = j
        if partner is None or best > 1e-6 * max(scale, 1.0):
            raise ValueError("complex eigenvalues do not come in conjugate pairs")
        used[i] = used[partner] = True
        groups.append((i, partner))
    return groups


def eigen_regression(A: np.ndarray, data: TimeSeriesData,
                     gap_tol: float = 1e-8):
    """Joint regression of the combined eigenbasis unknowns and feedthrough.

    Requires a single-output record and distinct eigenvalues of A.  The
    regressors per mode are the input convolved with the mode's power
    sequence; conjugate-pair structure is enforced so the solution maps
    back to a real model.  Returns (problem, x, cost).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if data.ny != 1:
        raise ValueError("eigen regression applies to single-output data")
    lam, P = np.linalg.eig(A)
    scale = np.linalg.norm(A, 2)
    gaps = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() <= gap_tol * max(scale, np.finfo(float).tiny):
        raise ValueError(
            f"eigenvalues not distinct: minimum gap {gaps.min():.3e} at scale {scale:.3e}"
        )
    condP = np.linalg.cond(P)
    if not np.isfinite(condP) or condP > 1e10:
        raise ValueError(f"eigenvector matrix ill-conditioned (cond {condP:.3e})")
    u, y = data.u, data.y
    N, nu = u.shape
    # per-mode convolutions: xi(t+1) = lam * xi(t) + u(t), xi(1) = 0
    xi = np.zeros((n, nu), dtype=complex)
    Xi = np.empty((N, n, nu), dtype=complex)
    for t in range(N):
        Xi[t] = xi
        xi = lam[:, None] * xi + u[t][None, :]
    groups = _pair_eigenvalues(lam, scale)
    cols = []
    layout = []  # (kind, mode_index, input, column_offset)
    for (i, j) in groups:
        for q in range(nu):
            if j is None:
                layout.append(("real", i, q, len(cols)))
                cols.append(Xi[:, i, q].real)
            else:
                layout.append(("pair", i, q, len(cols)))
                cols.append(2.0 * Xi[:, i, q].real)
                cols.append(-2.0 * Xi[:, i, q].imag)
    d_off = len(cols)
    for q in range(nu):
        cols.append(u[:, q])
    Phi = np.column_stack(cols)
    sol, _, rank, _ = np.linalg.lstsq(Phi, y.ravel(), rcond=None)
    cost = float(np.sum((y.ravel() - Phi @ sol) ** 2))
    X = np.zeros((n, nu), dtype=complex)
    for kind, i, q, off in layout:
        if kind == "real":
            X[i, q] = sol[off]
        else:
            X[i, q] = sol[off] + 1j * sol[off + 1]
    for (i, j) in groups:
        if j is not None:
            X[j] = X[i].conj()
    d = sol[d_off:].reshape(1, nu)
    problem = EigenRegressionProblem(
        eigenvalues=lam, eigenvectors=P, x=X, d=d, cost=cost,
        design_rank=int(rank),
    )
    return problem, X, cost


def eigen_predict(problem: EigenRegressionProblem, u: np.ndarray) -> np.ndarray:
    """Predictions of the combined-unknown model for a fresh input record."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    N = u.shape[0]
    lam = problem.eigenvalues
    x = np.zeros(lam.size, dtype=complex)
    yhat = np.empty((N, 1))
    for t in range(N):
        yhat[t, 0] = x.sum().real + float(problem.d[0] @ u[t])
        x = lam * x + problem.x @ u[t]
    return yhat


def extract_input_matrix(problem: EigenRegressionProblem,
                         c_fixed: np.ndarray,
                         imag_tol: float = 1e-9) -> np.ndarray:
    """Recover a real input matrix from the combined unknowns for a chosen row.

    Requires every eigenbasis component of the chosen row to be nonzero
    (an exact zero marks an unobservable mode).  Records the eigenbasis
    row and input matrix on the problem and returns the real B.
    """
    c = _row(c_fixed, "c_fixed")
    P = problem.eigenvectors
    if c.shape[1] != P.shape[0]:
        raise ValueError(f"c_fixed must have {P.shape[0]} entries")
    cbar = (c @ P).ravel()
    mags = np.abs(cbar)
    floor = 1e-10 * max(mags.max(), np.finfo(float).tiny)
    dead = np.nonzero(mags <= floor)[0]
    if dead.size:
        raise ValueError(
            f"mode {int(dead[0])} unobservable for the given output row "
            "(zero eigenbasis component)"
        )
    bbar = problem.x / cbar[:, None]
    Bc = P @ bbar
    imag_resid = float(np.linalg.norm(Bc.imag))
    if imag_resid > imag_tol * max(1.0, np.linalg.norm(Bc.real)):
        raise ValueError(
            f"extracted input matrix is not real (imaginary residual {imag_resid:.3e})"
        )
    problem.cbar = cbar.reshape(1, -1)
    problem.bbar = bbar
    return Bc.real
