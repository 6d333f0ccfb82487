"""Deterministic subspace-style initial model estimators.

The time-domain estimator builds block-Hankel matrices of the input and
output, removes the input influence by orthogonal projection, and reads
the extended observability matrix off an SVD; A follows from shift
invariance, C from the first block row, and (B, D) from the closed-form
regression.  The frequency-domain estimator recovers pulse-response
samples by inverse discrete transform on a uniform grid (discrete
targets) or fits a discrete surrogate on the bilinearly mapped grid and
converts the matrices back (continuous targets).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
import numpy as np

from .models import FrequencyData, StateSpaceModel, TimeSeriesData
from .regress import estimate_bd_freq, estimate_bd_time

__all__ = ["SubspaceOptions", "subspace_time", "subspace_freq"]


@dataclass(frozen=True)
class SubspaceOptions:
    """Order, block-row horizon, and the singular-value diagnostic cutoff."""

    order: int
    horizon: int | None = None
    sv_tol: float = 1e-10

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        r = self.horizon if self.horizon is not None else 2 * self.order + 2
        if r <= self.order:
            raise ValueError(f"horizon must exceed the order, got {r} <= {self.order}")
        object.__setattr__(self, "horizon", int(r))


def _block_hankel(z: np.ndarray, r: int) -> np.ndarray:
    """Hankel matrix with r block rows from a time-major record (N, d)."""
    N, d = z.shape
    m = N - r + 1
    H = np.empty((r * d, m))
    for i in range(r):
        H[i * d:(i + 1) * d] = z[i:i + m].T
    return H


def _shift_invariance(Or: np.ndarray, ny: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    A, _, _, _ = np.linalg.lstsq(Or[:-ny], Or[ny:], rcond=None)
    return A, Or[:ny].copy()


def subspace_time(data: TimeSeriesData, opts: SubspaceOptions) -> StateSpaceModel:
    """Initial model from time-domain data via projection and shift invariance."""
    n, r = opts.order, opts.horizon
    nu, ny = data.nu, data.ny
    if data.n_samples < 4 * r:
        raise ValueError(
            f"need at least {4 * r} samples for horizon {r}, got {data.n_samples}"
        )
    if data.n_samples - r + 1 < r * (nu + ny):
        raise ValueError(
            f"projection degenerate: need at least {r * (nu + ny) + r - 1} "
            f"samples for horizon {r} with {nu} inputs and {ny} outputs"
        )
    if r * ny < n:
        raise ValueError(f"horizon {r} too small for order {n} with {ny} outputs")
    U = _block_hankel(data.u, r)
    Y = _block_hankel(data.y, r)
    # LQ factorization of the stacked data: the lower-right block of L is
    # the output Hankel with the input rows projected out
    Z = np.vstack([U, Y])
    R = np.linalg.qr(Z.T, mode="r")
    L = R.T
    L11 = L[:r * nu, :r * nu]
    sv_u = np.linalg.svd(L11, compute_uv=False)
    if sv_u[0] == 0 or sv_u[-1] <= 1e-10 * sv_u[0]:
        warnings.warn("input does not appear persistently exciting", stacklevel=2)
    L22 = L[r * nu:, r * nu:]
    Uo, s, _ = np.linalg.svd(L22)
    if s[0] == 0:
        raise ValueError("projected output Hankel is zero: projection degenerate")
    if s[n - 1] <= opts.sv_tol * s[0]:
        rank = int(np.sum(s > opts.sv_tol * s[0]))
        raise ValueError(
            f"order {n} exceeds the numerical rank {rank} of the projected data"
        )
    Or = Uo[:, :n] * np.sqrt(s[:n])
    A, C = _shift_invariance(Or, ny, n)
    res = estimate_bd_time(A, C, data)
    return res.estimate


def _markov_from_uniform_grid(fd: FrequencyData) -> np.ndarray:
    """Pulse-response samples by inverse FFT of the conjugate-extended grid."""
    K = fd.n_freqs
    theta = fd.ts * fd.omega
    step = np.pi / (K - 1)
    if K < 3:
        raise ValueError("need at least 3 frequency points")
    if not (np.allclose(np.diff(theta), step, rtol=1e-7, atol=1e-9)
            and abs(theta[0]) < 1e-9 and abs(theta[-1] - np.pi) < 1e-7):
        raise ValueError(
            "this estimator requires a uniform grid covering [0, pi/ts]"
        )
    M = 2 * (K - 1)
    Gext = np.empty((M, fd.ny, fd.nu), dtype=complex)
    Gext[:K] = fd.G
    Gext[K:] = fd.G[-2:0:-1].conj()
    g = np.fft.ifft(Gext, axis=0)
    return g.real


def _ho_kalman(markov: np.ndarray, n: int, r: int, sv_tol: float):
    """A and C from the SVD of the block-Hankel of pulse-response samples."""
    L, ny, nu = markov.shape
    if L < 2 * r:
        raise ValueError(f"need {2 * r} pulse-response samples, got {L}")
    H = np.empty((r * ny, r * nu))
    for i in range(r):
        for j in range(r):
            H[i * ny:(i + 1) * ny, j * nu:(j + 1) * nu] = markov[i + j]
    Uo, s, _ = np.linalg.svd(H)
    if s[0] == 0 or s[n - 1] <= sv_tol * s[0]:
        rank = 0 if s[0] == 0 else int(np.sum(s > sv_tol * s[0]))
        raise ValueError(
            f"order {n} exceeds the numerical rank {rank} of the pulse-response Hankel"
        )
    Or = Uo[:, :n] * np.sqrt(s[:n])
    return _shift_invariance(Or, ny, n)


def _surrogate_on_disk(fd: FrequencyData, z: np.ndarray, n: int, r: int,
                       sv_tol: float):
    """Discrete-surrogate (A, C) from response samples at points z on the disk.

    Projection-based estimator for arbitrary point sets: stack powers of z
    against the response and the input directions, project out the input
    block by QR, and take the SVD of the remainder.
    """
    K, ny, nu = fd.G.shape
    if 2 * K * nu < r * (nu + ny):
        raise ValueError(
            f"too few frequency points ({K}) for horizon {r} with "
            f"{nu} inputs and {ny} outputs"
        )
    W = z[None, :] ** np.arange(r)[:, None]            # (r, K)
    Gmat = np.empty((r * ny, K * nu), dtype=complex)
    Umat = np.empty((r * nu, K * nu), dtype=complex)
    eye = np.eye(nu)
    for k in range(K):
        Gmat[:, k * nu:(k + 1) * nu] = np.kron(W[:, k:k + 1], fd.G[k])
        Umat[:, k * nu:(k + 1) * nu] = np.kron(W[:, k:k + 1], eye)
    Z = np.empty((r * (nu + ny), 2 * K * nu))
    Z[:r * nu, :K * nu] = Umat.real
    Z[:r * nu, K * nu:] = Umat.imag
    Z[r * nu:, :K * nu] = Gmat.real
    Z[r * nu:, K * nu:] = Gmat.imag
    R = np.linalg.qr(Z.T, mode="r")
    L22 = R.T[r * nu:, r * nu:]
    Uo, s, _ = np.linalg.svd(L22)
    if s[0] == 0 or s[n - 1] <= sv_tol * s[0]:
        rank = 0 if s[0] == 0 else int(np.sum(s > sv_tol * s[0]))
        raise ValueError(
            f"order {n} exceeds the numerical rank {rank} of the projected data"
        )
    Or = Uo[:, :n] * np.sqrt(s[:n])
    return _shift_invariance(Or, ny, n)


def subspace_freq(fd: FrequencyData, opts: SubspaceOptions) -> StateSpaceModel:
    """Initial model from frequency-response samples.

    Discrete data (fd.ts > 0) must sit on a uniform grid covering the
    half circle; the pulse-response route applies.  Continuous data is
    mapped onto the unit disk, a discrete surrogate is estimated there,
    and the state-space matrices are converted back exactly.  Both routes
    finish with the closed-form (B, D) regression on the original data.
    """
    n, r = opts.order, opts.horizon
    if fd.ts > 0:
        markov = _markov_from_uniform_grid(fd)
        A, C = _ho_kalman(markov[1:], n, r, opts.sv_tol)
        res = estimate_bd_freq(A, C, fd)
        return res.estimate
    # bilinear pre-map of the imaginary axis onto the unit circle
    positive = fd.omega[fd.omega > 0]
    alpha = float(np.median(positive)) if positive.size else 1.0
    z = (alpha + 1j * fd.omega) / (alpha - 1j * fd.omega)
    Ad, Cd = _surrogate_on_disk(fd, z, n, r, opts.sv_tol)
    M = Ad + np.eye(n)
    if abs(np.linalg.det(M)) < 1e-12:
        raise ValueError("surrogate has a pole at the map's reflection point")
    Minv = np.linalg.inv(M)
    A = alpha * Minv @ (Ad - np.eye(n))
    C = np.sqrt(2.0 * alpha) * Cd @ Minv
    res = estimate_bd_freq(A, C, fd)
    return res.estimate
