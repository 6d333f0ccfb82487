"""Iterative refinement drivers for state-space models.

Three drivers share a common reporting format: block-coordinate descent
alternating the (B, D) and (C, D) regressions with A fixed, damped
Gauss-Newton over (B, C, D) with A fixed, and Levenberg-Marquardt over
all four matrices.  Residual Jacobians are computed by forward
sensitivity recursions (time domain) or resolvent products (frequency
domain), which are exact for this model structure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from .models import (
    FrequencyData,
    StateSpaceModel,
    TimeSeriesData,
    frequency_cost,
    is_stable,
    prediction_cost,
    resolvent_bank,
    state_trajectory,
)
from .regress import (
    estimate_bd_freq,
    estimate_bd_time,
    estimate_cd_freq,
    estimate_cd_time,
    input_response_bank,
)

__all__ = [
    "RefineOptions",
    "RefinementReport",
    "bcd_iterate",
    "gauss_newton_bcd",
    "gauss_newton_full",
    "compare_optimizers",
    "trajectory_table",
    "residual_and_jacobian",
    "cost_of",
]

_MATS = ("A", "B", "C", "D")
_TINY = np.finfo(float).tiny
_MAX_DAMPING = 1e12


@dataclass(frozen=True)
class RefineOptions:
    """Loop controls shared by the refinement drivers.

    ``enforce_stability`` set to None applies the stability guard to
    discrete-time models only; True or False forces it on or off.
    ``fixed`` removes matrices from the free set of the Gauss-Newton
    drivers (A is always fixed for the BCD and GN-BCD drivers).
    """

    max_sweeps: int = 50
    rel_tol: float = 1e-9
    damping_init: float = 1e-3
    enforce_stability: bool | None = None
    fixed: frozenset = frozenset()

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.damping_init < 0:
            raise ValueError(f"damping_init must be >= 0, got {self.damping_init}")
        fixed = frozenset(self.fixed)
        if not fixed <= set(_MATS):
            raise ValueError(f"fixed must be a subset of {_MATS}, got {sorted(fixed)}")
        object.__setattr__(self, "fixed", fixed)


@dataclass
class RefinementReport:
    """Cost trajectory and convergence record of one refinement run."""

    cost_trajectory: list[float] = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False
    method: str = ""
    wall_time: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "sweeps": self.sweeps,
            "wall_time_s": self.wall_time,
            "cost_trajectory": list(self.cost_trajectory),
        }


def cost_of(model: StateSpaceModel, data) -> float:
    if isinstance(data, TimeSeriesData):
        return prediction_cost(model, data)
    if isinstance(data, FrequencyData):
        return frequency_cost(model, data)
    raise TypeError(f"unsupported data type {type(data).__name__}")


def _estimate_bd(model, data):
    if isinstance(data, TimeSeriesData):
        return estimate_bd_time(model.A, model.C, data)
    return estimate_bd_freq(model.A, model.C, data)


def _estimate_cd(model, data):
    if isinstance(data, TimeSeriesData):
        return estimate_cd_time(model.A, model.B, data)
    return estimate_cd_freq(model.A, model.B, data)


def bcd_iterate(model: StateSpaceModel, data,
                opts: RefineOptions = RefineOptions()) -> tuple[StateSpaceModel, RefinementReport]:
    """Alternate the (B, D) and (C, D) regressions with A fixed.

    Each sweep starts with the (B, D) step.  The cost is recorded after
    every half-step and can never rise, since each regression minimizes
    its block with the other matrices held at their current values.
    """
    t0 = time.perf_counter()
    cur = model
    traj = [cost_of(cur, data)]
    converged = False
    sweeps = 0
    for _ in range(opts.max_sweeps):
        before = traj[-1]
        res = _estimate_bd(cur, data)
        cur = res.estimate
        traj.append(res.cost)
        res = _estimate_cd(cur, data)
        cur = res.estimate
        traj.append(res.cost)
        sweeps += 1
        if before - traj[-1] <= opts.rel_tol * max(before, _TINY):
            converged = True
            break
    report = RefinementReport(traj, sweeps, converged, "BCD",
                              time.perf_counter() - t0)
    return cur, report


def _pack(model: StateSpaceModel, free: tuple[str, ...]) -> np.ndarray:
    return np.concatenate([getattr(model, m).ravel() for m in free])


def _unpack(model: StateSpaceModel, theta: np.ndarray,
            free: tuple[str, ...]) -> StateSpaceModel:
    mats = {m: getattr(model, m) for m in _MATS}
    k = 0
    for m in free:
        shape = mats[m].shape
        size = mats[m].size
        mats[m] = theta[k:k + size].reshape(shape)
        k += size
    return StateSpaceModel(mats["A"], mats["B"], mats["C"], mats["D"], ts=model.ts)


def _time_residual_jacobian(model, data, free):
    A, B, C, D = model.A, model.B, model.C, model.D
    u, y = data.u, data.y
    N, nu = u.shape
    ny, n = C.shape
    X = state_trajectory(A, B, u)
    r = (X @ C.T + u @ D.T - y).reshape(-1)
    need_a = "A" in free
    need_b = "B" in free
    blocks = {}
    if need_a or need_b:
        # one scalar-driven matrix recursion per input channel (B) and per
        # state channel (A); the product with C gives the output sensitivities
        sigs = []
        if need_b:
            sigs.append(u)
        if need_a:
            sigs.append(X)
        S = np.hstack(sigs)
        c = S.shape[1]
        W = np.zeros((c, n, n))
        CW = np.empty((N, c, ny, n))
        diag = np.arange(n)
        for t in range(N):
            CW[t] = C @ W
            W = A @ W
            W[:, diag, diag] += S[t][:, None]
        off = 0
        if need_b:
            blocks["B"] = np.transpose(CW[:, :nu], (0, 2, 3, 1)).reshape(N, ny, n * nu)
            off = nu
        if need_a:
            blocks["A"] = np.transpose(CW[:, off:off + n], (0, 2, 3, 1)).reshape(N, ny, n * n)
    if "C" in free:
        JC = np.zeros((N, ny, ny * n))
        for i in range(ny):
            JC[:, i, i * n:(i + 1) * n] = X
        blocks["C"] = JC
    if "D" in free:
        JD = np.zeros((N, ny, ny * nu))
        for i in range(ny):
            JD[:, i, i * nu:(i + 1) * nu] = u
        blocks["D"] = JD
    J = np.concatenate([blocks[m] for m in free], axis=2)
    return r, J.reshape(N * ny, -1)


def _freq_residual_jacobian(model, fd, free):
    A, B, C, D = model.A, model.B, model.C, model.D
    R = resolvent_bank(A, fd.omega, model.ts)
    K, ny, nu = fd.n_freqs, model.ny, model.nu
    n = model.n
    E = C @ R @ B + D - fd.G
    r = np.concatenate([E.real.ravel(), E.imag.ravel()])
    CR = C @ R
    RB = R @ B
    blocks = {}
    if "A" in free:
        blocks["A"] = np.einsum("kia,kbj->kijab", CR, RB).reshape(K, ny, nu, n * n)
    if "B" in free:
        JB = np.zeros((K, ny, nu, n, nu), dtype=complex)
        for j in range(nu):
            JB[:, :, j, :, j] = CR
        blocks["B"] = JB.reshape(K, ny, nu, n * nu)
    if "C" in free:
        JC = np.zeros((K, ny, nu, ny, n), dtype=complex)
        RBt = np.transpose(RB, (0, 2, 1))
        for i in range(ny):
            JC[:, i, :, i, :] = RBt
        blocks["C"] = JC.reshape(K, ny, nu, ny * n)
    if "D" in free:
        JD = np.zeros((K, ny, nu, ny, nu), dtype=complex)
        for i in range(ny):
            for j in range(nu):
                JD[:, i, j, i, j] = 1.0
        blocks["D"] = JD.reshape(K, ny, nu, ny * nu)
    Jc = np.concatenate([blocks[m] for m in free], axis=3).reshape(K * ny * nu, -1)
    return r, np.vstack([Jc.real, Jc.imag])


def residual_and_jacobian(model: StateSpaceModel, data, free) -> tuple[np.ndarray, np.ndarray]:
    """Stacked residual vector and its Jacobian w.r.t. the free matrices.

    ``free`` is an ordered tuple drawn from ("A", "B", "C", "D"); columns
    follow row-major vec ordering of each matrix in that order.
    """
    free = tuple(m for m in _MATS if m in free)
    if isinstance(data, TimeSeriesData):
        return _time_residual_jacobian(model, data, free)
    if isinstance(data, FrequencyData):
        return _freq_residual_jacobian(model, data, free)
    raise TypeError(f"unsupported data type {type(data).__name__}")


def _lm_step(J, r, lam):
    if lam == 0.0:
        sol, _, _, _ = np.linalg.lstsq(J, -r, rcond=None)
        return sol
    P = J.shape[1]
    Jd = np.vstack([J, np.sqrt(lam) * np.eye(P)])
    rd = np.concatenate([r, np.zeros(P)])
    sol, _, _, _ = np.linalg.lstsq(Jd, -rd, rcond=None)
    return sol


def _gauss_newton(model, data, opts, free, method):
    t0 = time.perf_counter()
    free = tuple(m for m in _MATS if m in free)
    if not free:
        raise ValueError("no free matrices to optimize")
    guard_stability = "A" in free and (
        opts.enforce_stability if opts.enforce_stability is not None
        else model.is_discrete
    )
    cur = model
    cost = cost_of(cur, data)
    traj = [cost]
    lam = opts.damping_init
    converged = False
    iters = 0
    for _ in range(opts.max_sweeps):
        r, J = residual_and_jacobian(cur, data, free)
        if not np.all(np.isfinite(J)) or not np.all(np.isfinite(r)):
            raise ValueError("non-finite residual or Jacobian in Gauss-Newton step")
        if np.linalg.norm(J.T @ r) <= 1e-14 * (1.0 + cost):
            converged = True
            break
        theta = _pack(cur, free)
        accepted = False
        while True:
            delta = _lm_step(J, r, lam)
            cand_cost = np.inf
            cand = None
            if np.all(np.isfinite(delta)):
                cand = _unpack(cur, theta + delta, free)
                if not guard_stability or is_stable(cand):
                    cand_cost = cost_of(cand, data)
            if cand_cost < cost:
                accepted = True
                break
            lam = max(lam, 1e-7) * 10.0
            if lam > _MAX_DAMPING:
                break
        if not accepted:
            break
        prev = cost
        cur = cand
        cost = cand_cost
        traj.append(cost)
        iters += 1
        lam /= 3.0
        if prev - cost <= opts.rel_tol * max(prev, _TINY):
            converged = True
            break
    report = RefinementReport(traj, iters, converged, method,
                              time.perf_counter() - t0)
    return cur, report


def gauss_newton_bcd(model: StateSpaceModel, data,
                     opts: RefineOptions = RefineOptions()) -> tuple[StateSpaceModel, RefinementReport]:
    """Damped Gauss-Newton over (B, C, D) with A held fixed.

    Steps that would raise the cost are rejected and the damping is
    increased; a rejected step never changes the current model.
    """
    free = tuple(m for m in ("B", "C", "D") if m not in opts.fixed)
    return _gauss_newton(model, data, opts, free, "GN_BCD")


def gauss_newton_full(model: StateSpaceModel, data,
                      opts: RefineOptions = RefineOptions()) -> tuple[StateSpaceModel, RefinementReport]:
    """Levenberg-Marquardt over all of (A, B, C, D).

    The parameterization is deliberately redundant (state-basis changes
    are cost-neutral), which the minimum-norm step handles.  With the
    stability guard active, steps producing an unstable A are rejected.
    """
    free = tuple(m for m in _MATS if m not in opts.fixed)
    return _gauss_newton(model, data, opts, free, "GN_FULL")


def compare_optimizers(model0: StateSpaceModel, data,
                       opts: RefineOptions = RefineOptions()):
    """Run BCD, GN-BCD and GN-FULL from the same start; returns three reports."""
    _, rep_bcd = bcd_iterate(model0, data, opts)
    _, rep_gn_bcd = gauss_newton_bcd(model0, data, opts)
    _, rep_gn_full = gauss_newton_full(model0, data, opts)
    return rep_bcd, rep_gn_bcd, rep_gn_full


def trajectory_table(reports) -> tuple[np.ndarray, np.ndarray]:
    """Step-aligned cost trajectories normalized by the initial cost.

    BCD trajectories are sampled at full-sweep boundaries so one table row
    corresponds to one sweep or one Gauss-Newton iteration.  Shorter
    trajectories are padded by holding their final value.  Returns
    (steps, table) with one column per report.
    """
    cols = []
    for rep in reports:
        traj = np.asarray(rep.cost_trajectory, dtype=float)
        if rep.method == "BCD":
            traj = traj[0::2]
        scale = traj[0] if traj[0] > 0 else 1.0
        cols.append(traj / scale)
    steps = max(len(c) for c in cols)
    table = np.empty((steps, len(cols)))
    for j, c in enumerate(cols):
        table[:len(c), j] = c
        table[len(c):, j] = c[-1]
    return np.arange(steps), table
