"""Seeded property suites behind the ``verify`` CLI subcommand.

Each check runs a number of randomized trials at fixed tolerances and
returns a JSON-serializable verdict carrying the worst residual seen.
"""

from __future__ import annotations

import numpy as np

from .models import (
    FrequencyData,
    StateSpaceModel,
    TimeSeriesData,
    frequency_response,
    io_equivalent,
    markov_parameters,
    observable,
    random_stable_discrete,
    similarity_transform,
    simulate,
)
from .refine import RefineOptions, bcd_iterate, gauss_newton_bcd
from .regress import estimate_bd_time, estimate_cd_freq, estimate_cd_time
from .theory import commutant_coefficients, commuting_transform, eigen_regression

__all__ = ["run_property_check", "PROPERTY_NAMES"]

PROPERTY_NAMES = (
    "lemma1",
    "thm-fixed-a",
    "simo-two-step",
    "commutant",
    "eigen-regression",
    "simo-similarity",
)


def _observable_row(n, rng, A):
    for _ in range(50):
        c = rng.standard_normal((1, n))
        if observable(A, c, 1e-6):
            return c
    raise RuntimeError("failed to draw an observable output row")


def _miso_instance(rng, n_samples=300, noise=0.5):
    n = int(rng.integers(2, 6))
    nu = int(rng.integers(1, 4))
    truth = random_stable_discrete(n, nu, 1, seed=rng)
    u = rng.standard_normal((n_samples, nu))
    y = simulate(truth, u) + noise * rng.standard_normal((n_samples, 1))
    return truth, TimeSeriesData(u, y, ts=1.0)


def _simo_instance(rng, n_samples=300, noise=0.5):
    n = int(rng.integers(2, 6))
    ny = int(rng.integers(2, 4))
    truth = random_stable_discrete(n, 1, ny, seed=rng)
    u = rng.standard_normal((n_samples, 1))
    y = simulate(truth, u) + noise * rng.standard_normal((n_samples, ny))
    return truth, TimeSeriesData(u, y, ts=1.0)


def check_lemma1(trials: int, seed: int) -> dict:
    """Replaced output rows give commuting transforms and matched pulse responses."""
    rng = np.random.default_rng(seed)
    worst_comm = 0.0
    worst_markov = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        nu = int(rng.integers(1, 4))
        m = random_stable_discrete(n, nu, 1, seed=rng)
        c0 = _observable_row(n, rng, m.A)
        T, _ = commuting_transform(m.A, m.C, c0)
        comm = np.linalg.norm(T @ m.A - m.A @ T)
        m0 = StateSpaceModel(m.A, T @ m.B, c0, m.D, ts=m.ts)
        h1 = markov_parameters(m, 2 * n)
        h2 = markov_parameters(m0, 2 * n)
        markov = float(np.max(np.linalg.norm(h1.h - h2.h, axis=(1, 2))))
        markov = max(markov, float(np.linalg.norm(h1.d0 - h2.d0)))
        worst_comm = max(worst_comm, comm)
        worst_markov = max(worst_markov, markov)
    ok = worst_comm < 1e-10 and worst_markov < 1e-9
    return {"property": "lemma1", "pass": bool(ok), "trials": trials, "seed": seed,
            "worst": {"commutation": worst_comm, "markov_mismatch": worst_markov}}


def check_fixed_a_optimality(trials: int, seed: int, freq: bool = False) -> dict:
    """The (B, D) regression from any observable row attains the fixed-A optimum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    opts = RefineOptions(max_sweeps=300, rel_tol=1e-14)
    for _ in range(trials):
        truth, data = _miso_instance(rng)
        A = truth.A
        n, nu = truth.n, truth.nu
        c0 = _observable_row(n, rng, A)
        if freq:
            data = _fd_from(truth, rng)
            from .regress import estimate_bd_freq
            ref = estimate_bd_freq(A, c0, data)
        else:
            ref = estimate_bd_time(A, c0, data)
        start = StateSpaceModel(A, rng.standard_normal((n, nu)),
                                rng.standard_normal((1, n)),
                                rng.standard_normal((1, nu)), ts=data.ts)
        _, rep = gauss_newton_bcd(start, data, opts)
        gap = abs(ref.cost - rep.cost_trajectory[-1]) / (1.0 + ref.cost)
        worst = max(worst, gap)
    name = "thm-fixed-a-freq" if freq else "thm-fixed-a"
    return {"property": name, "pass": bool(worst < 1e-7), "trials": trials,
            "seed": seed, "worst": {"relative_cost_gap": worst}}


def _fd_from(truth, rng, n_freqs=60, noise=0.05):
    omega = np.linspace(0.0, np.pi / truth.ts, n_freqs)[:-1] + 1e-3
    G = frequency_response(truth, omega)
    eps = (rng.standard_normal(G.shape) + 1j * rng.standard_normal(G.shape)) / np.sqrt(2)
    return FrequencyData(omega, G + noise * eps, ts=truth.ts)


def check_simo_two_step(trials: int, seed: int, freq: bool = False) -> dict:
    """One sweep suffices for single-input systems; sweep two changes nothing."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    opts = RefineOptions(max_sweeps=3, rel_tol=1e-16)
    for _ in range(trials):
        truth, data = _simo_instance(rng)
        if freq:
            data = _fd_from(truth, rng)
        n, nu, ny = truth.n, truth.nu, truth.ny
        start = StateSpaceModel(truth.A, rng.standard_normal((n, nu)),
                                rng.standard_normal((ny, n)),
                                np.zeros((ny, nu)), ts=data.ts)
        _, rep = bcd_iterate(start, data, opts)
        traj = rep.cost_trajectory
        # entries: initial, bd1, cd1, bd2, cd2, ...
        if len(traj) >= 5:
            c1, c2 = traj[2], traj[4]
            worst = max(worst, abs(c1 - c2) / max(c1, np.finfo(float).tiny))
    name = "simo-two-step-freq" if freq else "simo-two-step"
    return {"property": name, "pass": bool(worst < 1e-10), "trials": trials,
            "seed": seed, "worst": {"sweep2_relative_change": worst}}


def check_commutant(trials: int, seed: int) -> dict:
    """Polynomials in A are recovered; non-commuting matrices are rejected."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    rejected = 0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        m = random_stable_discrete(n, 1, 1, seed=rng)
        A = m.A
        coeffs = rng.standard_normal(n)
        B = np.zeros((n, n))
        P = np.eye(n)
        for c in coeffs:
            B = B + c * P
            P = P @ A
        v = rng.standard_normal(n)
        got = commutant_coefficients(A, B, v)
        scale = np.linalg.norm(B) + np.finfo(float).tiny
        worst = max(worst, got.residual / scale,
                    float(np.linalg.norm(got.coefficients - coeffs))
                    / (np.linalg.norm(coeffs) + np.finfo(float).tiny))
        Bbad = rng.standard_normal((n, n))
        try:
            commutant_coefficients(A, Bbad, v)
        except ValueError:
            rejected += 1
    ok = worst < 1e-8 and rejected == trials
    return {"property": "commutant", "pass": bool(ok), "trials": trials,
            "seed": seed,
            "worst": {"relative_residual": worst,
                      "non_commuting_rejected": rejected}}


def check_eigen_regression(trials: int, seed: int) -> dict:
    """The combined-unknown regression matches the (B, D) regression cost."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < trials:
        truth, data = _miso_instance(rng)
        A = truth.A
        eig = np.linalg.eigvals(A)
        gaps = np.abs(eig[:, None] - eig[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() <= 1e-6 * max(np.linalg.norm(A, 2), 1e-300):
            continue
        c = _observable_row(truth.n, rng, A)
        ref = estimate_bd_time(A, c, data)
        _, _, cost = eigen_regression(A, data)
        worst = max(worst, abs(cost - ref.cost) / (1.0 + ref.cost))
        done += 1
    return {"property": "eigen-regression", "pass": bool(worst < 1e-8),
            "trials": trials, "seed": seed,
            "worst": {"relative_cost_gap": worst}}


def check_simo_similarity(trials: int, seed: int) -> dict:
    """The (C, D) solution is basis-independent for fixed single-input (A, B)."""
    rng = np.random.default_rng(seed)
    ok_time = 0
    ok_freq = 0
    for _ in range(trials):
        truth, data = _simo_instance(rng)
        fd = _fd_from(truth, rng)
        n = truth.n
        Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
        T = Q * rng.uniform(0.5, 2.0, size=n)
        base = similarity_transform(truth, T)
        sol1 = estimate_cd_time(truth.A, truth.B, data).estimate
        sol2 = estimate_cd_time(base.A, base.B, data).estimate
        if io_equivalent(sol1, sol2, L=2 * n, tol=1e-7):
            ok_time += 1
        sol1 = estimate_cd_freq(truth.A, truth.B, fd).estimate
        sol2 = estimate_cd_freq(base.A, base.B, fd).estimate
        if io_equivalent(sol1, sol2, L=2 * n, tol=1e-7):
            ok_freq += 1
    ok = ok_time == trials and ok_freq == trials
    return {"property": "simo-similarity", "pass": bool(ok), "trials": trials,
            "seed": seed,
            "worst": {"time_equivalent": ok_time, "freq_equivalent": ok_freq}}


def run_property_check(name: str, trials: int, seed: int) -> dict:
    if name == "lemma1":
        return check_lemma1(trials, seed)
    if name == "thm-fixed-a":
        return check_fixed_a_optimality(trials, seed)
    if name == "simo-two-step":
        return check_simo_two_step(trials, seed)
    if name == "commutant":
        return check_commutant(trials, seed)
    if name == "eigen-regression":
        return check_eigen_regression(trials, seed)
    if name == "simo-similarity":
        return check_simo_similarity(trials, seed)
    raise ValueError(f"unknown property {name!r}; choose from {PROPERTY_NAMES}")
