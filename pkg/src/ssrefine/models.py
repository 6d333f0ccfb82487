"""State-space model types, simulation, costs, and random system generation.

Conventions used throughout the package:

* discrete-time recursion ``x(t+1) = A x(t) + B u(t)``,
  ``y(t) = C x(t) + D u(t)`` with zero initial state unless stated
  otherwise, so the pulse response sequence is ``D, CB, CAB, CA^2B, ...``
* a model with ``ts > 0`` is discrete with sampling time ``ts`` seconds;
  ``ts == 0.0`` marks a continuous-time model
* frequency evaluation points are ``exp(1j * ts * w)`` for discrete models
  and ``1j * w`` for continuous ones, with ``w`` in rad/s
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "StateSpaceModel",
    "TimeSeriesData",
    "FrequencyData",
    "MarkovSequence",
    "simulate",
    "state_trajectory",
    "prediction_cost",
    "frequency_response",
    "resolvent_bank",
    "frequency_cost",
    "markov_parameters",
    "io_equivalent",
    "similarity_transform",
    "observable",
    "controllable",
    "observability_matrix",
    "error_norm",
    "is_stable",
    "random_stable_discrete",
    "random_stable_continuous",
]


def _matrix(x, name: str) -> np.ndarray:
    m = np.array(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 and m.ndim != 1:
        raise ValueError(f"{name} must be at most 2-dimensional, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class StateSpaceModel:
    """Immutable linear state-space model (A, B, C, D) with a domain tag.

    ``ts > 0`` is the sampling time of a discrete-time model, ``ts == 0.0``
    marks a continuous-time model.  One-dimensional inputs are coerced to
    the natural matrix shapes (B to a column per input, C to a row per
    output).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    ts: float = 1.0

    def __post_init__(self):
        A = _matrix(self.A, "A")
        if A.ndim == 1:
            A = A.reshape(1, -1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {A.shape}")
        B = _matrix(self.B, "B")
        if B.ndim == 1:
            B = B.reshape(n, -1)
        C = _matrix(self.C, "C")
        if C.ndim == 1:
            C = C.reshape(-1, n)
        ny, nu = C.shape[0], B.shape[1]
        D = np.array(self.D, dtype=float)
        if D.ndim == 0:
            D = np.full((ny, nu), float(D))
        elif D.ndim == 1:
            D = D.reshape(ny, nu)
        if not np.all(np.isfinite(D)):
            raise ValueError("D contains non-finite entries")
        if B.shape != (n, nu):
            raise ValueError(f"B must be {n}x{nu}, got {B.shape}")
        if C.shape != (ny, n):
            raise ValueError(f"C must be {ny}x{n}, got {C.shape}")
        if D.shape != (ny, nu):
            raise ValueError(f"D must be {ny}x{nu}, got {D.shape}")
        ts = float(self.ts)
        if ts < 0:
            raise ValueError(f"ts must be >= 0, got {ts}")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D), ("ts", ts)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.ts > 0.0


@dataclass(frozen=True)
class TimeSeriesData:
    """Sampled input/output record with uniform sampling time ``ts``."""

    u: np.ndarray
    y: np.ndarray
    ts: float = 1.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        y = np.array(self.y, dtype=float)
        if u.ndim == 1:
            u = u.reshape(-1, 1)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if u.ndim != 2 or y.ndim != 2:
            raise ValueError("u and y must be 2-dimensional (samples x channels)")
        if u.shape[0] != y.shape[0]:
            raise ValueError(
                f"u and y must have equal sample counts, got {u.shape[0]} and {y.shape[0]}"
            )
        if u.shape[0] < 1:
            raise ValueError("at least one sample is required")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise ValueError("u or y contains non-finite entries")
        ts = float(self.ts)
        if ts <= 0:
            raise ValueError(f"ts must be > 0, got {ts}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ts", ts)

    @property
    def n_samples(self) -> int:
        return self.u.shape[0]

    @property
    def nu(self) -> int:
        return self.u.shape[1]

    @property
    def ny(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class FrequencyData:
    """Frequency grid with complex response samples, one ny x nu matrix per point.

    ``ts`` plays the role of a domain hint: positive for data meant for
    discrete models (points on the unit circle), zero for continuous
    models (points on the imaginary axis).
    """

    omega: np.ndarray
    G: np.ndarray
    ts: float = 0.0

    def __post_init__(self):
        w = np.array(self.omega, dtype=float)
        if w.ndim != 1:
            raise ValueError("omega must be 1-dimensional")
        if w.size < 1:
            raise ValueError("at least one frequency is required")
        if np.any(w < 0):
            raise ValueError("frequencies must be non-negative")
        if np.any(np.diff(w) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        G = np.array(self.G, dtype=complex)
        if G.ndim == 1:
            G = G.reshape(-1, 1, 1)
        if G.ndim != 3:
            raise ValueError("G must have shape (n_freqs, ny, nu)")
        if G.shape[0] != w.size:
            raise ValueError(
                f"G has {G.shape[0]} matrices but omega has {w.size} points"
            )
        if not np.all(np.isfinite(G)):
            raise ValueError("G contains non-finite entries")
        ts = float(self.ts)
        if ts < 0:
            raise ValueError(f"ts must be >= 0, got {ts}")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "ts", ts)

    @property
    def n_freqs(self) -> int:
        return self.omega.size

    @property
    def ny(self) -> int:
        return self.G.shape[1]

    @property
    def nu(self) -> int:
        return self.G.shape[2]


@dataclass(frozen=True)
class MarkovSequence:
    """Feedthrough term plus the impulse-response matrices C A^i B."""

    d0: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        d0 = np.atleast_2d(np.array(self.d0, dtype=float))
        h = np.array(self.h, dtype=float)
        if h.ndim != 3 or h.shape[0] < 1:
            raise ValueError("h must have shape (L, ny, nu) with L >= 1")
        if h.shape[1:] != d0.shape:
            raise ValueError("every h entry must match the shape of d0")
        if not (np.all(np.isfinite(d0)) and np.all(np.isfinite(h))):
            raise ValueError("Markov sequence contains non-finite entries")
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "h", h)

    @property
    def length(self) -> int:
        return self.h.shape[0]


def _check_model_data(model: StateSpaceModel, data: TimeSeriesData) -> None:
    if model.nu != data.nu or model.ny != data.ny:
        raise ValueError(
            f"model has nu={model.nu}, ny={model.ny} but data has "
            f"nu={data.nu}, ny={data.ny}"
        )


def state_trajectory(A: np.ndarray, B: np.ndarray, u: np.ndarray,
                     x0: np.ndarray | None = None) -> np.ndarray:
    """Run the state recursion and return the N x n matrix of states x(t)."""
    N = u.shape[0]
    n = A.shape[0]
    X = np.empty((N, n))
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel().copy()
    if x.size != n:
        raise ValueError(f"x0 must have {n} entries, got {x.size}")
    for t in range(N):
        X[t] = x
        x = A @ x + B @ u[t]
    return X


def simulate(model: StateSpaceModel, u: np.ndarray,
             x0: np.ndarray | None = None) -> np.ndarray:
    """Simulate a discrete-time model, returning the N x ny output matrix.

    The initial state defaults to zero, which makes the output the causal
    convolution of the input with the pulse-response sequence.
    """
    if not model.is_discrete:
        raise ValueError("time-domain simulation requires a discrete-time model")
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    if u.shape[1] != model.nu:
        raise ValueError(f"u has {u.shape[1]} channels, model expects {model.nu}")
    X = state_trajectory(model.A, model.B, u, x0)
    return X @ model.C.T + u @ model.D.T


def prediction_cost(model: StateSpaceModel, data: TimeSeriesData) -> float:
    """Sum of squared output-prediction errors with zero initial state."""
    _check_model_data(model, data)
    r = data.y - simulate(model, data.u)
    return float(np.sum(r * r))


def resolvent_bank(A: np.ndarray, omega: np.ndarray, ts: float) -> np.ndarray:
    """Inverses (p_k I - A)^-1 for every evaluation point of the grid."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    p = np.exp(1j * ts * w) if ts > 0 else 1j * w
    n = A.shape[0]
    M = p[:, None, None] * np.eye(n) - A
    try:
        return np.linalg.inv(M)
    except np.linalg.LinAlgError:
        bad = []
        for k in range(M.shape[0]):
            try:
                np.linalg.inv(M[k])
            except np.linalg.LinAlgError:
                bad.append(k)
        raise ValueError(
            f"resolvent singular at frequency indices {bad}: evaluation "
            "points coincide with eigenvalues of A"
        ) from None


def frequency_response(model: StateSpaceModel, omega: np.ndarray) -> np.ndarray:
    """Evaluate C (p I - A)^-1 B + D on the grid, shape (K, ny, nu)."""
    R = resolvent_bank(model.A, omega, model.ts)
    return model.C @ R @ model.B + model.D


def frequency_cost(model: StateSpaceModel, fd: FrequencyData) -> float:
    """Sum over the grid of squared Frobenius errors against the samples."""
    if model.nu != fd.nu or model.ny != fd.ny:
        raise ValueError(
            f"model has nu={model.nu}, ny={model.ny} but data has "
            f"nu={fd.nu}, ny={fd.ny}"
        )
    if model.ts != fd.ts:
        raise ValueError(
            f"model domain (ts={model.ts}) does not match data domain (ts={fd.ts})"
        )
    diff = frequency_response(model, fd.omega) - fd.G
    return float(np.sum(np.abs(diff) ** 2))


def markov_parameters(model: StateSpaceModel, L: int) -> MarkovSequence:
    """First L impulse-response matrices C A^i B, plus the feedthrough D."""
    if not model.is_discrete:
        raise ValueError("Markov parameters are defined for discrete-time models")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    h = np.empty((L, model.ny, model.nu))
    M = model.B.copy()
    for i in range(L):
        h[i] = model.C @ M
        M = model.A @ M
    return MarkovSequence(d0=model.D.copy(), h=h)


def io_equivalent(m1: StateSpaceModel, m2: StateSpaceModel,
                  L: int | None = None, tol: float = 1e-9) -> bool:
    """True when feedthroughs and the first L impulse-response matrices agree.

    L defaults to n1 + n2, enough to decide equality of minimal realizations.
    """
    if m1.nu != m2.nu or m1.ny != m2.ny:
        raise ValueError("models must share input and output dimensions")
    if m1.is_discrete != m2.is_discrete or (m1.is_discrete and m1.ts != m2.ts):
        raise ValueError("models must share the same domain")
    if L is None:
        L = m1.n + m2.n
    if np.linalg.norm(m1.D - m2.D) > tol:
        return False
    h1 = _markov_stack(m1, L)
    h2 = _markov_stack(m2, L)
    return bool(np.all(np.linalg.norm(h1 - h2, axis=(1, 2)) <= tol))


def _markov_stack(model: StateSpaceModel, L: int) -> np.ndarray:
    h = np.empty((L, model.ny, model.nu))
    M = model.B.copy()
    for i in range(L):
        h[i] = model.C @ M
        M = model.A @ M
    return h


def similarity_transform(model: StateSpaceModel, T: np.ndarray) -> StateSpaceModel:
    """Change of state basis (T^-1 A T, T^-1 B, C T, D)."""
    T = np.asarray(T, dtype=float)
    if T.shape != (model.n, model.n):
        raise ValueError(f"T must be {model.n}x{model.n}, got {T.shape}")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError(f"similarity transform numerically singular (cond {cond:.3e})")
    A2 = np.linalg.solve(T, model.A @ T)
    B2 = np.linalg.solve(T, model.B)
    return StateSpaceModel(A2, B2, model.C @ T, model.D.copy(), ts=model.ts)


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Stack of C, CA, ..., CA^(n-1)."""
    n = A.shape[0]
    rows = np.empty((n * C.shape[0], n))
    M = np.atleast_2d(np.asarray(C, dtype=float))
    p = M.shape[0]
    for i in range(n):
        rows[i * p:(i + 1) * p] = M
        M = M @ A
    return rows


def observable(A: np.ndarray, C: np.ndarray, tol: float = 1e-8) -> bool:
    """Numerical-rank test of the observability matrix at ratio threshold tol."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != A.shape[0]:
        raise ValueError(f"C has {C.shape[1]} columns, A is {A.shape[0]}x{A.shape[0]}")
    sv = np.linalg.svd(observability_matrix(A, C), compute_uv=False)
    return bool(sv[0] > 0 and sv[-1] > tol * sv[0])


def controllable(A: np.ndarray, B: np.ndarray, tol: float = 1e-8) -> bool:
    """Dual of the observability test applied to (A^T, B^T)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    return observable(A.T, B.T, tol)


def error_norm(reference: TimeSeriesData, model: StateSpaceModel) -> float:
    """Spectral norm of E^T E / N with E the output error against the reference."""
    _check_model_data(model, reference)
    E = reference.y - simulate(model, reference.u)
    return float(np.linalg.norm(E.T @ E / reference.n_samples, 2))


def is_stable(model: StateSpaceModel) -> bool:
    eig = np.linalg.eigvals(model.A)
    if model.is_discrete:
        return bool(np.max(np.abs(eig)) < 1.0)
    return bool(np.max(eig.real) < 0.0)


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    k = 0
    for b in blocks:
        m = b.shape[0]
        out[k:k + m, k:k + m] = b
        k += m
    return out


def _random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    M = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(M)
    return Q * np.sign(np.diag(R))


def _random_A_discrete(n: int, rng: np.random.Generator, radius: float = 0.95) -> np.ndarray:
    # complex-conjugate eigenvalue pairs uniform in the disk, real leftover for odd n
    blocks = []
    k = n
    while k >= 2:
        r = radius * np.sqrt(rng.uniform())
        th = rng.uniform(0.0, np.pi)
        a, b = r * np.cos(th), r * np.sin(th)
        blocks.append(np.array([[a, b], [-b, a]]))
        k -= 2
    if k == 1:
        blocks.append(np.array([[radius * (2.0 * rng.uniform() - 1.0)]]))
    Q = _random_orthogonal(n, rng)
    return Q.T @ _block_diag(blocks) @ Q


def _random_A_continuous(n: int, rng: np.random.Generator) -> np.ndarray:
    blocks = []
    k = n
    while k >= 2:
        a = rng.uniform(-2.0, -0.05)
        b = rng.uniform(0.2, 3.0)
        blocks.append(np.array([[a, b], [-b, a]]))
        k -= 2
    if k == 1:
        blocks.append(np.array([[rng.uniform(-2.0, -0.05)]]))
    Q = _random_orthogonal(n, rng)
    return Q.T @ _block_diag(blocks) @ Q


def _random_model(n, nu, ny, rng, make_A, ts, feedthrough, max_tries):
    for _ in range(max_tries):
        A = make_A(n, rng)
        B = rng.standard_normal((n, nu))
        C = rng.standard_normal((ny, n))
        D = rng.standard_normal((ny, nu)) if feedthrough else np.zeros((ny, nu))
        if observable(A, C, 1e-6) and controllable(A, B, 1e-6):
            return StateSpaceModel(A, B, C, D, ts=ts)
    raise RuntimeError(
        f"failed to draw an observable and controllable system in {max_tries} tries"
    )


def random_stable_discrete(n: int, nu: int, ny: int,
                           seed: int | np.random.Generator,
                           ts: float = 1.0, feedthrough: bool = False,
                           max_tries: int = 50) -> StateSpaceModel:
    """Draw a stable discrete-time model, deterministic in the seed.

    Eigenvalues are sampled uniformly in the disk of radius 0.95 in
    conjugate pairs, the state basis is a random orthogonal matrix, and
    B, C entries are standard normal.  Draws are repeated (bounded) until
    the realization is observable and controllable.
    """
    if min(n, nu, ny) < 1:
        raise ValueError("n, nu, ny must all be >= 1")
    rng = np.random.default_rng(seed)
    return _random_model(n, nu, ny, rng, _random_A_discrete, ts, feedthrough, max_tries)


def random_stable_continuous(n: int, nu: int, ny: int,
                             seed: int | np.random.Generator,
                             feedthrough: bool = False,
                             max_tries: int = 50) -> StateSpaceModel:
    """Draw a stable continuous-time model, deterministic in the seed.

    Pole real parts are uniform in [-2, -0.05] with imaginary parts up to
    3 rad/s in conjugate pairs; basis and B, C as in the discrete variant.
    """
    if min(n, nu, ny) < 1:
        raise ValueError("n, nu, ny must all be >= 1")
    rng = np.random.default_rng(seed)
    return _random_model(n, nu, ny, rng, _random_A_continuous, 0.0, feedthrough, max_tries)
