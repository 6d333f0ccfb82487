import numpy as np

import ssrefine as ss


def finite_difference_jacobian(model, data, free, h=1e-6):
    """Central-difference residual Jacobian, independent of the analytic path."""
    from ssrefine.refine import _pack, _unpack, residual_and_jacobian
    free = tuple(m for m in "ABCD" if m in free)
    theta = _pack(model, free)
    r0, _ = residual_and_jacobian(model, data, free)
    J = np.empty((r0.size, theta.size))
    for p in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[p] += h
        dn[p] -= h
        ru, _ = residual_and_jacobian(_unpack(model, up, free), data, free)
        rd, _ = residual_and_jacobian(_unpack(model, dn, free), data, free)
        J[:, p] = (ru - rd) / (2 * h)
    return J


def conditioned_transform(n, rng, spread=2.0):
    """Random invertible matrix with condition number well below 1e4."""
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return Q * rng.uniform(1.0 / spread, spread, size=n)


def observable_row(A, rng):
    n = A.shape[0]
    for _ in range(50):
        c = rng.standard_normal((1, n))
        if ss.observable(A, c, 1e-6):
            return c
    raise RuntimeError("no observable row found")


def noisy_record(truth, rng, n_samples=300, noise=0.5):
    u = rng.standard_normal((n_samples, truth.nu))
    y = ss.simulate(truth, u) + noise * rng.standard_normal((n_samples, truth.ny))
    return ss.TimeSeriesData(u, y, ts=truth.ts)


def noisy_frf(truth, rng, n_freqs=60, noise=0.05):
    if truth.is_discrete:
        omega = np.linspace(0.0, np.pi / truth.ts, n_freqs)[:-1] + 1e-3
    else:
        omega = np.linspace(0.0, 6.0, n_freqs)
    G = ss.frequency_response(truth, omega)
    eps = (rng.standard_normal(G.shape) + 1j * rng.standard_normal(G.shape)) / np.sqrt(2)
    return ss.FrequencyData(omega, G + noise * eps, ts=truth.ts)
