"""Matrix-free Lanczos propagator for exp(-iHt) v with Hermitian H."""

from __future__ import annotations

import numpy as np

from .errors import NumericError


def _lanczos(matvec, v, m):
    """Return (V, alpha, beta) with full reorthogonalisation.

    ``beta[j]`` couples basis vectors j and j+1; ``beta[-1]`` is the residual
    coefficient used for the error estimate (0 on happy breakdown).
    """
    n = v.size
    V = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v
    k = m
    for j in range(m):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        if b < 1e-13:
            k = j + 1
            beta[j] = 0.0
            break
        if j + 1 < m:
            V[j + 1] = w / b
    return V[:k], alpha[:k], beta[:k]


def expm_multiply(matvec, v, t, *, tol=1e-8, m=30, max_steps=100_000):
    """exp(-i t H) v to L2 accuracy ``tol`` (relative to ||v||).

    Substeps are sized so that the standard a-posteriori estimate
    beta_m |[exp(-i tau T) e_1]_m| stays within the share of the tolerance
    proportional to the substep length.
    """
    v = np.asarray(v, dtype=complex)
    if t == 0:
        return v.copy()
    norm = np.linalg.norm(v)
    if norm == 0:
        return v.copy()
    w = v / norm
    done = 0.0
    steps = 0
    while done < t:
        remaining = t - done
        V, a, b = _lanczos(matvec, w, min(m, w.size))
        k = a.size
        T = np.diag(a) + np.diag(b[: k - 1], 1) + np.diag(b[: k - 1], -1)
        lam, U = np.linalg.eigh(T)
        c0 = U[0].conj()

        def coeffs(tau):
            return U @ (np.exp(-1j * tau * lam) * c0)

        def err(tau):
            return b[-1] * abs(coeffs(tau)[-1])

        budget = tol * 0.5
        tau = remaining
        if b[-1] > 0 and err(tau) > budget * tau / t:
            lo, hi = 0.0, remaining
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if err(mid) <= budget * mid / t:
                    lo = mid
                else:
                    hi = mid
            tau = lo
            if tau <= remaining * 1e-12:
                raise NumericError("Krylov step collapsed", residual=err(hi))
        w = coeffs(tau) @ V
        w /= np.linalg.norm(w)
        if tau == remaining:
            break
        done += tau
        steps += 1
        if steps > max_steps:
            raise NumericError(f"Krylov exceeded {max_steps} substeps at t={done:g}",
                               residual=err(tau))
    return norm * w
