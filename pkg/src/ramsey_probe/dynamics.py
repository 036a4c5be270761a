"""Exact simulation of the probe + ancilla + register system.

State vectors have length 4N and are indexed as ``probe << (L+1) | ancilla << L
| code``, so ``psi.reshape(2, 2, N)[p, a, k]`` is the amplitude of
|p>|a>|k>. The probe's excited state |1> carries +omega/2.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError, NumericError
from .graphs import num_pairs
from .krylov import expm_multiply
from .spectrum import DiagonalTable

TROTTER_STEP_BOUND = 0.05

# Ry(-pi/4): S X S^dagger equals the normalised Hadamard.
_S = np.array([[math.cos(math.pi / 8), math.sin(math.pi / 8)],
               [-math.sin(math.pi / 8), math.cos(math.pi / 8)]])


@dataclass(frozen=True)
class ModelParams:
    n: int
    x: int
    y: int
    omega: float = 1.0
    epsilon0: float = -1.0
    c: float = 0.02

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError(f"n must be >= 2, got {self.n}")
        if self.c < 0:
            raise ArgumentError(f"coupling c must be non-negative, got {self.c}")
        if self.c > abs(self.omega) / 10:
            warnings.warn(f"weak-coupling regime violated: c={self.c} > omega/10",
                          stacklevel=3)

    @property
    def L(self) -> int:
        return num_pairs(self.n)

    @property
    def N(self) -> int:
        return 1 << self.L

    def replace(self, **kw) -> "ModelParams":
        return ModelParams(**{**asdict(self), **kw})

    def to_json(self) -> dict:
        return {**asdict(self), "L": self.L, "N": self.N}


@dataclass(frozen=True, eq=False)
class DynamicsTrace:
    """Sampled probe survival probability P(t)."""

    times: np.ndarray
    probs: np.ndarray
    N: int
    backend: str
    params: ModelParams | None = None
    spectrum_digest: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.shape != self.probs.shape:
            raise ArgumentError("times and probs differ in length")

    @property
    def min_prob(self) -> float:
        return float(self.probs.min())

    def digest(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.probs, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def to_csv(self) -> str:
        rows = ["t,p"] + [f"{t!r},{p!r}" for t, p in zip(self.times.tolist(), self.probs.tolist())]
        return "\n".join(rows) + "\n"

    def to_json(self) -> dict:
        return {"times": self.times.tolist(), "probs": self.probs.tolist(), "N": self.N,
                "backend": self.backend,
                "params": self.params.to_json() if self.params else None,
                "spectrum_digest": self.spectrum_digest, **self.meta}


def fwht(a: np.ndarray) -> np.ndarray:
    """Normalised Walsh-Hadamard transform along the last axis, in place.

    The last axis must have power-of-two length. Returns ``a``.
    """
    N = a.shape[-1]
    if not a.flags.c_contiguous:
        raise ArgumentError("fwht needs a C-contiguous array")
    if N & (N - 1):
        raise ArgumentError(f"length {N} is not a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < N:
        v = a.reshape(*lead, N // (2 * h), 2, h)
        lo = v[..., 0, :].copy()
        v[..., 0, :] += v[..., 1, :]
        v[..., 1, :] *= -1
        v[..., 1, :] += lo
        h *= 2
    a *= 1.0 / math.sqrt(N)
    return a


def init_state(params: ModelParams) -> np.ndarray:
    """|1>|0>|0...0>: excited probe, register in the reference state."""
    psi = np.zeros(4 * params.N, dtype=complex)
    psi[2 * params.N] = 1.0
    return psi


def survival_probability(psi: np.ndarray) -> float:
    """Probability that the probe is found in |1>."""
    half = psi.size // 2
    return float(np.vdot(psi[half:], psi[half:]).real)


def _check(psi, params, table):
    if table.n != params.n or (table.x, table.y) != (params.x, params.y):
        raise ArgumentError(f"table (n={table.n},x={table.x},y={table.y}) does not match params")
    if psi.shape != (4 * params.N,):
        raise ArgumentError(f"state has shape {psi.shape}, expected ({4 * params.N},)")


def diagonal(params: ModelParams, table: DiagonalTable) -> np.ndarray:
    """Diagonal part -omega/2 sigma_z + I (x) H_Q as a (2, 2, N) array."""
    N = params.N
    d = np.zeros((2, 2, N))
    d[0] -= params.omega / 2
    d[1] += params.omega / 2
    d[:, 0, 0] += params.epsilon0
    d[:, 1, :] += table.values
    return d


def apply_H(psi: np.ndarray, params: ModelParams, table: DiagonalTable) -> np.ndarray:
    """H psi without forming H; the coupling costs one O(N log N) butterfly."""
    _check(psi, params, table)
    s = psi.reshape(2, 2, params.N)
    out = diagonal(params, table) * s
    if params.c:
        w = fwht(s[::-1, ::-1].copy())
        out += params.c * w
    return out.reshape(-1)


def norm_estimate(params: ModelParams, table: DiagonalTable) -> float:
    return abs(params.omega) / 2 + abs(params.epsilon0) + float(table.values.max()) + params.c


def trotter_steps(tau: float, params: ModelParams, table: DiagonalTable,
                  bound: float = TROTTER_STEP_BOUND) -> int:
    """Smallest M with tau * ||H||_est / M <= bound."""
    return max(1, math.ceil(tau * norm_estimate(params, table) / bound))


def _each_register_qubit(s: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Apply the 2x2 gate U to every register qubit of a (2, 2, N) array, in place."""
    N = s.shape[-1]
    h = 1
    while h < N:
        v = s.reshape(2, 2, N // (2 * h), 2, h)
        a = v[..., 0, :].copy()
        b = v[..., 1, :].copy()
        v[..., 0, :] = U[0, 0] * a + U[0, 1] * b
        v[..., 1, :] = U[1, 0] * a + U[1, 1] * b
        h *= 2
    return s


def coupling_slice(psi: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i theta sigma_x (x) A) psi, exactly.

    Rotates every register qubit so the Hadamard becomes sigma_x, applies the
    all-qubit parity rotation exp(-i theta X...X), and rotates back.
    """
    if theta == 0:
        return psi.copy()
    N = psi.size // 4
    s = _each_register_qubit(psi.reshape(2, 2, N).copy(), _S.T)
    flat = s.reshape(-1)
    # X on every qubit maps index j to j ^ (4N - 1), i.e. reverses the array
    flat = math.cos(theta) * flat - 1j * math.sin(theta) * flat[::-1]
    return _each_register_qubit(flat.reshape(2, 2, N), _S).reshape(-1)


def _trotter(psi, t, params, table, order, bound):
    M = trotter_steps(t, params, table, bound)
    dt = t / M
    d = diagonal(params, table).reshape(-1)
    if order == 1:
        phase = np.exp(-1j * d * dt)
        for _ in range(M):
            psi = phase * coupling_slice(psi, params.c * dt)
        return psi
    if order == 2:
        half = np.exp(-0.5j * d * dt)
        for _ in range(M):
            psi = half * coupling_slice(half * psi, params.c * dt)
        return psi
    if order == 4:
        # Suzuki fourth-order composition of Strang steps
        p = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
        sub = [p, p, 1 - 4 * p, p, p]
        halves = [np.exp(-0.5j * d * dt * q) for q in sub]
        for _ in range(M):
            for q, half in zip(sub, halves):
                psi = half * coupling_slice(half * psi, params.c * dt * q)
        return psi
    raise ArgumentError(f"unsupported Trotter order {order}")


def evolve(psi: np.ndarray, t: float, params: ModelParams, table: DiagonalTable, *,
           method: str = "krylov", tol: float = 1e-8, trotter_order: int = 2,
           trotter_bound: float = TROTTER_STEP_BOUND) -> np.ndarray:
    """exp(-iHt) psi.

    ``method='trotter'`` uses the product of the diagonal and coupling
    exponentials with M from :func:`trotter_steps`; ``trotter_order`` selects
    the plain split (1), its symmetric form (2) or the Suzuki composition (4).
    """
    _check(psi, params, table)
    if t < 0:
        raise ArgumentError(f"evolution time must be non-negative, got {t}")
    if t == 0:
        return psi.copy()
    if method == "krylov":
        return expm_multiply(lambda v: apply_H(v, params, table), psi, t, tol=tol)
    if method == "trotter":
        return _trotter(np.asarray(psi, dtype=complex), t, params, table,
                        trotter_order, trotter_bound)
    raise ArgumentError(f"unknown method {method!r}")


def energy(psi: np.ndarray, params: ModelParams, table: DiagonalTable) -> float:
    return float(np.vdot(psi, apply_H(psi, params, table)).real)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) < 0):
        raise ArgumentError("time grid must be ascending and start at 0")
    return t


def sample_shots(probs: np.ndarray, shots: int, seed: int | None) -> np.ndarray:
    """Replace each probability by a binomial sample mean over ``shots`` runs."""
    rng = np.random.default_rng(seed)
    return rng.binomial(shots, np.clip(probs, 0.0, 1.0)) / shots


def trace_dynamics(params: ModelParams, table: DiagonalTable, t_grid, *,
                   method: str = "krylov", tol: float = 1e-8, shots: int | None = None,
                   seed: int | None = None, trotter_order: int = 2) -> DynamicsTrace:
    """Probe survival probability on ``t_grid`` from one incremental propagation."""
    t = _check_grid(t_grid)
    psi = init_state(params)
    probs = np.empty(t.size)
    probs[0] = survival_probability(psi)
    for i in range(1, t.size):
        try:
            psi = evolve(psi, t[i] - t[i - 1], params, table, method=method, tol=tol,
                         trotter_order=trotter_order)
        except NumericError as exc:
            raise NumericError(f"propagation failed between t={t[i - 1]:g} and t={t[i]:g}: {exc}",
                               residual=exc.residual) from exc
        probs[i] = survival_probability(psi)
    meta = {}
    if shots is not None:
        probs = sample_shots(probs, shots, seed)
        meta = {"shots": shots, "seed": seed}
    return DynamicsTrace(t, probs, params.N, f"full-{method}", params, table.digest(), meta)
