"""Reduced models of the probe dynamics.

The arrow model works in the basis {reference state, one normalised
superposition per energy level}. Its Hamiltonian is diagonal apart from the
first row and column, which hold c * sqrt(m_i / N).
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import DynamicsTrace, ModelParams, _check_grid
from .errors import ArgumentError, NumericError
from .spectrum import Spectrum


def arrow_matrix(spectrum: Spectrum, omega: float, epsilon0: float, c: float) -> np.ndarray:
    E = np.array([e for e, _ in spectrum.levels], dtype=float)
    m = np.array([m for _, m in spectrum.levels], dtype=float)
    H = np.diag(np.concatenate([[omega / 2 + epsilon0], E - omega / 2]))
    H[0, 1:] = H[1:, 0] = c * np.sqrt(m / spectrum.N)
    return H


def _propagate(H: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Amplitudes exp(-iHt) e_0 for every t, shape (len(t), dim)."""
    try:
        lam, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolve failed: {exc}") from exc
    return (np.exp(-1j * np.outer(t, lam)) * V[0]) @ V.T


def _survival(H: np.ndarray, t: np.ndarray) -> np.ndarray:
    amp0 = _propagate(H, t)[:, 0]
    return np.clip(np.abs(amp0) ** 2, 0.0, 1.0)


def multilevel_trace(spectrum: Spectrum, params: ModelParams | None, t_grid, *,
                     omega: float = 1.0, epsilon0: float = -1.0, c: float = 0.02) -> DynamicsTrace:
    """Exact P(t) of the (r+1)-level arrow model.

    Physical constants come from ``params`` when given, otherwise from the
    keyword arguments (for synthetic spectra with no graph behind them).
    """
    if params is not None:
        if params.N != spectrum.N:
            raise ArgumentError(f"params N={params.N} but spectrum N={spectrum.N}")
        omega, epsilon0, c = params.omega, params.epsilon0, params.c
    t = _check_grid(t_grid)
    H = arrow_matrix(spectrum, omega, epsilon0, c)
    digest = spectrum.table.digest() if spectrum.table is not None else None
    meta = {} if params is not None else {"omega": omega, "epsilon0": epsilon0, "c": c}
    return DynamicsTrace(t, _survival(H, t), spectrum.N, "arrow", params, digest, meta)


def arrow_amplitudes(spectrum: Spectrum, params: ModelParams, t: float) -> np.ndarray:
    """Arrow-model state at time t: [reference, level 1, ..., level r]."""
    H = arrow_matrix(spectrum, params.omega, params.epsilon0, params.c)
    return _propagate(H, np.array([t]))[0]


def three_level_matrix(N: int, m1: int, Eprime: float, c: float) -> np.ndarray:
    g1 = c * math.sqrt(m1 / N)
    g2 = c * math.sqrt((N - m1) / N)
    return np.array([[-0.5, g1, g2],
                     [g1, -0.5, 0.0],
                     [g2, 0.0, Eprime - 0.5]])


def three_level_trace(N: int, m1: int, Eprime: float, c: float, t_grid) -> DynamicsTrace:
    """Resonant ground level plus all excited graphs lumped at energy E'."""
    if not 1 <= m1 < N:
        raise ArgumentError(f"need 1 <= m1 < N, got m1={m1}, N={N}")
    if Eprime < 1:
        raise ArgumentError(f"E' must be >= 1, got {Eprime}")
    t = _check_grid(t_grid)
    H = three_level_matrix(N, m1, Eprime, c)
    meta = {"model": "three-level", "m1": m1, "Eprime": Eprime, "c": c}
    return DynamicsTrace(t, _survival(H, t), N, "three-level", None, None, meta)


def nonres_probability(Edoubleprime, c, t, *, omega: float = 1.0, epsilon0: float = -1.0):
    """Closed-form survival probability with every graph lumped at E'' >= 1.

    Exact Rabi formula for the two-level model: the detuning a is the gap
    between (E'' - omega/2) and (omega/2 + epsilon0), i.e. a = E'' at the
    default omega = 1, epsilon0 = -1.
    """
    a = np.asarray(Edoubleprime, dtype=float) - omega - epsilon0
    rabi2 = a**2 + 4 * c**2
    return (a**2 + 2 * c**2 * (1 + np.cos(np.sqrt(rabi2) * np.asarray(t, dtype=float)))) / rabi2


def nonres_minimum(Edoubleprime, c, *, omega: float = 1.0, epsilon0: float = -1.0):
    a = Edoubleprime - omega - epsilon0
    return a**2 / (a**2 + 4 * c**2)


def two_level_matrix(Edoubleprime: float, c: float) -> np.ndarray:
    return np.array([[-0.5, c], [c, Edoubleprime - 0.5]])


def res_probability_perturbative(N: int, m1: int, c: float, t):
    if m1 < 1:
        raise ArgumentError(f"m1 must be >= 1, got {m1}")
    return np.cos(c * math.sqrt(m1 / N) * np.asarray(t, dtype=float)) ** 2


def readout_time(N: int, m1: int, c: float) -> float:
    """Time at which the resonant transfer to the ground level peaks."""
    if m1 < 1:
        raise ArgumentError(f"m1 must be >= 1, got {m1}")
    return (math.pi / 2) / (c * math.sqrt(m1 / N))


def rabi_period(N: int, m1: int, c: float) -> float:
    return 2 * readout_time(N, m1, c)
