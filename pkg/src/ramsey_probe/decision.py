"""Resonance classification, the per-n decision and the Ramsey search.

A trace is resonant when the probe's survival probability drops below a
threshold within the horizon T_max = (pi/2) sqrt(N) / c, the first transfer
peak for the worst case of a single zero-energy graph.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from . import models
from .dynamics import (DynamicsTrace, ModelParams, evolve, init_state, sample_shots,
                       trace_dynamics)
from .errors import (ArgumentError, InconclusiveError, OracleMismatch, ResourceError,
                     SearchError)
from .graphs import bound_v, num_pairs
from .spectrum import (DiagonalTable, Spectrum, build_diagonal, extract_levels,
                       lower_bound_start, max_L)

log = logging.getLogger(__name__)

# Above this register width the 'auto' backend switches to the arrow model.
AUTO_FULL_MAX_L = 10
SLOPE_FRACTION = 0.1


class Verdict(str, enum.Enum):
    RESONANT = "Resonant"
    NON_RESONANT = "NonResonant"


@dataclass(frozen=True)
class DecisionConfig:
    threshold: float = 0.5
    points: int = 400
    backend: str = "auto"
    method: str = "krylov"
    tol: float = 1e-8
    omega: float = 1.0
    epsilon0: float = -1.0
    c: float = 0.02
    shots: int | None = None
    seed: int | None = None
    slope_window: float | None = None
    oracle: bool = False
    cap: int | None = None
    scan: str = "omega"

    def __post_init__(self):
        if self.c <= 0:
            raise ArgumentError(f"coupling c must be positive, got {self.c}")
        floor = models.nonres_minimum(1.0, self.c)
        if not 0 < self.threshold < floor:
            raise ArgumentError(
                f"threshold {self.threshold} must lie in (0, {floor:.6f}), the non-resonant floor")
        if self.backend not in ("auto", "full", "arrow"):
            raise ArgumentError(f"unknown backend {self.backend!r}")
        if self.scan not in ("omega", "epsilon0"):
            raise ArgumentError(f"unknown scan direction {self.scan!r}")
        if self.points < 3:
            raise ArgumentError("need at least 3 grid points")

    def horizon(self, N: int) -> float:
        return models.readout_time(N, 1, self.c)

    def t_grid(self, N: int) -> np.ndarray:
        return np.linspace(0.0, self.horizon(N), self.points)

    def backend_for(self, n: int) -> str:
        if self.backend == "auto":
            return "full" if num_pairs(n) <= AUTO_FULL_MAX_L else "arrow"
        return self.backend

    def to_json(self) -> dict:
        return asdict(self)


def time_below(trace: DynamicsTrace, threshold: float) -> float | None:
    """First time P(t) crosses below ``threshold``, linearly interpolated."""
    idx = np.flatnonzero(trace.probs < threshold)
    if idx.size == 0:
        return None
    i = int(idx[0])
    if i == 0:
        return float(trace.times[0])
    t0, t1 = trace.times[i - 1], trace.times[i]
    p0, p1 = trace.probs[i - 1], trace.probs[i]
    return float(t0 + (p0 - threshold) / (p0 - p1) * (t1 - t0))


def slope_is_resonant(trace: DynamicsTrace, window: float, c: float) -> bool:
    """Least-squares slope over [0, window] against the ideal resonant decay.

    For the worst case m1 = 1 the resonant curve starts as 1 - (c^2/N) t^2,
    whose fitted slope over [0, W] is -(c^2/N) W; a trace is flagged when its
    slope is steeper than a fixed fraction of that.
    """
    mask = trace.times <= window
    if mask.sum() < 3:
        return False
    t, p = trace.times[mask], trace.probs[mask]
    slope = np.polyfit(t, p, 1)[0]
    ideal = -(c * c / trace.N) * t[-1]
    return bool(slope < SLOPE_FRACTION * ideal)


def classify_trace(trace: DynamicsTrace, config: DecisionConfig) -> Verdict:
    if config.slope_window is not None and slope_is_resonant(trace, config.slope_window, config.c):
        return Verdict.RESONANT
    if trace.min_prob < config.threshold:
        return Verdict.RESONANT
    T = config.horizon(trace.N)
    if trace.times[-1] < T * (1 - 1e-9):
        raise InconclusiveError(
            f"trace ends at t={trace.times[-1]:g} before the horizon {T:g} with no dip")
    return Verdict.NON_RESONANT


@dataclass
class Decision:
    n: int
    x: int
    y: int
    verdict: Verdict
    trace: DynamicsTrace = field(repr=False)
    spectrum: Spectrum = field(repr=False)
    backend: str
    time_to_decision: float | None

    @property
    def below(self) -> bool:
        return self.verdict is Verdict.RESONANT

    def record(self, oracle: bool = False) -> dict:
        rec = {"n": self.n, "verdict": self.verdict.value, "below": self.below,
               "backend": self.backend, "min_p": self.trace.min_prob,
               "time_to_decision": self.time_to_decision,
               "trace_digest": self.trace.digest(),
               "spectrum_digest": self.trace.spectrum_digest}
        if oracle:
            rec["E1_oracle"] = self.spectrum.E1
            rec["m1_oracle"] = self.spectrum.m1
        return rec


def _params(n, x, y, config, **kw) -> ModelParams:
    return ModelParams(n, x, y, omega=kw.get("omega", config.omega),
                       epsilon0=kw.get("epsilon0", config.epsilon0), c=config.c)


def _trace(params: ModelParams, table: DiagonalTable, spectrum: Spectrum,
           config: DecisionConfig, backend: str) -> DynamicsTrace:
    grid = config.t_grid(params.N)
    if backend == "full":
        return trace_dynamics(params, table, grid, method=config.method, tol=config.tol,
                              shots=config.shots, seed=config.seed)
    tr = models.multilevel_trace(spectrum, params, grid)
    if config.shots is not None:
        tr = DynamicsTrace(tr.times, sample_shots(tr.probs, config.shots, config.seed), tr.N,
                           tr.backend, tr.params, tr.spectrum_digest,
                           {"shots": config.shots, "seed": config.seed})
    return tr


def decide_n(n: int, x: int, y: int, config: DecisionConfig | None = None, *,
             table: DiagonalTable | None = None, **overrides) -> Decision:
    """Run the probe protocol for one n and classify the resulting trace."""
    config = config or DecisionConfig()
    if table is None:
        table = build_diagonal(n, x, y, cap=config.cap)
    spectrum = extract_levels(table)
    params = _params(n, x, y, config, **overrides)
    backend = config.backend_for(n)
    trace = _trace(params, table, spectrum, config, backend)
    verdict = classify_trace(trace, config)
    decision = Decision(n, x, y, verdict, trace, spectrum, backend,
                        time_below(trace, config.threshold))
    log.info("n=%d (%d,%d): %s via %s, min P=%.4f", n, x, y, verdict.value, backend,
             trace.min_prob)
    if config.oracle and "omega" not in overrides and "epsilon0" not in overrides:
        expected = Verdict.RESONANT if spectrum.E1 == 0 else Verdict.NON_RESONANT
        if verdict is not expected:
            raise OracleMismatch(
                f"n={n} (x={x}, y={y}): probe says {verdict.value}, brute force E1={spectrum.E1}")
    return decision


@dataclass
class RamseyResult:
    x: int
    y: int
    R: int
    evidence: list[dict]

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "R": self.R, "evidence": self.evidence}

    def summary(self) -> str:
        lines = [f"R({self.x},{self.y}) = {self.R}",
                 f"{'n':>3} {'verdict':<12} {'min P':>9} {'t_dec':>10} {'backend':<7}"]
        for e in self.evidence:
            td = "-" if e["time_to_decision"] is None else f"{e['time_to_decision']:.1f}"
            lines.append(f"{e['n']:>3} {e['verdict']:<12} {e['min_p']:>9.5f} {td:>10} {e['backend']:<7}")
        return "\n".join(lines)


def ramsey_search(x: int, y: int, config: DecisionConfig | None = None) -> RamseyResult:
    """Increase n from a safe lower bound until the probe stops resonating."""
    config = config or DecisionConfig()
    n = lower_bound_start(x, y)
    evidence: list[dict] = []
    limit = max_L(config.cap)
    while True:
        if num_pairs(n) > limit:
            raise ResourceError(
                f"R({x},{y}) search reached n={n} (L={num_pairs(n)}) beyond the cap L<={limit}",
                partial=RamseyResult(x, y, -1, evidence))
        d = decide_n(n, x, y, config)
        evidence.append(d.record(config.oracle))
        if d.verdict is Verdict.NON_RESONANT:
            return RamseyResult(x, y, n, evidence)
        n += 1


@dataclass
class ScanResult:
    E1: int
    omega: float
    epsilon0: float
    steps: list[dict]

    def to_json(self) -> dict:
        return asdict(self)


def scan_ground_energy(n: int, x: int, y: int, config: DecisionConfig | None = None, *,
                       table: DiagonalTable | None = None) -> ScanResult:
    """Step the probe frequency (or the reference energy) until resonance.

    Resonance occurs when E1 - epsilon0 = omega, so the first resonant setting
    yields E1 = omega + epsilon0.
    """
    config = config or DecisionConfig()
    if table is None:
        table = build_diagonal(n, x, y, cap=config.cap)
    top = 2 + bound_v(n, x, y)
    steps = []
    for k in range(top):
        if config.scan == "omega":
            omega, eps0 = config.omega + k, config.epsilon0
        else:
            omega, eps0 = config.omega, config.epsilon0 + k
            if eps0 == 0:
                warnings.warn("epsilon0 = 0 makes the reference state degenerate with the idle "
                              "ancilla-0 register states; resonance at this step is masked",
                              stacklevel=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            d = decide_n(n, x, y, config, table=table, omega=omega, epsilon0=eps0)
        steps.append({"omega": omega, "epsilon0": eps0, "verdict": d.verdict.value,
                      "min_p": d.trace.min_prob})
        if d.below:
            E1 = int(round(omega + eps0))
            if config.oracle and E1 != d.spectrum.E1:
                raise OracleMismatch(f"scan found E1={E1}, brute force E1={d.spectrum.E1}")
            return ScanResult(E1, omega, eps0, steps)
    raise SearchError(f"no resonance for n={n}, x={x}, y={y} up to {top} steps")


def estimate_m1(trace: DynamicsTrace, c: float) -> int:
    """Ground multiplicity from the first transfer minimum of a resonant trace.

    The transfer peaks at t = (pi/2) / (c sqrt(m1/N)); the minimum is refined
    by a parabola through the lowest grid point and its neighbours.
    """
    p = trace.probs
    i = int(np.argmin(p))
    # first local minimum below 0.5 rather than the global one
    below = np.flatnonzero(p < 0.5)
    if below.size:
        j = int(below[0])
        while j + 1 < p.size and p[j + 1] <= p[j]:
            j += 1
        i = j
    t = trace.times
    if 0 < i < p.size - 1:
        y0, y1, y2 = p[i - 1], p[i], p[i + 1]
        h = t[i] - t[i - 1]
        denom = y0 - 2 * y1 + y2
        t_min = t[i] + (0.5 * h * (y0 - y2) / denom if denom else 0.0)
    else:
        t_min = t[i]
    g = (math.pi / 2) / t_min
    return max(1, int(round(trace.N * (g / c) ** 2)))


@dataclass
class ReadoutResult:
    n: int
    x: int
    y: int
    E1: int
    m1: int
    t_star: float
    samples: int
    seed: int | None
    postselected: int
    histogram: dict[int, int]

    @property
    def postselection_rate(self) -> float:
        return self.postselected / self.samples

    @property
    def support(self) -> set[int]:
        return set(self.histogram)

    def frequencies(self) -> dict[int, float]:
        return {k: v / self.postselected for k, v in self.histogram.items()}

    def to_json(self) -> dict:
        return {"n": self.n, "x": self.x, "y": self.y, "E1": self.E1, "m1": self.m1,
                "t_star": self.t_star, "samples": self.samples, "seed": self.seed,
                "postselected": self.postselected,
                "postselection_rate": self.postselection_rate,
                "histogram": {str(k): v for k, v in sorted(self.histogram.items())}}


def _register_distribution(n, x, y, E1, m1, table, spectrum, config, backend):
    """Born probabilities: (P[probe=0, anc=1, code] over codes, total mass elsewhere)."""
    params = _params(n, x, y, config, omega=1.0, epsilon0=E1 - 1.0)
    t_star = models.readout_time(table.N, m1, config.c)
    if backend == "full":
        psi = evolve(init_state(params), t_star, params, table, method=config.method,
                     tol=config.tol)
        probs = np.abs(psi.reshape(2, 2, -1)) ** 2
        return probs[0, 1], t_star
    amps = models.arrow_amplitudes(spectrum, params, t_star)
    energies = np.array([e for e, _ in spectrum.levels])
    mult = np.array([m for _, m in spectrum.levels], dtype=float)
    per_code = np.abs(amps[1:]) ** 2 / mult
    reg = per_code[np.searchsorted(energies, table.values)]
    return reg, t_star


def readout_ground_states(n: int, x: int, y: int, samples: int, seed: int | None,
                          config: DecisionConfig | None = None, *, E1: int | None = None,
                          m1: int | None = None,
                          table: DiagonalTable | None = None) -> ReadoutResult:
    """Drive the resonant transfer to its peak and sample the register.

    Each shot measures all qubits in the computational basis; shots with the
    probe in |0> and the ancilla in |1> are kept and their register codes
    histogrammed.
    """
    config = config or DecisionConfig()
    if table is None:
        table = build_diagonal(n, x, y, cap=config.cap)
    spectrum = extract_levels(table)
    if E1 is None:
        E1 = spectrum.E1 if config.oracle else scan_ground_energy(n, x, y, config, table=table).E1
    if m1 is None:
        if config.oracle:
            m1 = spectrum.m1
        else:
            params = _params(n, x, y, config, omega=1.0, epsilon0=E1 - 1.0)
            tr = _trace(params, table, spectrum, config, config.backend_for(n))
            m1 = estimate_m1(tr, config.c)
    backend = config.backend_for(n)
    reg, t_star = _register_distribution(n, x, y, E1, m1, table, spectrum, config, backend)
    rng = np.random.default_rng(seed)
    # Born sampling of all qubits followed by post-selection, done in two stages
    kept = rng.binomial(samples, min(1.0, float(reg.sum())))
    codes = rng.choice(reg.size, size=kept, p=reg / reg.sum()) if kept else np.array([], int)
    hist = Counter(int(k) for k in codes)
    result = ReadoutResult(n, x, y, E1, m1, t_star, samples, seed, int(kept),
                           dict(sorted(hist.items())))
    if result.postselection_rate < 0.5:
        warnings.warn(f"post-selection success only {result.postselection_rate:.3f}; "
                      f"t*={t_star:g} is probably mis-set", stacklevel=2)
    return result


def first_dip_times(Ns, m1: int = 1, Eprime: float = 1.0, c: float = 0.02,
                    threshold: float = 0.5, points: int = 2000) -> list[float]:
    """Time-to-decision of synthetic two-level spectra {(0, m1), (E', N - m1)}."""
    out = []
    for N in Ns:
        spec = Spectrum.synthetic([(0, m1), (Eprime, N - m1)])
        T = 2 * models.readout_time(N, m1, c)
        tr = models.multilevel_trace(spec, None, np.linspace(0, T, points), c=c)
        out.append(time_below(tr, threshold))
    return out


def fit_exponent(Ns, times) -> float:
    """Slope of log T against log N."""
    return float(np.polyfit(np.log(np.asarray(Ns, float)), np.log(np.asarray(times, float)), 1)[0])
