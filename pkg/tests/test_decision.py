import math
import warnings

import numpy as np
import pytest

from ramsey_probe.decision import (DecisionConfig, Verdict, classify_trace, decide_n,
                                   estimate_m1, first_dip_times, fit_exponent, ramsey_search,
                                   readout_ground_states, scan_ground_energy, slope_is_resonant,
                                   time_below)
from ramsey_probe.dynamics import DynamicsTrace
from ramsey_probe.errors import (ArgumentError, InconclusiveError, OracleMismatch,
                                 ResourceError)
from ramsey_probe.models import multilevel_trace, nonres_probability, readout_time
from ramsey_probe.spectrum import Spectrum, build_diagonal, classical_decide


def trace_of(probs, N=1024, tmax=None):
    cfg = DecisionConfig()
    tmax = cfg.horizon(N) if tmax is None else tmax
    return DynamicsTrace(np.linspace(0, tmax, len(probs)), np.asarray(probs, float), N, "test")


def test_classify_examples():
    cfg = DecisionConfig()
    assert classify_trace(trace_of([1.0, 0.4, 0.03, 0.5]), cfg) is Verdict.RESONANT
    T = cfg.horizon(1024)
    t = np.linspace(0, T, 400)
    nonres = DynamicsTrace(t, nonres_probability(1.0, 0.02, t), 1024, "closed-form")
    assert classify_trace(nonres, cfg) is Verdict.NON_RESONANT
    assert classify_trace(trace_of(np.ones(50)), cfg) is Verdict.NON_RESONANT


def test_short_trace_without_dip_is_inconclusive():
    with pytest.raises(InconclusiveError):
        classify_trace(trace_of(np.ones(20), tmax=100.0), DecisionConfig())
    # a dip is decisive even before the horizon
    assert classify_trace(trace_of([1.0, 0.2], tmax=10.0), DecisionConfig()) is Verdict.RESONANT


def test_time_below_interpolates():
    tr = DynamicsTrace(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.6, 0.2]), 4, "test")
    assert time_below(tr, 0.5) == pytest.approx(1.25)
    assert time_below(tr, 0.1) is None


def test_config_validation():
    with pytest.raises(ArgumentError):
        DecisionConfig(threshold=0.999)
    with pytest.raises(ArgumentError):
        DecisionConfig(threshold=0.0)
    with pytest.raises(ArgumentError):
        DecisionConfig(backend="gpu")
    with pytest.raises(ArgumentError):
        DecisionConfig(c=0.0)
    cfg = DecisionConfig()
    assert cfg.horizon(1024) == pytest.approx(readout_time(1024, 1, 0.02))
    assert cfg.backend_for(5) == "full" and cfg.backend_for(6) == "arrow"


@pytest.mark.parametrize("n,x,y,verdict", [(5, 3, 3, Verdict.RESONANT),
                                           (6, 3, 3, Verdict.NON_RESONANT),
                                           (4, 2, 4, Verdict.NON_RESONANT),
                                           (3, 2, 4, Verdict.RESONANT)])
def test_decide_examples(n, x, y, verdict):
    d = decide_n(n, x, y, DecisionConfig(oracle=True))
    assert d.verdict is verdict
    assert d.below == classical_decide(n, x, y).below


def test_decision_record_fields():
    d = decide_n(4, 3, 3, DecisionConfig())
    rec = d.record(oracle=True)
    assert rec["verdict"] == "Resonant" and rec["below"] is True
    assert rec["backend"] == "full" and rec["E1_oracle"] == 0
    assert rec["time_to_decision"] > 0


def test_backends_agree_on_verdict():
    for n in (3, 4, 5):
        full = decide_n(n, 3, 3, DecisionConfig(backend="full"))
        arrow = decide_n(n, 3, 3, DecisionConfig(backend="arrow"))
        assert full.verdict is arrow.verdict


def test_oracle_mismatch_is_raised(monkeypatch):
    import ramsey_probe.decision as dec
    monkeypatch.setattr(dec, "classify_trace", lambda tr, cfg: Verdict.NON_RESONANT)
    with pytest.raises(OracleMismatch):
        decide_n(5, 3, 3, DecisionConfig(oracle=True, backend="arrow"))
    decide_n(5, 3, 3, DecisionConfig(backend="arrow"))


def test_slope_early_exit():
    N, c = 1024, 0.02
    t = np.linspace(0, 200, 101)
    res = multilevel_trace(Spectrum.synthetic([(0, 12), (1, N - 12)]), None, t, c=c)
    non = multilevel_trace(Spectrum.synthetic([(2, N)]), None, t, c=c)
    assert slope_is_resonant(res, 200, c)
    assert not slope_is_resonant(non, 200, c)
    cfg = DecisionConfig(slope_window=200)
    assert classify_trace(res, cfg) is Verdict.RESONANT


@pytest.mark.parametrize("xy,R", [((2, 2), 2), ((2, 4), 4), ((3, 3), 6)])
def test_ramsey_examples(xy, R):
    res = ramsey_search(*xy, DecisionConfig(oracle=True))
    assert res.R == R
    assert [e["below"] for e in res.evidence][-1] is False
    assert all(e["below"] for e in res.evidence[:-1])
    assert f"R({xy[0]},{xy[1]}) = {R}" in res.summary()


def test_ramsey_cap_keeps_partial_evidence():
    with pytest.raises(ResourceError) as info:
        ramsey_search(3, 3, DecisionConfig(cap=10))
    partial = info.value.partial
    assert [e["n"] for e in partial.evidence] == [5]


@pytest.mark.parametrize("n,x,y,E1,omega", [(6, 3, 3, 2, 3.0), (5, 3, 3, 0, 1.0), (2, 2, 2, 1, 2.0)])
def test_scan_examples(n, x, y, E1, omega):
    res = scan_ground_energy(n, x, y, DecisionConfig(oracle=True))
    assert res.E1 == E1 and res.omega == omega
    assert res.steps[-1]["verdict"] == "Resonant"


def test_scan_along_reference_energy():
    res = scan_ground_energy(4, 2, 4, DecisionConfig(scan="epsilon0", omega=2.0, oracle=True))
    assert res.E1 == 1 and res.omega == 2.0 and res.epsilon0 == -1.0
    with pytest.warns(UserWarning, match="degenerate"):
        res = scan_ground_energy(6, 3, 3, DecisionConfig(scan="epsilon0", oracle=True))
    assert res.E1 == 2 and res.epsilon0 == 1.0


def test_reference_energy_zero_is_flagged():
    with pytest.warns(UserWarning, match="degenerate"):
        scan_ground_energy(2, 2, 2, DecisionConfig(scan="epsilon0"))


@pytest.mark.parametrize("m1", [1, 12, 50])
def test_estimate_m1_recovers_multiplicity(m1):
    N, c = 1024, 0.02
    t = np.linspace(0, 2 * readout_time(N, m1, c), 800)
    tr = multilevel_trace(Spectrum.synthetic([(0, m1), (3, N - m1)]), None, t, c=c)
    assert estimate_m1(tr, c) == m1


def test_readout_n3_support():
    table = build_diagonal(3, 3, 3)
    res = readout_ground_states(3, 3, 3, 2000, 1, DecisionConfig(), E1=0, table=table)
    zero = set(np.flatnonzero(table.values == 0).tolist())
    assert len(zero) == 6
    assert res.support <= zero
    assert res.postselection_rate > 0.9


def test_readout_is_deterministic_per_seed():
    cfg = DecisionConfig(backend="arrow", oracle=True)
    a = readout_ground_states(5, 3, 3, 3000, 11, cfg)
    b = readout_ground_states(5, 3, 3, 3000, 11, cfg)
    assert a.histogram == b.histogram and a.to_json() == b.to_json()
    assert a.t_star == pytest.approx(readout_time(1024, 12, 0.02))


def test_readout_estimates_E1_and_m1_without_oracle():
    res = readout_ground_states(4, 3, 3, 1000, 2, DecisionConfig())
    assert (res.E1, res.m1) == (0, 18)


def test_readout_warns_on_mis_set_time():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        readout_ground_states(5, 3, 3, 500, 0, DecisionConfig(backend="arrow"), E1=0, m1=1000)
    assert any("post-selection" in str(x.message) for x in w)


def test_first_dip_scaling():
    Ns = [2**6, 2**8, 2**10]
    times = first_dip_times(Ns)
    assert all(t is not None for t in times)
    assert times[0] < times[1] < times[2]
    assert fit_exponent(Ns, [math.sqrt(N) for N in Ns]) == pytest.approx(0.5)
