import numpy as np
import pytest
from scipy import stats

from ehcr import LinkVariances, read_trace, sample_realization, scenario_variances, write_trace
from ehcr.channel import SCENARIOS, Scenario, TraceParseError, trial_seed
from ehcr.model import StructureError

GOOD = "slot,h_pp,h_ps,h_sp,h_ss\n1,0.5,1.0,0.25,2.0\n2,1.5,0.1,0.3,0.7\n"


def test_scenarios():
    assert scenario_variances("baseline") == LinkVariances(1, 1, 1, 1)
    assert scenario_variances("weak_st_pr") == LinkVariances(1, 1, 0.1, 1)
    assert scenario_variances("weak_pt_sr") == LinkVariances(1, 0.1, 1, 1)
    assert scenario_variances("strong_direct") == LinkVariances(1, 0.1, 0.1, 1)
    assert scenario_variances("strong_interference") == LinkVariances(0.1, 1, 1, 0.1)
    assert Scenario.named("baseline").variances == SCENARIOS["baseline"]
    with pytest.raises(KeyError):
        scenario_variances("weak_st_sr")


def test_variances_positive():
    with pytest.raises(ValueError):
        LinkVariances(0.0, 1, 1, 1)


def test_determinism_and_prefix():
    v = scenario_variances("baseline")
    a = sample_realization(v, 30, 99)
    assert a == sample_realization(v, 30, 99)
    assert a.head(10) == sample_realization(v, 10, 99)
    assert not a == sample_realization(v, 30, 100)
    with pytest.raises(StructureError):
        sample_realization(v, 0, 1)


def test_variances_scale_draws():
    a = sample_realization(LinkVariances(1, 1, 1, 1), 20, 5)
    b = sample_realization(LinkVariances(2, 0.5, 3, 0.1), 20, 5)
    assert np.allclose(b.h_pp, 2 * a.h_pp) and np.allclose(b.h_ss, 0.1 * a.h_ss)


def test_moments_and_ks():
    h = sample_realization(LinkVariances(1, 1, 1, 1), 100_000, 2024).h_ss
    assert abs(h.mean() - 1.0) < 0.02
    assert abs(h.var() - 1.0) < 0.05
    h = sample_realization(LinkVariances(1, 1, 1, 0.1), 10_000, 11).h_ss
    # 1% critical value of the one-sample KS statistic
    assert stats.kstest(h, "expon", args=(0, 0.1)).statistic < 1.63 / np.sqrt(h.size)


def test_trial_seed():
    assert trial_seed(5, 0) != trial_seed(5, 1)
    assert 0 <= trial_seed(2**64 - 1, 123) < 2**64
    assert trial_seed(7, 3) ^ trial_seed(8, 3) == 7 ^ 8


def test_trace_roundtrip(tmp_path):
    r = sample_realization(scenario_variances("strong_direct"), 17, 3)
    path = tmp_path / "t.csv"
    write_trace(path, r)
    assert read_trace(path) == r
    one = tmp_path / "one.csv"
    write_trace(one, r.head(1))
    assert len(one.read_text().splitlines()) == 2


def test_trace_io_errors(tmp_path):
    r = sample_realization(scenario_variances("baseline"), 2, 1)
    with pytest.raises(OSError):
        write_trace("", r)
    with pytest.raises(OSError):
        read_trace(tmp_path / "missing.csv")


@pytest.mark.parametrize("text, line", [
    ("slot,h_pp,h_ps,h_ss\n1,1,1,1\n", 1),
    ("slot,h_pp,h_ps,h_sp,h_ss\n1,1,1,1\n", 2),
    ("slot,h_pp,h_ps,h_sp,h_ss\n1,1,1,1,-0.5\n", 2),
    ("slot,h_pp,h_ps,h_sp,h_ss\n1,1,1,1,1\n3,1,1,1,1\n", 3),
    ("slot,h_pp,h_ps,h_sp,h_ss\n1,1,x,1,1\n", 2),
    ("slot,h_pp,h_ps,h_sp,h_ss\n1,1,1,1,nan\n", 2),
    ("slot,h_pp,h_ps,h_sp,h_ss\n", 2),
])
def test_trace_parse_errors(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(TraceParseError) as err:
        read_trace(path)
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_trace_parse_good(tmp_path):
    path = tmp_path / "good.csv"
    path.write_text(GOOD)
    r = read_trace(path)
    assert r.m == 2 and r.h_ss.tolist() == [2.0, 0.7]
