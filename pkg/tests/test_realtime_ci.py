import numpy
import pytest
import scipy.stats

from vtaobimanip import ci
from vtaobimanip import realtime
from vtaobimanip import rl


def test_running_success_rate():
    t = realtime.SuccessTracker(n_envs=1)
    t.extend(0, [1, 1, 0, 1, 0, 1, 1, 1, 0, 1])
    assert t.rate() == pytest.approx(0.7)
    assert rl.running_success_rate(t) == pytest.approx(0.7)


def test_ring_buffer_keeps_last_ten():
    t = realtime.SuccessTracker(n_envs=1)
    t.extend(0, [0, 0] + [1] * 10)
    assert len(t) == 10
    assert t.episodes[0] == 12
    assert t.rate() == 1.0


def test_rate_over_envs():
    t = realtime.SuccessTracker(n_envs=3, window=4)
    assert t.rate() is None
    t.extend(0, [1, 1, 1, 1])
    t.extend(1, [0, 1])
    assert t.env_rate(2) is None
    assert t.rate() == pytest.approx(0.75)
    with pytest.raises(ValueError):
        t.push(0, 2)


def test_running_mean():
    m = realtime.RunningMean()
    m.add({'a': [1.0, 2.0], 'b': 4.0})
    m.add({'a': 3.0})
    assert m.means() == {'a': 2.0, 'b': 4.0}
    m.reset()
    assert m.means() == {}


@pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (5, 10), (10, 10),
                                 (7, 15)])
def test_success_interval_contains_estimate(k, n):
    lo, hi = ci.success_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_success_interval_edges():
    assert ci.success_interval(0, 10)[0] == 0.0
    assert ci.success_interval(10, 10)[1] == 1.0
    lo, hi = ci.success_interval(5, 10)
    assert numpy.isclose(lo + hi, 1.0)
    # lower bound: P(X >= k | p=lo) equals alpha/2
    alpha = 1 - ci.ONE_SIGMA_CI
    assert numpy.isclose(scipy.stats.binom.sf(4, 10, lo), alpha / 2)
    with pytest.raises(ValueError):
        ci.success_interval(3, 0)


def test_wider_interval_at_higher_confidence():
    lo1, hi1 = ci.success_interval(4, 10)
    lo2, hi2 = ci.success_interval(4, 10, ci=0.95)
    assert lo2 < lo1 and hi2 > hi1


def test_mean_std():
    assert ci.mean_std([0.5, 1.0]) == (0.75, 0.25)
    assert ci.format_mean_std([0.5, 1.0]) == u"75±25"
    assert ci.format_mean_std([]) == "n/a"


if __name__ == "__main__":
    pytest.main()
