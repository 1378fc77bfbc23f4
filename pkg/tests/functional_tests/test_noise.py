#!/usr/bin/python

import sys
sys.path.append("..")

from vtaobimanip import noise
import numpy
import pytest


def test_noise():

    N = 500
    rng = numpy.random.default_rng(0)
    w = noise.white(N, rng=rng)
    b = noise.brown(N, rng=rng)

    # check output length
    assert len(w) == N
    assert len(b) == N
    # check output type
    for x in [w, b]:
        assert type(x) == numpy.ndarray, "%s is not numpy.ndarray" % (type(x))


def test_noise_shape():
    x = noise.white((100, 3), rng=numpy.random.default_rng(1))
    assert x.shape == (100, 3)
    assert noise.brown((100, 3)).shape == (100, 3)


def test_white_variance():
    # one-sided PSD b0 up to fs/2 gives variance b0*fs/2
    x = noise.white(200000, b0=2.0, fs=10.0, rng=numpy.random.default_rng(2))
    assert numpy.isclose(numpy.var(x), 10.0, rtol=0.02)


@pytest.mark.parametrize("rate,jitter", [(200.0, 1e-4), (1000.0, 1e-5),
                                         (30.0, 0.1)])
def test_jittered_timestamps(rate, jitter):
    ts = noise.jittered_timestamps(0.0, 2.0, rate, jitter,
                                   numpy.random.default_rng(3))
    assert len(ts) == int(2.0 * rate) + 1
    assert numpy.all(numpy.diff(ts) > 0)
    nominal = numpy.arange(len(ts)) / rate
    assert numpy.abs(ts - nominal).max() <= 0.25 / rate


if __name__ == "__main__":
    pytest.main()
