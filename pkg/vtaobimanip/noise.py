"""
Sensor noise for synthetic streams
==================================

Power-law noise generators used to corrupt synthetic sensor payloads and
to jitter stream timestamps. All generators draw from an explicit
``numpy.random.Generator`` so that a dataset seed fixes every sample.

See: http://en.wikipedia.org/wiki/Colors_of_noise

Version history
---------------

**2024.10**
- explicit random generators, timestamp jitter

License
-------

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU Lesser General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU Lesser General Public License for more details.

You should have received a copy of the GNU Lesser General Public License
along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""

import math
import numpy


def _rng(rng):
    return rng if rng is not None else numpy.random.default_rng()


def white(num_points=1024, b0=1.0, fs=1.0, rng=None):
    """ White noise generator

        Time series with constant one-sided PSD = b0 up to the nyquist
        frequency fs/2.

        Parameters
        ----------
        num_points: int or tuple, optional
            number of samples (or output shape)
        b0: float, optional
            power-spectral density in [X^2/Hz] where X is the unit of x
        fs: float, optional
            sampling frequency, 1/fs is the time-interval between datapoints
        rng: numpy.random.Generator, optional

        Returns
        -------
        White noise sample: numpy.array
    """
    return math.sqrt(b0*fs/2.0)*_rng(rng).standard_normal(num_points)


def brown(num_points=1024, b_minus2=1.0, fs=1.0, rng=None):
    """ Brownian or random walk noise with 1/f^2 PSD

        Obtained by integrating white-noise along the first axis.

        Parameters
        ----------
        num_points: int or tuple, optional
        b_minus2: float, optional
            power-spectral density is b_minus2*f^-2
        fs: float, optional
        rng: numpy.random.Generator, optional

        Returns
        -------
        Random walk sample: numpy.array
    """
    return (1.0/float(fs))*numpy.cumsum(
        white(num_points,
              b0=b_minus2*(4.0*math.pi*math.pi),
              fs=fs, rng=rng), axis=0)


def jittered_timestamps(t_start, t_stop, rate, jitter, rng=None):
    """ sample times at ``rate`` Hz covering [t_start, t_stop]

        Each nominal tick k/rate is displaced by white noise of standard
        deviation ``jitter`` seconds, clipped to a quarter period so that
        the result stays strictly increasing.
    """
    period = 1.0 / rate
    n = int(math.floor((t_stop - t_start) * rate + 1e-9)) + 1
    ticks = t_start + period * numpy.arange(n)
    dt = jitter * _rng(rng).standard_normal(n)
    return ticks + numpy.clip(dt, -0.25 * period, 0.25 * period)
