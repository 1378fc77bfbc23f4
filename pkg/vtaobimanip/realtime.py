"""
    Real-time statistics
    ====================

    Statistics computed 'on-the-fly' from the stream of finished episodes
    of a vectorized environment.

    Version history
    ---------------

    **2024.10**
    - SuccessTracker ring buffers, RunningMean

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

from collections import deque

import numpy


class SuccessTracker(object):
    """ Success rate over the last ``window`` episodes of every environment

    :Example:
        ::

            t = SuccessTracker(n_envs=2)
            t.push(0, 1)
            t.push(1, 0)
            t.rate()        # 0.5
    """
    def __init__(self, n_envs, window=10):
        if n_envs < 1 or window < 1:
            raise ValueError("n_envs and window must be positive")
        self.n_envs = n_envs
        self.window = window
        self.buffers = [deque(maxlen=window) for _ in range(n_envs)]
        self.episodes = numpy.zeros(n_envs, dtype=int)

    def push(self, env, outcome):
        """ add the outcome (0 or 1) of a finished episode of ``env`` """
        if outcome not in (0, 1, True, False):
            raise ValueError("episode outcome must be 0 or 1, got %r"
                             % (outcome,))
        self.buffers[env].append(int(outcome))
        self.episodes[env] += 1

    def extend(self, env, outcomes):
        for o in outcomes:
            self.push(env, o)

    def env_rate(self, env):
        """ mean over the buffered outcomes of one environment, or None """
        buf = self.buffers[env]
        if not buf:
            return None
        return float(numpy.mean(buf))

    def rate(self):
        """ mean of the per-environment rates over environments with data

        Returns None while no episode has finished.
        """
        rates = [r for r in (self.env_rate(i) for i in range(self.n_envs))
                 if r is not None]
        if not rates:
            return None
        return float(numpy.mean(rates))

    def __len__(self):
        return sum(len(b) for b in self.buffers)


class RunningMean(object):
    """ per-key running sums, e.g. reward components within an iteration """
    def __init__(self):
        self.reset()

    def reset(self):
        self.sums = {}
        self.counts = {}

    def add(self, values):
        """ add a dict of (possibly array-valued) samples """
        for k, v in values.items():
            v = numpy.asarray(v, dtype=float)
            self.sums[k] = self.sums.get(k, 0.0) + float(numpy.sum(v))
            self.counts[k] = self.counts.get(k, 0) + v.size

    def means(self):
        return dict((k, self.sums[k] / self.counts[k])
                    for k in self.sums if self.counts[k])
