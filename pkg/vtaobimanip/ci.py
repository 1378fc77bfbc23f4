"""

this file is part of vtaobimanip

- confidence intervals for success rates
- aggregate statistics across bottles


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

import numpy as np
import scipy.special
import scipy.stats

########################################################################
# Confidence Intervals
ONE_SIGMA_CI = scipy.special.erf(1/np.sqrt(2))
#    = 0.68268949213708585


def success_interval(successes, trials, ci=ONE_SIGMA_CI):
    """ returns the Clopper-Pearson interval (p_min, p_max)
        of a success probability observed as ``successes`` out of ``trials``

    Parameters
    ----------
    successes: int
    trials: int
        must be positive
    ci: float, defaults to scipy.special.erf(1/math.sqrt(2))
        degree of confidence, two-sided

    Returns
    -------
    (p_min, p_max): (float, float)
        Confidence interval, contains successes/trials
    """
    if trials <= 0 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials > 0")
    alpha = 1.0 - ci
    lo = 0.0
    hi = 1.0
    if successes > 0:
        lo = scipy.stats.beta.ppf(alpha / 2, successes,
                                  trials - successes + 1)
    if successes < trials:
        hi = scipy.stats.beta.ppf(1 - alpha / 2, successes + 1,
                                  trials - successes)
    return (float(lo), float(hi))


def mean_std(values):
    """ mean and population standard deviation, (nan, nan) when empty """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return (float('nan'), float('nan'))
    return (float(np.mean(values)), float(np.std(values)))


def format_mean_std(values, percent=True):
    """ 'mean±std' text as used in comparison tables """
    m, s = mean_std(values)
    if not np.isfinite(m):
        return "n/a"
    if percent:
        return "%.0f±%.0f" % (100.0 * m, 100.0 * s)
    return "%.3g±%.3g" % (m, s)
