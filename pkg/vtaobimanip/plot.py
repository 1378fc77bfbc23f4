"""
Training-curve plotting utilities

Version history
---------------

**2024.10**
- reward, success-rate and loss curves of training runs

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


class Plot(object):
    """ A class for plotting training curves of one or more runs

    :Example:
        ::

            import vtaobimanip
            b = vtaobimanip.Plot(no_display=True)
            b.plot_curves({'VTAO': log_rows}, keys=('total', 'success'))
            b.save('curves.png')

    Uses matplotlib. self.fig and self.axes store the return values of
    matplotlib.pyplot.subplots(). Every entry of ``keys`` gets its own
    panel, every run one line per panel.
    """
    def __init__(self, no_display=False, n_panels=1):
        """ set ``no_display`` to ``True`` when we don't have an X-window
        (e.g. for tests)
        """
        try:
            import matplotlib
            if no_display:
                matplotlib.use('Agg')
            import matplotlib.pyplot as plt
            self.plt = plt
        except ImportError:
            raise RuntimeError("Matplotlib is required for plotting")
        self.n_panels = n_panels
        self.fig, axes = plt.subplots(n_panels, 1, squeeze=False,
                                      figsize=(6.4, 2.4 * n_panels + 1.0))
        self.axes = list(axes[:, 0])

    def plot_curves(self, runs, keys=('total',), x_key='iteration',
                    grid=True, first_panel=0, **kwargs):
        """ Draw one line per run and key

        Additional keywords arguments are passed to
        :py:func:`matplotlib.pyplot.plot`.

        Parameters
        ----------
        runs: dict
            run label -> list of log rows (dicts); rows missing a key or
            holding None for it are skipped
        keys: sequence of str
            columns to draw, one panel each
        x_key: str
        grid: boolean
        first_panel: int
            panel of the first key, so that curves with another x axis
            (pretraining steps) can share the figure
        """
        if first_panel + len(keys) > self.n_panels:
            self.plt.close(self.fig)
            self.__init__(no_display=True,
                          n_panels=first_panel + len(keys))
        axes = self.axes[first_panel:first_panel + len(keys)]
        for ax, key in zip(axes, keys):
            for label, rows in runs.items():
                pts = [(r[x_key], r[key]) for r in rows
                       if r.get(key) is not None and
                       np.isfinite(float(r[key]))]
                if not pts:
                    continue
                x, y = np.array(pts, dtype=float).T
                ax.plot(x, y, label=label, **kwargs)
            ax.set_ylabel(key)
            ax.grid(grid, which="major", ls="-", color='0.85')
        axes[-1].set_xlabel(x_key)
        if runs:
            axes[0].legend(loc='best', fontsize='small')
        self.fig.tight_layout()

    def show(self):
        """Calls matplotlib.pyplot.show()

        Keeping this separated from ``plot_curves()`` allows to tweak display
        before rendering
        """
        self.plt.show()

    def save(self, f):
        """Save figure to file
        """
        self.fig.savefig(f)
