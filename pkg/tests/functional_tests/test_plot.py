#!/usr/bin/python

import sys
sys.path.append("..")
import vtaobimanip as vb
import pytest


def test_plot(tmp_path):
    rows = [{'iteration': i, 'total': 0.1 * i,
             'success_rate': None if i < 2 else 0.2 * i} for i in range(5)]
    p = vb.Plot(no_display=True)
    p.plot_curves({'VTAO': rows, 'VT': rows[:3]},
                  keys=('total', 'success_rate'))
    assert len(p.axes) == 2
    p.save(str(tmp_path / "curves.png"))
    assert (tmp_path / "curves.png").exists()
    p.show()


def test_plot_empty():
    p = vb.Plot(no_display=True)
    p.plot_curves({})
    p.show()

if __name__ == "__main__":
    pytest.main()
