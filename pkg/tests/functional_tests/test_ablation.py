#!/usr/bin/python
"""
 Every baseline survives a smoke-sized pretrain, train and evaluate.
"""

import os
import sys
sys.path.append("..")

import pytest

from vtaobimanip import cli
from vtaobimanip.model import TABLE1, TABLE2
from vtaobimanip.rl import EvaluationTable


SMOKE = ['--profile', 'smoke', '--set', 'ppo.stage1_iterations=1',
         '--set', 'ppo.stage2_iterations=1', '--set', 'env.horizon=5']


def check_run(run_dir):
    assert os.path.exists(os.path.join(run_dir, 'policy.pt'))
    table = EvaluationTable.load(os.path.join(run_dir, 'eval.yaml'))
    assert len(table.split('seen')) == 10
    assert len(table.split('unseen')) == 5


def test_two_baselines(tmp_path):
    out = str(tmp_path)
    assert cli.main(['ablate', '--names', 'T,Base', '--out', out]
                    + SMOKE) == 0
    for name in ('T', 'Base'):
        check_run(os.path.join(out, name))
    assert os.path.exists(os.path.join(out, 'T', 'encoder.pt'))
    assert not os.path.exists(os.path.join(out, 'Base', 'encoder.pt'))
    with open(os.path.join(out, 'comparison.txt'), encoding='utf8') as f:
        body = [l for l in f if not l.startswith('#')]
    assert len(body) == 3


@pytest.mark.slow
def test_all_baselines(tmp_path):
    out = str(tmp_path)
    names = list(dict.fromkeys(TABLE1 + TABLE2 + ('Base',)))
    assert cli.main(['ablate', '--names', ",".join(names), '--jobs', '4',
                     '--out', out] + SMOKE) == 0
    for name in names:
        check_run(os.path.join(out, name))
    with open(os.path.join(out, 'comparison.txt'), encoding='utf8') as f:
        body = [l for l in f if not l.startswith('#')]
    assert len(body) == len(names) + 1


if __name__ == "__main__":
    pytest.main()
