#!/usr/bin/python
"""
 End-to-end runs of the command line entry point with the smoke profile.
"""

import os
import sys
sys.path.append("..")

import numpy
import pytest

from vtaobimanip import cli
from vtaobimanip import environment as env
from vtaobimanip.config import load_yaml
from vtaobimanip.dataset import load_dataset, read_array, write_array
from vtaobimanip.plot import Plot
from vtaobimanip.pretrain import write_history
from vtaobimanip.rl import EvalRow, EvaluationTable, write_log


def run(*argv):
    return cli.main(list(argv))


def test_missing_out_is_usage_error():
    assert run('gen-data', '--profile', 'smoke') == 2


def test_unknown_command():
    assert run('frobnicate', '--out', 'x') == 2


def test_unknown_baseline(tmp_path):
    assert run('ablate', '--profile', 'smoke', '--names', 'VT,VTX',
               '--out', str(tmp_path)) == 2


def test_bad_set(tmp_path):
    assert run('gen-data', '--profile', 'smoke', '--set', 'nosuch=1',
               '--out', str(tmp_path)) == 2


def test_unknown_config_key(tmp_path):
    assert run('gen-data', '--profile', 'smoke', '--set', 'ppo.gama=0.9',
               '--out', str(tmp_path)) == 1


def test_missing_dataset(tmp_path):
    assert run('pretrain', '--profile', 'smoke', '--data',
               str(tmp_path / "nothing"), '--out', str(tmp_path / "run")) == 1


def test_gen_data(tmp_path):
    out = str(tmp_path / "data")
    assert run('gen-data', '--profile', 'smoke', '--seed', '4',
               '--set', 'generator.n_trajectories=1', '--out', out) == 0
    ds = load_dataset(out)
    assert len(ds) == 12 - 5
    assert ds.image_size == 32
    info = load_yaml(os.path.join(out, 'config.yaml'))
    assert info['seed'] == 4
    assert info['profile'] == 'smoke'
    assert info['generator']['n_trajectories'] == 1
    assert info['ppo']['seed'] == 4
    assert os.path.exists(os.path.join(out, 'summary.txt'))


def test_env_rollout(tmp_path):
    out = str(tmp_path / "trace")
    assert run('env-rollout', '--steps', '5', '--stage', '2',
               '--dump', out) == 0
    assert os.path.exists(os.path.join(out, 'trace.txt'))
    assert run('env-rollout', '--steps', '5', '--bottle', 'nosuch',
               '--dump', out) == 1


def test_retarget(tmp_path, human):
    rng = numpy.random.default_rng(0)
    traj = rng.uniform(human.lower, human.upper, (2, human.n_dof)) * 0.3
    src = str(tmp_path / "demo.bin")
    write_array(src, traj)
    out = str(tmp_path / "robot")
    assert run('retarget', '--human-traj', src, '--robot-model', 'robot24',
               '--workers', '1', '--set', 'solver.max_iter=10',
               '--out', out) == 0
    q = read_array(os.path.join(out, 'demo_robot.bin'))
    assert q.shape == (2, 24)
    assert load_yaml(os.path.join(out, 'config.yaml'))['robot_model'] == \
        'robot24'


def test_retarget_to_file(tmp_path, human):
    rng = numpy.random.default_rng(1)
    traj = rng.uniform(human.lower, human.upper, (3, human.n_dof)) * 0.3
    src = str(tmp_path / "demo.bin")
    write_array(src, traj)
    dst = str(tmp_path / "demo_robot24.bin")
    assert run('retarget', '--human-traj', src, '--robot-model', 'robot24',
               '--workers', '1', '--set', 'solver.max_iter=10',
               '--out', dst) == 0
    assert read_array(dst).shape == (3, 24)
    assert os.path.exists(str(tmp_path / "config.yaml"))
    # one output file cannot hold two trajectories
    assert run('retarget', '--human-traj', src, src, '--workers', '1',
               '--out', dst) == 1


def test_paper_profile_is_accepted():
    args = cli.build_parser().parse_args(
        ['train', '--profile', 'paper', '--ablation', 'Base', '--out', 'x'])
    assert args.profile == 'paper'
    configs, plain = cli._resolve(args)
    assert configs['ppo'].n_envs == 400
    assert plain['profile'] == 'paper'


def fake_run(path, name, rates):
    os.makedirs(path)
    cli.write_run_info(path, {}, 0, ablation=name)
    rows = [EvalRow('b%d' % i, 'seen' if i < 2 else 'unseen', int(10 * r),
                    10, r, 0.0, 1.0) for i, r in enumerate(rates)]
    EvaluationTable(rows).dump(os.path.join(path, 'eval.yaml'))
    write_log(os.path.join(path, 'train_log.txt'),
              [{'iteration': i, 'stage': 1, 'total': float(i),
                'success_rate': 0.1 * i} for i in range(3)])


def test_report(tmp_path):
    fake_run(str(tmp_path / "runs" / "a"), 'VTAO', [1.0, 0.5, 0.3])
    fake_run(str(tmp_path / "runs" / "b"), 'v7', [0.0, 0.0, 0.1])
    out = str(tmp_path / "report")
    assert run('report', '--runs', str(tmp_path / "runs" / "*"),
               '--out', out) == 0
    with open(os.path.join(out, 'comparison.txt'), encoding='utf8') as f:
        lines = [l for l in f if not l.startswith('#')]
    assert lines[0].split(' | ')[0].strip() == 'Methods'
    first = [c.strip() for c in lines[1].split(' | ')]
    assert first[0] == 'VTAO'
    assert first[-2:] == [u'75±25', u'30±0']
    second = [c.strip() for c in lines[2].split(' | ')]
    assert second[0] == 'v7' and second[4] == '1 x 2'
    assert os.path.exists(os.path.join(out, 'curves.png'))


def test_report_plots_pretraining_loss(tmp_path, monkeypatch):
    fake_run(str(tmp_path / "runs" / "a"), 'VTAO', [1.0, 0.5, 0.3])
    fake_run(str(tmp_path / "runs" / "b"), 'Base', [0.0, 0.0, 0.0])
    history = [{'step': s, 'epoch': 0, 'total': 1.0 / (s + 1), 'image': 0.1,
                'tactile': 0.2, 'object': 0.3, 'action': 0.4}
               for s in range(4)]
    write_history(str(tmp_path / "runs" / "a" / "pretrain_history.txt"),
                  history)
    name, _, _, back = cli.load_run(str(tmp_path / "runs" / "a"))
    assert name == 'VTAO'
    assert numpy.allclose([r['total'] for r in back],
                          [r['total'] for r in history])
    assert cli.load_run(str(tmp_path / "runs" / "b"))[3] == []
    panels = []
    monkeypatch.setattr(Plot, 'save',
                        lambda self, f: panels.append(
                            [ax.get_ylabel() for ax in self.axes]))
    cli.report([str(tmp_path / "runs" / "a"), str(tmp_path / "runs" / "b")],
               str(tmp_path / "report"))
    assert panels == [['total', 'success_rate', 'pretrain loss']]


def test_train_and_eval_base(tmp_path):
    run_dir = str(tmp_path / "base")
    common = ['--profile', 'smoke', '--set', 'ppo.stage1_iterations=1',
              '--set', 'ppo.stage2_iterations=1', '--set', 'env.horizon=5']
    assert run('train', '--ablation', 'Base', '--out', run_dir,
               *common) == 0
    policy = os.path.join(run_dir, 'policy.pt')
    assert os.path.exists(policy)
    assert run('eval', '--policy', policy, '--bottles', 'unseen',
               '--out', run_dir, *common) == 0
    table = EvaluationTable.load(os.path.join(run_dir, 'eval.yaml'))
    assert len(table.rows) == 5
    assert all(r.split == 'unseen' for r in table.rows)
    # an encoder baseline without --encoder is a stage failure
    assert run('train', '--ablation', 'VTAO', '--out', run_dir,
               *common) == 1


if __name__ == "__main__":
    pytest.main()
