"""
Command line interface
======================

::

    vtaobimanip gen-data    --out DIR
    vtaobimanip retarget    --human-traj FILE [FILE ...] [--robot-model SPEC]
                            --out DIR|FILE.bin
    vtaobimanip pretrain    --data DIR --ablation NAME --out DIR
    vtaobimanip train       [--encoder CKPT] --ablation NAME --out DIR
    vtaobimanip eval        --policy CKPT [--bottles seen|unseen|all] --out DIR
    vtaobimanip ablate      --names VT,VTA,VTAO [--jobs K] --out DIR
    vtaobimanip report      --runs DIR [DIR ...] --out DIR
    vtaobimanip env-rollout [--policy random|zero] [--steps N] --dump DIR

Every subcommand accepts ``--profile``, ``--config``, ``--set
section.key=value``, ``--seed`` and ``--log-level``. Every run directory
receives ``config.yaml`` holding the fully resolved configuration and the
seed.

Exit status is 0 on success, 2 on usage errors and 1 when a stage fails.
"""

import argparse
import glob
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import yaml

from . import ci
from . import environment as env
from .config import (PROFILES, SECTIONS, configs_from_plain, dump_yaml,
                     load_yaml, resolve_config)
from .errors import VTAOError
from .model import BASELINES, ablation_table, configure_ablation, \
    uses_encoder

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _parse_set(items):
    """ ['ppo.lr=1e-4', ...] -> {'ppo': {'lr': 1e-4}} """
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition('=')
        section, dot, name = key.partition('.')
        if not sep or not dot or section not in SECTIONS:
            raise argparse.ArgumentTypeError(
                "--set expects section.key=value with section in %s, got "
                "'%s'" % (", ".join(SECTIONS), item))
        overrides.setdefault(section, {})[name] = yaml.safe_load(value)
    return overrides


def _resolve(args):
    """ resolved configs with the run seed written into every seeded
    section """
    overrides = _parse_set(args.set)
    for section in ('pretrain', 'ppo'):
        overrides.setdefault(section, {})['seed'] = args.seed
    return resolve_config(args.profile, args.config, overrides)


def write_run_info(out, plain, seed, **extra):
    """ write ``config.yaml`` into run directory ``out`` """
    os.makedirs(out, exist_ok=True)
    info = dict(plain)
    info['seed'] = int(seed)
    info.update(extra)
    dump_yaml(info, os.path.join(out, 'config.yaml'))
    return info


def _bottles(seed, which='all'):
    seen, unseen = env.make_bottle_sets(seed)
    if which == 'seen':
        return seen, []
    if which == 'unseen':
        return [], unseen
    return seen, unseen


########################################################################
# Stages

def gen_data(configs, seed, out):
    from .dataset import generate_synthetic_dataset
    ds = generate_synthetic_dataset(configs['generator'], seed, out)
    ds.write_summary(os.path.join(out, 'summary.txt'), {'seed': seed})
    return ds


def run_pretrain(configs, name, dataset, out):
    """ pretrain baseline ``name``, returns the trained model """
    from .pretrain import pretrain, write_history
    mcfg = configure_ablation(name, configs['model'])
    result = pretrain(dataset, mcfg, configs['pretrain'],
                      os.path.join(out, 'encoder.pt'))
    if result.history:
        write_history(os.path.join(out, 'pretrain_history.txt'),
                      result.history, {'ablation': name})
    return result.model


def run_train(configs, name, encoder, seed, out):
    """ curriculum RL over the frozen encoder, returns the TrainResult """
    from .rl import Featurizer, train_curriculum
    seen, _ = _bottles(seed, 'seen')
    return train_curriculum(Featurizer(encoder), seen, configs['ppo'],
                            configs['env'], out,
                            {'ablation': name, 'seed': seed})


def run_eval(configs, policy, seed, out, which='all'):
    from .rl import evaluate
    seen, unseen = _bottles(seed, which)
    table = evaluate(policy, seen, unseen, configs['ppo'].eval_repeats, seed,
                     configs['env'])
    table.write(os.path.join(out, 'eval.txt'), {'seed': seed})
    table.dump(os.path.join(out, 'eval.yaml'))
    return table


def run_baseline(name, plain, seed, data_dir, out):
    """ pretrain, train and evaluate one baseline in its own directory

    Module level so that it can run in a worker process.
    """
    from .dataset import load_dataset
    configs = configs_from_plain(plain)
    write_run_info(out, plain, seed, ablation=name, data=data_dir)
    encoder = None
    if uses_encoder(name):
        encoder = run_pretrain(configs, name, load_dataset(data_dir), out)
    result = run_train(configs, name, encoder, seed, out)
    run_eval(configs, result.policy, seed, out)
    logger.info("baseline %s done in %s", name, out)
    return out


########################################################################
# Report

def load_run(run_dir):
    """ (ablation name, evaluation table, training log, pretraining
    history) of a run directory, missing logs read as empty lists
    """
    from .pretrain import read_history
    from .rl import EvaluationTable, read_log
    info = load_yaml(os.path.join(run_dir, 'config.yaml'))
    name = info.get('ablation', os.path.basename(os.path.normpath(run_dir)))
    table = EvaluationTable.load(os.path.join(run_dir, 'eval.yaml'))
    log_file = os.path.join(run_dir, 'train_log.txt')
    log = read_log(log_file) if os.path.exists(log_file) else []
    hist_file = os.path.join(run_dir, 'pretrain_history.txt')
    history = read_history(hist_file) if os.path.exists(hist_file) else []
    return name, table, log, history


def comparison_rows(runs):
    """ rows Methods, Tac, Act, PredictAct, ActToken, Obj, Seen, Unseen """
    columns = dict((r[0], r[1:]) for r in ablation_table())
    rows = []
    for name, table, _, _ in runs:
        seen = ci.format_mean_std([r.rate for r in table.split('seen')])
        unseen = ci.format_mean_std([r.rate for r in table.split('unseen')])
        rows.append((name,) + tuple(columns.get(name, ('?',) * 5)) +
                    (seen, unseen))
    return rows


COMPARISON_HEADER = ('Methods', 'Tac', 'Act', 'PredictAct', 'ActToken',
                     'Obj', 'Seen', 'Unseen')


def write_comparison(filename, rows, header_params={}):
    """ Output the comparison table as '|' separated text """
    from . import __version__
    widths = [max(len(str(x)) for x in col)
              for col in zip(COMPARISON_HEADER, *rows)]
    with open(filename, 'w', encoding='utf8') as fp:
        fp.write("# Generated by vtaobimanip {}\n".format(__version__))
        for key, val in header_params.items():
            fp.write("# {}: {}\n".format(key, val))
        for row in (COMPARISON_HEADER,) + tuple(rows):
            fp.write(" | ".join(str(x).ljust(w) for x, w in zip(row, widths))
                     .rstrip() + "\n")


def report(run_dirs, out):
    """ comparison.txt and curves.png from finished run directories """
    from .plot import Plot
    os.makedirs(out, exist_ok=True)
    runs = [load_run(d) for d in run_dirs]
    rows = comparison_rows(runs)
    write_comparison(os.path.join(out, 'comparison.txt'), rows,
                     {'runs': len(runs)})
    curves = dict((name, log) for name, _, log, _ in runs if log)
    losses = dict((name, hist) for name, _, _, hist in runs if hist)
    p = Plot(no_display=True, n_panels=3 if losses else 2)
    p.plot_curves(curves, keys=('total', 'success_rate'))
    if losses:
        p.plot_curves(losses, keys=('total',), x_key='step', first_panel=2)
        p.axes[2].set_ylabel('pretrain loss')
    p.save(os.path.join(out, 'curves.png'))
    logger.info("report over %d runs written to %s", len(runs), out)
    return rows


########################################################################
# Commands

def cmd_gen_data(args):
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='gen-data')
    gen_data(configs, args.seed, args.out)


def cmd_retarget(args):
    from .dataset import read_array, write_array
    from .kinematics import load_hand_model
    from .retargeting import retarget_batch
    configs, plain = _resolve(args)
    # a single trajectory may be written straight to a .bin file
    to_file = args.out.endswith('.bin')
    if to_file and len(args.human_traj) != 1:
        raise VTAOError("--out %s names one file but %d trajectories were "
                        "given" % (args.out, len(args.human_traj)))
    out_dir = os.path.dirname(os.path.abspath(args.out)) if to_file \
        else args.out
    write_run_info(out_dir, plain, args.seed, command='retarget',
                   robot_model=args.robot_model)
    robot = load_hand_model(args.robot_model)
    human = load_hand_model(args.human_model)
    trajs = [read_array(f) for f in args.human_traj]
    solved = retarget_batch(robot, human, trajs, args.workers,
                            configs['solver'])
    if to_file:
        write_array(args.out, solved[0])
        return
    for f, q in zip(args.human_traj, solved):
        name = os.path.splitext(os.path.basename(f))[0]
        write_array(os.path.join(out_dir, name + '_robot.bin'), q)


def cmd_pretrain(args):
    from .dataset import load_dataset
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='pretrain',
                   ablation=args.ablation, data=args.data)
    run_pretrain(configs, args.ablation, load_dataset(args.data), args.out)


def cmd_train(args):
    from .pretrain import load_checkpoint
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='train',
                   ablation=args.ablation, encoder=args.encoder)
    encoder = None
    if uses_encoder(args.ablation):
        if args.encoder is None:
            raise VTAOError("baseline %s needs --encoder" % args.ablation)
        encoder, _ = load_checkpoint(args.encoder)
    run_train(configs, args.ablation, encoder, args.seed, args.out)


def cmd_eval(args):
    from .rl import load_policy
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='eval',
                   policy=args.policy)
    run_eval(configs, load_policy(args.policy), args.seed, args.out,
             args.bottles)


def cmd_ablate(args):
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='ablate',
                   names=args.names)
    data_dir = args.data
    if data_dir is None:
        data_dir = os.path.join(args.out, 'data')
        gen_data(configs, args.seed, data_dir)
    dirs = [os.path.join(args.out, name) for name in args.names]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_baseline, name, plain, args.seed,
                                   data_dir, d)
                       for name, d in zip(args.names, dirs)]
            dirs = [f.result() for f in futures]
    else:
        dirs = [run_baseline(name, plain, args.seed, data_dir, d)
                for name, d in zip(args.names, dirs)]
    report(dirs, args.out)


def cmd_report(args):
    dirs = []
    for pattern in args.runs:
        dirs.extend(sorted(glob.glob(pattern)) or [pattern])
    report(dirs, args.out)


def cmd_env_rollout(args):
    configs, plain = _resolve(args)
    write_run_info(args.out, plain, args.seed, command='env-rollout')
    bottle = env.EASY_BOTTLE
    if args.bottle != 'easy':
        seen, unseen = env.make_bottle_sets(args.seed)
        named = dict((b.name, b) for b in seen + unseen)
        if args.bottle not in named:
            raise VTAOError("unknown bottle '%s', choose easy or one of %s"
                            % (args.bottle, ", ".join(sorted(named))))
        bottle = named[args.bottle]
    env.env_rollout(bottle, args.stage, args.steps, args.policy, args.out,
                    args.seed, configs['env'])


def _names(text):
    names = [n.strip() for n in text.split(',') if n.strip()]
    unknown = [n for n in names if n not in BASELINES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            "unknown baseline(s) %s, choose from %s"
            % (", ".join(unknown) or "''", ", ".join(BASELINES)))
    return names


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--profile', default='desk', choices=sorted(PROFILES))
    common.add_argument('--config', default=None,
                        help="YAML file with one mapping per section")
    common.add_argument('--set', action='append', metavar='SECTION.KEY=VAL',
                        help="override one config value, repeatable")
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--log-level', default='INFO',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument('--out', required=True, help="run directory")

    parser = argparse.ArgumentParser(
        prog='vtaobimanip',
        description="VTAO pretraining and curriculum RL for bimanual cap "
                    "unscrewing")
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('gen-data', parents=[common, out],
                       help="generate a synthetic VTAO dataset")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser('retarget', parents=[common, out],
                       help="retarget human joint trajectories")
    p.add_argument('--human-traj', '--human', dest='human_traj', nargs='+',
                   required=True, help="(T, n_dof) human array files")
    p.add_argument('--robot-model', '--robot', dest='robot_model',
                   default='robot24',
                   help="built-in hand name or YAML hand spec")
    p.add_argument('--human-model', default='human21')
    p.add_argument('--workers', type=int, default=4)
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser('pretrain', parents=[common, out],
                       help="pretrain a VTAO encoder")
    p.add_argument('--data', required=True, help="dataset directory")
    p.add_argument('--ablation', default='VTAO', choices=BASELINES)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser('train', parents=[common, out],
                       help="curriculum PPO over a frozen encoder")
    p.add_argument('--encoder', default=None, help="encoder checkpoint")
    p.add_argument('--ablation', default='VTAO', choices=BASELINES)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('eval', parents=[common, out],
                       help="evaluate a policy checkpoint")
    p.add_argument('--policy', required=True, help="policy checkpoint")
    p.add_argument('--bottles', default='all',
                   choices=('seen', 'unseen', 'all'))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('ablate', parents=[common, out],
                       help="pretrain, train and evaluate baselines")
    p.add_argument('--names', type=_names, required=True,
                   help="comma separated baseline names")
    p.add_argument('--data', default=None,
                   help="dataset directory, generated when omitted")
    p.add_argument('--jobs', type=int, default=1)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser('report', parents=[common, out],
                       help="comparison table and curves of finished runs")
    p.add_argument('--runs', nargs='+', required=True,
                   help="run directories or glob patterns")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser('env-rollout', parents=[common],
                       help="dump a per-step environment trace")
    p.add_argument('--dump', '--out', dest='out', required=True)
    p.add_argument('--policy', default='random', choices=('random', 'zero'))
    p.add_argument('--steps', type=int, default=100)
    p.add_argument('--stage', type=int, default=1, choices=(1, 2))
    p.add_argument('--bottle', default='easy')
    p.set_defaults(func=cmd_env_rollout)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format=LOG_FORMAT)
    try:
        args.func(args)
    except argparse.ArgumentTypeError as e:
        logger.error("%s", e)
        return 2
    except (VTAOError, ValueError, RuntimeError, IOError) as e:
        logger.error("%s failed: %s", args.command, e)
        diagnostics = getattr(e, 'diagnostics', None)
        if diagnostics:
            logger.error("diagnostics: %s", diagnostics)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
