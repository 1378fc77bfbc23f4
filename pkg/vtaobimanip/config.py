"""
Run configuration
=================

Every stage of the pipeline is configured by a dataclass living next to
the code it configures:

=========== ==================================================
section     dataclass
=========== ==================================================
generator   :class:`vtaobimanip.dataset.GeneratorConfig`
solver      :class:`vtaobimanip.retargeting.SolverConfig`
model       :class:`vtaobimanip.model.ModelConfig`
pretrain    :class:`vtaobimanip.pretrain.PretrainConfig`
env         :class:`vtaobimanip.environment.EnvConfig`
ppo         :class:`vtaobimanip.rl.PPOConfig`
=========== ==================================================

Values are layered: dataclass defaults < profile < YAML file < overrides.
:func:`resolve_config` returns the fully materialized mapping that every
run directory stores as ``config.yaml``.

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

import copy
import hashlib
import logging
from dataclasses import asdict, fields, is_dataclass

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

SECTIONS = ('generator', 'solver', 'model', 'pretrain', 'env', 'ppo')

PROFILES = {
    # minutes on a laptop, used by the ablation smoke test
    'smoke': {
        'generator': {'n_trajectories': 2, 'frames_per_trajectory': 12,
                      'p': 5, 'image_size': 32},
        'model': {'image_size': 32, 'patch_size': 8, 'embed_dim': 32,
                  'depth': 1, 'num_heads': 2, 'decoder_dim': 32,
                  'decoder_depth': 1, 'decoder_heads': 2},
        'pretrain': {'epochs': 1, 'batch_size': 4},
        'env': {'image_size': 32, 'horizon': 30},
        'ppo': {'n_envs': 2, 'rollout_length': 8, 'stage1_iterations': 3,
                'stage2_iterations': 2, 'hidden': 32, 'eval_repeats': 1,
                'minibatches': 1, 'epochs': 1},
    },
    'desk': {},
    'paper': {
        'generator': {'n_trajectories': 216, 'frames_per_trajectory': 300},
        'pretrain': {'epochs': 300, 'batch_size': 8, 'lr': 2e-5},
        'ppo': {'n_envs': 400, 'stage1_iterations': 2250,
                'stage2_iterations': 2250, 'eval_repeats': 10},
    },
}


def as_plain(obj):
    """ dataclasses, tuples and numpy scalars as plain YAML-safe data """
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return dict((str(k), as_plain(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [as_plain(v) for v in obj]
    if hasattr(obj, 'item') and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


def config_digest(obj):
    """ sha256 of the canonical YAML dump of a config """
    text = yaml.safe_dump(as_plain(obj), sort_keys=True)
    return hashlib.sha256(text.encode('utf8')).hexdigest()


def dump_yaml(data, filename):
    with open(filename, 'w') as f:
        yaml.safe_dump(as_plain(data), f, sort_keys=True)


def load_yaml(filename):
    with open(filename) as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("%s: top level must be a mapping" % filename)
    return data


def section_classes():
    """ section name -> config dataclass """
    from .dataset import GeneratorConfig
    from .retargeting import SolverConfig
    from .model import ModelConfig
    from .pretrain import PretrainConfig
    from .environment import EnvConfig
    from .rl import PPOConfig
    return {'generator': GeneratorConfig, 'solver': SolverConfig,
            'model': ModelConfig, 'pretrain': PretrainConfig,
            'env': EnvConfig, 'ppo': PPOConfig}


def build(cls, values, section=''):
    """ instantiate config dataclass ``cls`` from a mapping

    Raises
    ------
    ConfigError
        on unknown keys or when the instance fails its own validation
    """
    names = set(f.name for f in fields(cls))
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError("unknown %s keys: %s"
                          % (section or cls.__name__, ", ".join(unknown)))
    kwargs = {}
    for f in fields(cls):
        if f.name in values:
            v = values[f.name]
            kwargs[f.name] = tuple(v) if isinstance(v, list) else v
    try:
        obj = cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError("%s: %s" % (section or cls.__name__, e))
    if hasattr(obj, 'validate'):
        obj.validate()
    return obj


def _merge(base, update, where):
    for section, values in (update or {}).items():
        if section not in SECTIONS:
            raise ConfigError("unknown config section '%s' in %s"
                              % (section, where))
        if not isinstance(values, dict):
            raise ConfigError("section '%s' in %s must be a mapping"
                              % (section, where))
        base.setdefault(section, {}).update(values)
    return base


def resolve_config(profile='desk', filename=None, overrides=None):
    """ Fully materialized configuration

    Parameters
    ----------
    profile: {'smoke', 'desk', 'paper'}
    filename: str, optional
        YAML file with one mapping per section
    overrides: dict, optional
        section -> {key: value}, applied last

    Returns
    -------
    (configs, plain): (dict of dataclass instances, dict of plain data)
    """
    if profile not in PROFILES:
        raise ConfigError("unknown profile '%s', choose from %s"
                          % (profile, ", ".join(sorted(PROFILES))))
    layered = _merge({}, copy.deepcopy(PROFILES[profile]),
                     "profile '%s'" % profile)
    if filename is not None:
        layered = _merge(layered, load_yaml(filename), filename)
    layered = _merge(layered, overrides, "overrides")
    classes = section_classes()
    configs = dict((name, build(classes[name], layered.get(name, {}), name))
                   for name in SECTIONS)
    plain = dict((name, as_plain(cfg)) for name, cfg in configs.items())
    plain['profile'] = profile
    logger.debug("resolved configuration %s", config_digest(plain)[:12])
    return configs, plain


def configs_from_plain(plain):
    """ inverse of the plain mapping written by :func:`resolve_config` """
    classes = section_classes()
    return dict((name, build(classes[name], plain.get(name, {}), name))
                for name in SECTIONS)
