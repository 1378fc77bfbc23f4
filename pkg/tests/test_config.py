import numpy
import pytest

from vtaobimanip import config
from vtaobimanip.errors import ConfigError


def test_profiles_resolve():
    for name in config.PROFILES:
        configs, plain = config.resolve_config(name)
        assert sorted(configs) == sorted(config.SECTIONS)
        assert plain['profile'] == name


def test_smoke_profile_values():
    configs, _ = config.resolve_config('smoke')
    assert configs['model'].image_size == 32
    assert configs['env'].image_size == 32
    assert configs['generator'].image_size == 32
    assert configs['ppo'].n_envs == 2


def test_paper_profile_values():
    configs, plain = config.resolve_config('paper')
    assert configs['ppo'].n_envs == 400
    assert configs['ppo'].stage1_iterations + \
        configs['ppo'].stage2_iterations == 4500
    assert configs['pretrain'].batch_size == 8
    assert configs['pretrain'].epochs == 300
    assert numpy.isclose(configs['pretrain'].lr, 2e-5)
    assert plain['profile'] == 'paper'


def test_layering(tmp_path):
    fname = str(tmp_path / "run.yaml")
    config.dump_yaml({'ppo': {'n_envs': 5, 'gamma': 0.9}}, fname)
    configs, _ = config.resolve_config('smoke', fname,
                                       {'ppo': {'n_envs': 7}})
    # file over profile, overrides over file
    assert configs['ppo'].gamma == 0.9
    assert configs['ppo'].n_envs == 7
    assert configs['ppo'].rollout_length == 8


def test_roundtrip(tmp_path):
    configs, plain = config.resolve_config('smoke')
    fname = str(tmp_path / "config.yaml")
    config.dump_yaml(plain, fname)
    back = config.configs_from_plain(config.load_yaml(fname))
    assert back == configs
    assert config.config_digest(back['model']) == \
        config.config_digest(configs['model'])


def test_unknown_key():
    with pytest.raises(ConfigError):
        config.resolve_config('desk', overrides={'ppo': {'gama': 0.9}})


def test_unknown_section():
    with pytest.raises(ConfigError):
        config.resolve_config('desk', overrides={'optimizer': {}})


def test_unknown_profile():
    with pytest.raises(ConfigError):
        config.resolve_config('huge')


def test_invalid_value():
    with pytest.raises(ConfigError):
        config.resolve_config('desk', overrides={'model': {'embed_dim': 30}})


def test_top_level_must_be_mapping(tmp_path):
    fname = str(tmp_path / "bad.yaml")
    with open(fname, 'w') as f:
        f.write("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        config.load_yaml(fname)


if __name__ == "__main__":
    pytest.main()
