"""
Curriculum PPO
==============

PPO over frozen VTAO features. At every step the policy input is the CLS
latent of the frozen encoder (nothing masked) concatenated with a learned
linear map of the 109 proprioceptive values::

    x = [h_cls, phi(P)],   a ~ N(mu(x), exp(log_std))

Training runs two curriculum stages with the same policy: stage 1 with
the bottle fixed to the table, stage 2 with the bottle free. The encoder
parameter digest is checked before and after training.

Evaluation runs the deterministic mean action in stage-2 environments and
reports per-bottle success rates with Clopper-Pearson intervals and
mean +- std over the seen and unseen bottle sets.

Version history
---------------

**2024.10**
- GAE, clipped surrogate and clipped value loss
- two-stage curriculum with an optional success-rate trigger
- evaluation tables
"""

import logging
import os
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
from torch.distributions import Normal
from tqdm import tqdm

from . import ci
from . import environment as env
from .config import as_plain, build, dump_yaml, load_yaml
from .errors import ConfigError, IntegrityError, TrainingError
from .model import ModelConfig, VTAOModel
from .pretrain import parameter_digest
from .realtime import RunningMean

logger = logging.getLogger(__name__)

POLICY_KIND = 'vtao-policy'


@dataclass
class PPOConfig:
    """ PPO, network and curriculum settings """
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 5
    minibatches: int = 4
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    lr: float = 3e-4
    max_grad_norm: float = 1.0
    n_envs: int = 16
    rollout_length: int = 64
    stage1_iterations: int = 150
    stage2_iterations: int = 150
    success_trigger: float = 0.0    # 0: switch at the iteration budget
    phi_dim: int = 128
    hidden: int = 256
    init_log_std: float = -0.5
    checkpoint_every: int = 50
    eval_repeats: int = 10
    env_workers: int = 1
    seed: int = 0
    progress: bool = True

    def validate(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1], got %g" % self.gamma)
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lam must lie in [0, 1]")
        if self.clip <= 0:
            raise ConfigError("clip must be positive")
        if min(self.epochs, self.minibatches, self.n_envs,
               self.rollout_length, self.eval_repeats) < 1:
            raise ConfigError("epochs, minibatches, n_envs, rollout_length "
                              "and eval_repeats must be positive")
        if self.stage1_iterations < 0 or self.stage2_iterations < 0:
            raise ConfigError("iteration budgets must be >= 0")
        return self


PolicyInput = namedtuple('PolicyInput', ['h_cls', 'phi_p', 'proprio'])


########################################################################
# Networks

class Featurizer(object):
    """ Frozen VTAO encoder producing h_cls, or nothing for the
    proprioception-only baseline

    The encoder runs in eval mode under ``torch.no_grad`` with nothing
    masked; its parameters never require gradients.
    """
    def __init__(self, encoder=None):
        self.encoder = encoder
        if encoder is not None:
            encoder.eval()
            for p in encoder.parameters():
                p.requires_grad_(False)

    @property
    def dim(self):
        return 0 if self.encoder is None else self.encoder.config.embed_dim

    @property
    def uses_pixels(self):
        return self.encoder is not None and self.encoder.config.use_v

    @property
    def image_size(self):
        return None if self.encoder is None else \
            self.encoder.config.image_size

    def digest(self):
        return None if self.encoder is None else \
            parameter_digest(self.encoder)

    def __call__(self, obs):
        """ (N, dim) float32 tensor of h_cls """
        proprio = np.atleast_2d(obs.proprio)
        n = proprio.shape[0]
        if self.encoder is None:
            return torch.zeros(n, 0)
        cfg = self.encoder.config
        dtype = self.encoder.dtype
        batch = {'action': torch.as_tensor(proprio[:, :env.N_JOINTS * 2],
                                           dtype=dtype)}
        if cfg.use_t:
            batch['tactile'] = torch.as_tensor(
                np.atleast_2d(obs.tactile), dtype=dtype)
        if cfg.use_v:
            img = np.asarray(obs.image)
            batch['image'] = torch.as_tensor(
                img if img.ndim == 4 else img[None], dtype=dtype)
        with torch.no_grad():
            return self.encoder.encode_cls(batch).float()


def _mlp(n_in, hidden, n_out):
    return nn.Sequential(nn.Linear(n_in, hidden), nn.Tanh(),
                         nn.Linear(hidden, hidden), nn.Tanh(),
                         nn.Linear(hidden, n_out))


class ActorCritic(nn.Module):
    """ Gaussian policy and value function over [h_cls, phi(P)]

    phi is a single linear layer 109 -> phi_dim; actor and critic are two
    hidden tanh layers each; the log standard deviation is a learned
    state-independent vector.
    """
    def __init__(self, feature_dim, proprio_dim=env.PROPRIO_DIM,
                 action_dim=env.ACTION_DIM, phi_dim=128, hidden=256,
                 init_log_std=-0.5):
        super(ActorCritic, self).__init__()
        self.dims = dict(feature_dim=feature_dim, proprio_dim=proprio_dim,
                         action_dim=action_dim, phi_dim=phi_dim,
                         hidden=hidden, init_log_std=init_log_std)
        self.phi = nn.Linear(proprio_dim, phi_dim)
        self.actor = _mlp(feature_dim + phi_dim, hidden, action_dim)
        self.critic = _mlp(feature_dim + phi_dim, hidden, 1)
        self.log_std = nn.Parameter(torch.full((action_dim,),
                                               float(init_log_std)))
        nn.init.uniform_(self.actor[-1].weight, -1e-3, 1e-3)
        nn.init.zeros_(self.actor[-1].bias)

    def policy_input(self, h_cls, proprio):
        phi_p = self.phi(proprio)
        return PolicyInput(h_cls, phi_p, proprio)

    def forward(self, h_cls, proprio):
        """ (action mean, value) """
        x = torch.cat([h_cls, self.phi(proprio)], dim=-1)
        return self.actor(x), self.critic(x)[..., 0]

    def distribution(self, h_cls, proprio):
        mean, value = self(h_cls, proprio)
        return Normal(mean, self.log_std.exp().expand_as(mean)), value


class PPOPolicy(object):
    """ featurizer plus actor-critic behind an ``act(obs)`` interface """
    def __init__(self, featurizer, net):
        self.featurizer = featurizer
        self.net = net

    @property
    def uses_pixels(self):
        return self.featurizer.uses_pixels

    def _inputs(self, obs):
        h = self.featurizer(obs)
        p = torch.as_tensor(np.atleast_2d(obs.proprio), dtype=torch.float32)
        return h, p

    def act(self, obs):
        """ deterministic (mean) action, (N, 46) """
        h, p = self._inputs(obs)
        with torch.no_grad():
            mean, _ = self.net(h, p)
        return mean.numpy()

    def sample(self, obs, generator=None):
        """ stochastic action with its log-probability and value """
        h, p = self._inputs(obs)
        with torch.no_grad():
            dist, value = self.net.distribution(h, p)
            noise = torch.randn(dist.mean.shape, generator=generator)
            a = dist.mean + dist.stddev * noise
            logp = dist.log_prob(a).sum(-1)
        return h, p, a, logp, value


def featurize(policy, obs):
    """ PolicyInput of an observation (h_cls, phi(P), P) """
    h, p = policy._inputs(obs)
    with torch.no_grad():
        return policy.net.policy_input(h, p)


########################################################################
# PPO

@dataclass
class RolloutBatch:
    """ one rollout of T steps from N environments, arrays (T, N, ...) """
    features: torch.Tensor
    proprio: torch.Tensor
    actions: torch.Tensor
    log_probs: torch.Tensor
    values: torch.Tensor
    rewards: torch.Tensor
    dones: torch.Tensor
    advantages: torch.Tensor = None
    returns: torch.Tensor = None

    def flat(self, name):
        x = getattr(self, name)
        return x.flatten(0, 1)


def compute_gae(rewards, values, dones, last_value, gamma=0.99, lam=0.95):
    """ Generalized advantage estimation

    Parameters
    ----------
    rewards, values, dones: array, (T, N)
        ``dones[t]`` marks an episode that ended with step t
    last_value: array, (N,)
        value of the observation after the last step

    Returns
    -------
    (advantages, returns): arrays (T, N), returns = advantages + values
    """
    rewards = torch.as_tensor(rewards, dtype=torch.float64)
    values = torch.as_tensor(values, dtype=torch.float64)
    dones = torch.as_tensor(dones, dtype=torch.float64)
    last_value = torch.as_tensor(last_value, dtype=torch.float64)
    T = rewards.shape[0]
    adv = torch.zeros_like(rewards)
    running = torch.zeros_like(last_value)
    for t in reversed(range(T)):
        next_value = last_value if t == T - 1 else values[t + 1]
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
    return adv, adv + values


def clipped_surrogate(ratio, advantage, clip=0.2):
    """ min(r*A, clip(r, 1-eps, 1+eps)*A), per sample """
    clipped = torch.clamp(ratio, 1.0 - clip, 1.0 + clip)
    return torch.min(ratio * advantage, clipped * advantage)


def ppo_update(net, optimizer, batch, config, generator=None):
    """ Clipped-surrogate policy and clipped value update

    Advantages are normalized over the batch. Returns mean statistics
    (policy_loss, value_loss, entropy, approx_kl, clip_frac).

    Raises
    ------
    TrainingError
        non-finite loss or gradients
    """
    feats = batch.flat('features')
    prop = batch.flat('proprio')
    acts = batch.flat('actions')
    old_logp = batch.flat('log_probs')
    old_v = batch.flat('values')
    adv = batch.flat('advantages').float()
    ret = batch.flat('returns').float()
    if adv.numel() > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    n = adv.shape[0]
    mb = max(n // config.minibatches, 1)
    stats = RunningMean()
    for epoch in range(config.epochs):
        perm = torch.randperm(n, generator=generator)
        for start in range(0, n, mb):
            idx = perm[start:start + mb]
            dist, v = net.distribution(feats[idx], prop[idx])
            logp = dist.log_prob(acts[idx]).sum(-1)
            ratio = torch.exp(logp - old_logp[idx])
            pg_loss = -clipped_surrogate(ratio, adv[idx], config.clip).mean()
            v_clip = old_v[idx] + torch.clamp(v - old_v[idx], -config.clip,
                                              config.clip)
            v_loss = 0.5 * torch.max((v - ret[idx]) ** 2,
                                     (v_clip - ret[idx]) ** 2).mean()
            entropy = dist.entropy().sum(-1).mean()
            loss = pg_loss + config.value_coef * v_loss - \
                config.entropy_coef * entropy
            if not torch.isfinite(loss):
                raise TrainingError("non-finite PPO loss",
                                    {'policy_loss': float(pg_loss),
                                     'value_loss': float(v_loss),
                                     'epoch': epoch})
            optimizer.zero_grad()
            loss.backward()
            gnorm = nn.utils.clip_grad_norm_(
                net.parameters(),
                config.max_grad_norm if config.max_grad_norm > 0
                else float('inf'))
            if not torch.isfinite(gnorm):
                raise TrainingError("non-finite PPO gradients",
                                    {'loss': float(loss), 'epoch': epoch})
            optimizer.step()
            with torch.no_grad():
                log_ratio = logp - old_logp[idx]
                kl = ((ratio - 1.0) - log_ratio).mean()
                frac = ((ratio - 1.0).abs() > config.clip).float().mean()
            stats.add({'policy_loss': float(pg_loss),
                       'value_loss': float(v_loss),
                       'entropy': float(entropy), 'approx_kl': float(kl),
                       'clip_frac': float(frac)})
    return stats.means()


def collect_rollout(venv, policy, obs, length, generator=None):
    """ Step ``venv`` for ``length`` steps with sampled actions

    Returns
    -------
    (RolloutBatch without advantages, next observation, reward means)
    """
    keys = ('features', 'proprio', 'actions', 'log_probs', 'values',
            'rewards', 'dones')
    cols = dict((k, []) for k in keys)
    rewards = RunningMean()
    for t in range(length):
        h, p, a, logp, v = policy.sample(obs, generator)
        obs, rb, dones, infos = venv.step(a.numpy())
        cols['features'].append(h)
        cols['proprio'].append(p)
        cols['actions'].append(a)
        cols['log_probs'].append(logp)
        cols['values'].append(v)
        cols['rewards'].append(torch.tensor([r.total for r in rb],
                                            dtype=torch.float32))
        cols['dones'].append(torch.as_tensor(dones, dtype=torch.float32))
        for r in rb:
            rewards.add(r.as_dict())
    batch = RolloutBatch(**dict((k, torch.stack(v)) for k, v in cols.items()))
    return batch, obs, rewards.means()


########################################################################
# Curriculum

TrainResult = namedtuple('TrainResult', ['policy', 'log', 'checkpoint',
                                         'encoder_digest'])

LOG_KEYS = ('iteration', 'stage', 'total', 'r_left', 'r_right', 'r_hdis',
            'r_fcon', 'r_cang', 'r_cvel', 'r_fdis', 'r_htdis', 'r_bdis',
            'r_brot', 'success_rate', 'episodes', 'cap_angle',
            'policy_loss', 'value_loss', 'approx_kl', 'clip_frac')


def running_success_rate(tracker):
    """ mean of the buffered outcomes, None while no episode finished """
    return tracker.rate()


def save_policy(path, policy, extra=None):
    """ write the actor-critic and the frozen encoder into one archive """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    enc = policy.featurizer.encoder
    ckpt = {'kind': POLICY_KIND, 'net': policy.net.dims,
            'state_dict': policy.net.state_dict(),
            'encoder_config': None if enc is None else as_plain(enc.config),
            'encoder_state': None if enc is None else enc.state_dict(),
            'encoder_digest': policy.featurizer.digest()}
    ckpt.update(extra or {})
    torch.save(ckpt, path)
    return path


def load_policy(path):
    """ PPOPolicy stored by :func:`save_policy`

    Raises
    ------
    IntegrityError
        unreadable file, wrong kind, or encoder digest mismatch
    """
    try:
        ckpt = torch.load(path, map_location='cpu', weights_only=True)
    except (OSError, RuntimeError, EOFError, ValueError) as e:
        raise IntegrityError("cannot read policy %s: %s" % (path, e))
    if not isinstance(ckpt, dict) or ckpt.get('kind') != POLICY_KIND:
        raise IntegrityError("%s is not a policy checkpoint" % path)
    encoder = None
    if ckpt['encoder_config'] is not None:
        encoder = VTAOModel(build(ModelConfig, ckpt['encoder_config'],
                                  'model'))
        encoder.load_state_dict(ckpt['encoder_state'])
    feat = Featurizer(encoder)
    if feat.digest() != ckpt['encoder_digest']:
        raise IntegrityError("%s: encoder weights do not match the stored "
                             "digest" % path)
    net = ActorCritic(**ckpt['net'])
    net.load_state_dict(ckpt['state_dict'])
    return PPOPolicy(feat, net)


def write_log(filename, rows, header_params={}):
    """ Output the training log to text, one row per iteration """
    from . import __version__
    with open(filename, 'w') as fp:
        fp.write("# Generated by vtaobimanip {}\n".format(__version__))
        for key, val in header_params.items():
            fp.write("# {}: {}\n".format(key, val))
        fp.write(" ".join("{:>12s}".format(k) for k in LOG_KEYS) + "\n")
        for row in rows:
            vals = []
            for k in LOG_KEYS:
                v = row.get(k)
                if v is None:
                    vals.append("{:>12s}".format("nan"))
                elif k in ('iteration', 'stage', 'episodes'):
                    vals.append("{:12d}".format(int(v)))
                else:
                    vals.append("{:12.5e}".format(float(v)))
            fp.write(" ".join(vals) + "\n")


def read_log(filename):
    """ rows written by :func:`write_log` as a list of dicts """
    rows = []
    keys = None
    with open(filename) as fp:
        for line in fp:
            if line.startswith('#') or not line.strip():
                continue
            parts = line.split()
            if keys is None:
                keys = parts
                continue
            row = {}
            for k, v in zip(keys, parts):
                x = float(v)
                if k in ('iteration', 'stage', 'episodes'):
                    row[k] = int(x)
                else:
                    row[k] = None if np.isnan(x) else x
            rows.append(row)
    return rows


def train_curriculum(featurizer, bottles, ppo_config=None, env_config=None,
                     out_dir=None, header_params={}):
    """ Two-stage PPO curriculum

    Stage 1 runs ``stage1_iterations`` iterations with the bottle fixed
    (earlier when ``success_trigger`` > 0 and the tracker rate reaches it),
    then the same policy continues for ``stage2_iterations`` in stage 2.

    Parameters
    ----------
    featurizer: Featurizer
    bottles: list of BottleSpec
        training bottles, environment i uses bottles[i % len(bottles)]
    ppo_config: PPOConfig
    env_config: EnvConfig
    out_dir: str, optional
        receives ``policy.pt``, periodic ``policy_XXXXX.pt`` and
        ``train_log.txt``

    Returns
    -------
    TrainResult(policy, log rows, final checkpoint path, encoder digest)

    Raises
    ------
    TrainingError
        from the update, with the iteration index, or when the encoder
        weights changed
    """
    cfg = (ppo_config or PPOConfig()).validate()
    ecfg = (env_config or env.EnvConfig()).validate()
    if featurizer.uses_pixels and featurizer.image_size != ecfg.image_size:
        raise ConfigError("environment renders %d px, encoder expects %d"
                          % (ecfg.image_size, featurizer.image_size))
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    digest = featurizer.digest()
    net = ActorCritic(featurizer.dim, phi_dim=cfg.phi_dim, hidden=cfg.hidden,
                      init_log_std=cfg.init_log_std)
    policy = PPOPolicy(featurizer, net)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    log = []
    iteration = 0
    checkpoint = None
    budgets = ((1, cfg.stage1_iterations), (2, cfg.stage2_iterations))
    total = cfg.stage1_iterations + cfg.stage2_iterations
    bar = tqdm(total=total, disable=not cfg.progress, desc="ppo")
    for stage, budget in budgets:
        venv = env.VecBimanualEnv(bottles, cfg.n_envs, stage, ecfg,
                                  seed=cfg.seed + 7919 * stage,
                                  render=featurizer.uses_pixels,
                                  workers=cfg.env_workers)
        obs = venv.reset()
        logger.info("curriculum stage %d: %d envs, %d iterations", stage,
                    cfg.n_envs, budget)
        for it in range(budget):
            batch, obs, rmeans = collect_rollout(venv, policy, obs,
                                                 cfg.rollout_length, gen)
            with torch.no_grad():
                _, last_value = net(featurizer(obs),
                                    torch.as_tensor(obs.proprio,
                                                    dtype=torch.float32))
            batch.advantages, batch.returns = compute_gae(
                batch.rewards, batch.values, batch.dones, last_value,
                cfg.gamma, cfg.lam)
            try:
                stats = ppo_update(net, opt, batch, cfg, gen)
            except TrainingError as e:
                e.diagnostics.update(iteration=iteration, stage=stage)
                raise
            done = venv.pop_completed()
            row = {'iteration': iteration, 'stage': stage,
                   'success_rate': running_success_rate(venv.tracker),
                   'episodes': len(done),
                   'cap_angle': float(np.mean([d[2] for d in done]))
                   if done else None}
            row.update(rmeans)
            row.update(stats)
            log.append(row)
            logger.info("iter %d stage %d reward %.3f success %s "
                        "episodes %d", iteration, stage, row['total'],
                        row['success_rate'], row['episodes'])
            iteration += 1
            bar.update(1)
            if out_dir is not None and cfg.checkpoint_every and \
                    iteration % cfg.checkpoint_every == 0:
                save_policy(os.path.join(out_dir, 'policy_%05d.pt'
                                         % iteration), policy,
                            {'iteration': iteration, 'stage': stage})
            rate = row['success_rate']
            if stage == 1 and cfg.success_trigger > 0 and rate is not None \
                    and rate >= cfg.success_trigger:
                logger.info("success rate %.2f reached the stage trigger "
                            "after %d iterations", rate, it + 1)
                break
        venv.close()
    bar.close()
    if featurizer.digest() != digest:
        raise TrainingError("encoder parameters changed during RL",
                            {'before': digest,
                             'after': featurizer.digest()})
    if out_dir is not None:
        checkpoint = save_policy(os.path.join(out_dir, 'policy.pt'), policy,
                                 {'iteration': iteration, 'stage': 2})
        write_log(os.path.join(out_dir, 'train_log.txt'), log,
                  header_params)
    return TrainResult(policy, log, checkpoint, digest)


########################################################################
# Evaluation

EvalRow = namedtuple('EvalRow', ['name', 'split', 'successes', 'repeats',
                                 'rate', 'ci_low', 'ci_high'])


class EvaluationTable(object):
    """ per-bottle success rates plus seen/unseen aggregates """
    def __init__(self, rows=()):
        self.rows = list(rows)

    def split(self, split):
        return [r for r in self.rows if r.split == split]

    def aggregate(self, split):
        """ (mean, std) of the per-bottle rates of one split """
        return ci.mean_std([r.rate for r in self.split(split)])

    def write(self, filename, header_params={}):
        """ Output the table to text """
        from . import __version__
        with open(filename, 'w') as fp:
            fp.write("# Generated by vtaobimanip {}\n".format(__version__))
            for key, val in header_params.items():
                fp.write("# {}: {}\n".format(key, val))
            for split in ('seen', 'unseen'):
                m, s = self.aggregate(split)
                fp.write("# {}: {:.4f} +- {:.4f}\n".format(split, m, s))
            fp.write("{:>12s} {:>7s} {:>9s} {:>7s} {:>7s} {:>7s} {:>7s}\n"
                     .format("bottle", "split", "successes", "repeats",
                             "rate", "ci_lo", "ci_hi"))
            for r in self.rows:
                fp.write("{:>12s} {:>7s} {:9d} {:7d} {:7.3f} {:7.3f} "
                         "{:7.3f}\n".format(r.name, r.split, r.successes,
                                            r.repeats, r.rate, r.ci_low,
                                            r.ci_high))

    def dump(self, filename):
        dump_yaml({'rows': [r._asdict() for r in self.rows]}, filename)

    @classmethod
    def load(cls, filename):
        data = load_yaml(filename)
        return cls(EvalRow(**r) for r in data.get('rows', []))


def _run_episodes(policy, bottle, repeats, seed, ecfg):
    """ number of successes over ``repeats`` stage-2 episodes """
    envs = [env.BimanualCapEnv(bottle, 2, ecfg, render=getattr(
        policy, 'uses_pixels', True)) for _ in range(repeats)]
    obs = [e.reset(seed + r) for r, e in enumerate(envs)]
    active = list(range(repeats))
    success = np.zeros(repeats, dtype=bool)
    while active:
        stacked = env.VecBimanualEnv._stack([obs[i] for i in active])
        actions = np.atleast_2d(policy.act(stacked))
        still = []
        for k, i in enumerate(active):
            obs[i], _, done, info = envs[i].step(actions[k])
            if done:
                success[i] = info['success']
            else:
                still.append(i)
        active = still
    return int(success.sum())


def evaluate(policy, seen=(), unseen=(), repeats=10, seed=0,
             env_config=None):
    """ Success rates of a deterministic policy on the bottle sets

    Parameters
    ----------
    policy: object with ``act(obs) -> (N, 46) actions``
        e.g. :class:`PPOPolicy`; ``uses_pixels = False`` skips rendering
    seen, unseen: lists of BottleSpec
    repeats: int
        episodes per bottle
    seed: int
        episode r of bottle b resets with seed + 1000*b + r

    Returns
    -------
    EvaluationTable
    """
    ecfg = (env_config or env.EnvConfig()).validate()
    rows = []
    b = 0
    for split, bottles in (('seen', seen), ('unseen', unseen)):
        for bottle in bottles:
            k = _run_episodes(policy, bottle, repeats, seed + 1000 * b, ecfg)
            lo, hi = ci.success_interval(k, repeats)
            rows.append(EvalRow(bottle.name, split, k, repeats,
                                k / float(repeats), lo, hi))
            logger.info("%s bottle %s: %d/%d", split, bottle.name, k,
                        repeats)
            b += 1
    table = EvaluationTable(rows)
    for split in ('seen', 'unseen'):
        if table.split(split):
            logger.info("%s success %.3f +- %.3f", split,
                        *table.aggregate(split))
    return table


def evaluate_checkpoint(path, seen=(), unseen=(), repeats=10, seed=0,
                        env_config=None):
    """ :func:`evaluate` a policy loaded from ``path`` """
    return evaluate(load_policy(path), seen, unseen, repeats, seed,
                    env_config)
