"""
Masked VTAO transformer
=======================

A masked autoencoder over four modalities of a single frame:

=========  ========================================  ======================
group      tokens                                    embedding
=========  ========================================  ======================
CLS        1                                         learned
visual     (image_size / patch_size)^2 patches       Conv2d patch embedding
tactile    one per sensor (40, or 20 right only)     affine map of a scalar
action     one per joint group (48, 10 or 2)         affine map, zero padded
null       N_o learned placeholders                  learned
=========  ========================================  ======================

Masked tokens are dropped before the encoder. The decoder restores the full
sequence with a shared mask token and reconstructs the image patches, the
tactile bits, the current and next p actions and the bottle label (position,
quaternion and sizes from the pooled null tokens)::

    loss = w_img*L(V) + w_tac*L(C) + w_bot*L(O) + w_act*L(A)

with L the per-sample Euclidean norm of the residual averaged over the
batch. Image and tactile residuals only count masked positions.

:func:`configure_ablation` maps baseline names to configurations.

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

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError, DimensionError, TrainingError

logger = logging.getLogger(__name__)

GROUPS = ('v', 'c', 'a', 'o')
N_TACTILE = 40
N_JOINTS = 48
HAND_JOINTS = 24
OBJECT_DIM = 11
DTYPES = {'float32': torch.float32, 'float64': torch.float64}


@dataclass
class ModelConfig:
    """ VTAO transformer settings """
    embed_dim: int = 256
    depth: int = 4
    num_heads: int = 8
    decoder_dim: int = 256
    decoder_depth: int = 2
    decoder_heads: int = 8
    mlp_ratio: float = 4.0
    patch_size: int = 16
    image_size: int = 224
    mask_ratio_v: float = 0.75
    mask_ratio_c: float = 0.5
    mask_ratio_a: float = 0.5
    mask_ratio_o: float = 0.0
    p: int = 5
    granularity: str = 'per_joint'      # per_joint, per_finger, per_hand
    use_v: bool = True
    use_t: bool = True
    use_a: bool = True
    recon_bottle: bool = True
    n_null: int = 8
    tactile_hands: str = 'dual'         # dual or right
    action_hands: str = 'dual'
    pretrained: bool = True
    learned_pos_embed: bool = True
    separate_decoders: bool = False
    w_img: float = 1.0
    w_tac: float = 2.0
    w_bot: float = 5.0
    w_act: float = 2.0
    dtype: str = 'float32'
    name: str = 'VTAO'

    def validate(self):
        for r in (self.mask_ratio_v, self.mask_ratio_c, self.mask_ratio_a,
                  self.mask_ratio_o):
            if not 0.0 <= r < 1.0:
                raise ConfigError("mask ratios must lie in [0, 1), got %g" % r)
        if self.embed_dim % self.num_heads:
            raise ConfigError("embed_dim %d not divisible by num_heads %d"
                              % (self.embed_dim, self.num_heads))
        if self.decoder_dim % self.decoder_heads:
            raise ConfigError("decoder_dim %d not divisible by decoder_heads "
                              "%d" % (self.decoder_dim, self.decoder_heads))
        if self.image_size % self.patch_size:
            raise ConfigError("image_size must be a multiple of patch_size")
        if self.granularity not in ('per_joint', 'per_finger', 'per_hand'):
            raise ConfigError("unknown action granularity '%s'"
                              % self.granularity)
        if self.tactile_hands not in ('dual', 'right') or \
                self.action_hands not in ('dual', 'right'):
            raise ConfigError("tactile_hands and action_hands must be "
                              "'dual' or 'right'")
        if not (self.use_v or self.use_t or self.use_a):
            raise ConfigError("at least one input modality is required")
        if self.p < 0 or self.n_null < 1:
            raise ConfigError("p must be >= 0 and n_null >= 1")
        if self.dtype not in DTYPES:
            raise ConfigError("dtype must be one of %s" % sorted(DTYPES))
        return self

    @property
    def use_o(self):
        return self.recon_bottle

    @property
    def weights(self):
        return (self.w_img, self.w_tac, self.w_bot, self.w_act)


########################################################################
# Baselines

_BASELINES = {
    'V': dict(use_v=True, use_t=False, use_a=False, recon_bottle=False),
    'T': dict(use_v=False, use_t=True, use_a=False, recon_bottle=False),
    'A': dict(use_v=False, use_t=False, use_a=True, recon_bottle=False),
    'VT': dict(use_a=False, recon_bottle=False),
    'VTA': dict(recon_bottle=False),
    'VTO': dict(use_a=False),
    'VTA-Scr': dict(recon_bottle=False, pretrained=False),
    'VTAO': dict(),
    'v1': dict(recon_bottle=False),
    'v2': dict(recon_bottle=False, action_hands='right'),
    'v3': dict(use_a=False, recon_bottle=False),
    'v4': dict(use_a=False, recon_bottle=False, tactile_hands='right'),
    'v5': dict(recon_bottle=False, p=0),
    'v6': dict(recon_bottle=False, p=1),
    'v7': dict(recon_bottle=False, granularity='per_hand'),
    'v8': dict(recon_bottle=False, granularity='per_finger'),
    # proprioception only, the policy gets no encoder features
    'Base': dict(use_v=False, use_t=False, use_a=True, recon_bottle=False,
                 pretrained=False),
}
BASELINES = tuple(_BASELINES)
TABLE1 = ('V', 'T', 'A', 'VT', 'VTA', 'VTO', 'VTA-Scr', 'VTAO')
TABLE2 = ('VTAO', 'v1', 'v2', 'v3', 'v4', 'v5', 'v6', 'v7', 'v8')


def configure_ablation(name, base=None):
    """ ModelConfig of a named baseline

    Parameters
    ----------
    name: str
        one of V, T, A, VT, VTA, VTO, VTA-Scr, VTAO, v1..v8, Base
    base: ModelConfig, optional
        sizes and ratios to start from (profile settings)

    Raises
    ------
    ConfigError
        unknown name
    """
    if name not in _BASELINES:
        raise ConfigError("unknown baseline '%s', choose from %s"
                          % (name, ", ".join(BASELINES)))
    base = base or ModelConfig()
    defaults = dict(use_v=True, use_t=True, use_a=True, recon_bottle=True,
                    pretrained=True, p=base.p if base.p > 0 else 5,
                    granularity='per_joint', tactile_hands='dual',
                    action_hands='dual')
    defaults.update(_BASELINES[name])
    return replace(base, name=name, **defaults).validate()


def uses_encoder(name):
    """ False for the proprioception-only baseline """
    return name != 'Base'


def _mark(flag):
    return u'✓' if flag else u'×'


def ablation_table():
    """ rows of (name, Tac, Act, PredictAct, ActToken, Obj) per baseline """
    rows = []
    for name in BASELINES:
        c = configure_ablation(name)
        if name == 'Base':
            rows.append((name, _mark(False), _mark(False), _mark(False),
                         _mark(False), _mark(False)))
            continue
        tac = c.tactile_hands if c.use_t else _mark(False)
        if c.use_a:
            act = c.action_hands
            pred = '%dsteps' % c.p if c.p > 0 else 'NoPredict'
            n = len(action_groups(c)[0])
            tok = str(n) if c.action_hands == 'right' else '%d x 2' % (n // 2)
        else:
            act = pred = tok = _mark(False)
        rows.append((name, tac, act, pred, tok, _mark(c.recon_bottle)))
    return rows


########################################################################
# Token layout

def action_groups(config):
    """ joint index groups of the action tokens

    Groups always partition the present action joints: 24 per hand, or 24
    of the right hand only. Per-finger groups follow the robot hand
    fingers, the two wrist joints belong to the thumb group.

    Returns
    -------
    (groups, joints): list of int arrays, sorted array of present joints
    """
    from .environment import robot_hand
    hands = (0, 1) if config.action_hands == 'dual' else (1,)
    groups = []
    for h in hands:
        off = h * HAND_JOINTS
        if config.granularity == 'per_joint':
            groups += [np.array([off + j]) for j in range(HAND_JOINTS)]
        elif config.granularity == 'per_finger':
            groups += [off + g for g in robot_hand().finger_groups()]
        else:
            groups.append(off + np.arange(HAND_JOINTS))
    joints = np.sort(np.concatenate(groups))
    return groups, joints


def tactile_channels(config):
    if config.tactile_hands == 'dual':
        return np.arange(N_TACTILE)
    return np.arange(N_TACTILE // 2, N_TACTILE)


Layout = namedtuple('Layout', ['n_v', 'n_c', 'n_a', 'n_o', 'offsets',
                               'total'])


def token_layout(config):
    """ group sizes and start offsets in the full sequence (CLS at 0) """
    n_v = (config.image_size // config.patch_size) ** 2 if config.use_v \
        else 0
    n_c = len(tactile_channels(config)) if config.use_t else 0
    n_a = len(action_groups(config)[0]) if config.use_a else 0
    n_o = config.n_null if config.recon_bottle else 0
    offsets = {}
    pos = 1
    for g, n in zip(GROUPS, (n_v, n_c, n_a, n_o)):
        offsets[g] = pos
        pos += n
    return Layout(n_v, n_c, n_a, n_o, offsets, pos)


class MaskPlan(object):
    """ masked token positions per modality, sorted, shared by a batch """
    def __init__(self, masked, sizes, seed=None):
        self.masked = dict((g, np.sort(np.asarray(masked.get(g, ()),
                                                  dtype=int)))
                           for g in GROUPS)
        self.sizes = dict(sizes)
        self.seed = seed

    def kept(self, g):
        return np.setdiff1d(np.arange(self.sizes[g]), self.masked[g])

    def counts(self):
        return dict((g, len(self.masked[g])) for g in GROUPS)

    @classmethod
    def empty(cls, layout):
        return cls({}, _sizes(layout))

    def __repr__(self):
        return "MaskPlan(%s)" % ", ".join(
            "%s %d/%d" % (g, len(self.masked[g]), self.sizes[g])
            for g in GROUPS)


def _sizes(layout):
    return dict(zip(GROUPS, (layout.n_v, layout.n_c, layout.n_a,
                             layout.n_o)))


def mask_count(ratio, n):
    """ round(ratio * n), halves rounded up """
    return int(math.floor(ratio * n + 0.5))


def sample_mask(config, rng=None):
    """ Draw masked positions per modality, uniformly without replacement

    Parameters
    ----------
    config: ModelConfig
    rng: numpy.random.Generator or int seed

    Returns
    -------
    MaskPlan with exactly round(ratio * size) masked tokens per group
    """
    seed = rng if isinstance(rng, (int, np.integer)) else None
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    layout = token_layout(config)
    sizes = _sizes(layout)
    ratios = dict(zip(GROUPS, (config.mask_ratio_v, config.mask_ratio_c,
                               config.mask_ratio_a, config.mask_ratio_o)))
    masked = {}
    for g in GROUPS:
        k = mask_count(ratios[g], sizes[g])
        masked[g] = rng.choice(sizes[g], size=k, replace=False) if k else ()
    return MaskPlan(masked, sizes, seed)


########################################################################
# Image patches

def patchify(images, p):
    """ (B, H, W, 3) -> (B, L, p*p*3), row-major patch order """
    B, H, W, C = images.shape
    h, w = H // p, W // p
    x = images.reshape(B, h, p, w, p, C)
    x = torch.einsum('nhpwqc->nhwpqc', x)
    return x.reshape(B, h * w, p * p * C)


def unpatchify(x, p, channels=3):
    """ (B, L, p*p*3) -> (B, H, W, 3) """
    B, L, _ = x.shape
    h = w = int(round(math.sqrt(L)))
    x = x.reshape(B, h, w, p, p, channels)
    x = torch.einsum('nhwpqc->nhpwqc', x)
    return x.reshape(B, h * p, w * p, channels)


def sincos_embedding(n, dim):
    """ fixed 1-D sine-cosine position embedding, (n, dim) """
    pos = np.arange(n, dtype=np.float64)[:, None]
    omega = 1.0 / 10000 ** (np.arange(dim // 2, dtype=np.float64) /
                            max(dim // 2, 1))
    out = pos * omega[None, :]
    emb = np.concatenate([np.sin(out), np.cos(out)], axis=1)
    if emb.shape[1] < dim:
        emb = np.pad(emb, ((0, 0), (0, dim - emb.shape[1])))
    return torch.from_numpy(emb).float()


########################################################################
# Model

TokenBatch = namedtuple('TokenBatch', ['cls', 'v', 'c', 'a', 'o'])
Latents = namedtuple('Latents', ['sequence', 'keep_index', 'h_cls', 'h_v',
                                 'h_c', 'h_a', 'h_o'])
Reconstruction = namedtuple('Reconstruction', ['image', 'tactile',
                                               'actions', 'object'])


def _encoder(dim, heads, depth, mlp_ratio):
    layer = nn.TransformerEncoderLayer(dim, heads,
                                       dim_feedforward=int(dim * mlp_ratio),
                                       dropout=0.0, activation='gelu',
                                       batch_first=True, norm_first=True)
    return nn.TransformerEncoder(layer, depth, enable_nested_tensor=False)


def batch_to_tensors(batch, dtype=torch.float32, device=None):
    """ numpy batch dict (see VTAODataset.batch) to tensors """
    return dict((k, torch.as_tensor(np.asarray(v), dtype=dtype,
                                    device=device))
                for k, v in batch.items())


class VTAOModel(nn.Module):
    """ tokenizer, encoder and decoder of the masked VTAO transformer

    :Example:
        ::

            cfg = ModelConfig()
            model = VTAOModel(cfg)
            plan = sample_mask(cfg, 0)
            recon, latents = model(batch, plan)
            total, parts = model.loss(batch, recon, plan)
    """
    def __init__(self, config=None):
        super(VTAOModel, self).__init__()
        cfg = (config or ModelConfig()).validate()
        self.config = cfg
        self.layout = token_layout(cfg)
        D, Dd, P = cfg.embed_dim, cfg.decoder_dim, cfg.patch_size
        self.register_buffer('tactile_index',
                             torch.as_tensor(tactile_channels(cfg)),
                             persistent=False)

        groups, joints = action_groups(cfg)
        gmax = max(len(g) for g in groups)
        index = -np.ones((len(groups), gmax), dtype=int)
        for i, g in enumerate(groups):
            index[i, :len(g)] = g
        valid = index >= 0
        self.group_max = gmax
        self.register_buffer('action_index',
                             torch.as_tensor(np.where(valid, index, 0)),
                             persistent=False)
        self.register_buffer('action_valid', torch.as_tensor(valid),
                             persistent=False)
        flat = index.ravel()
        order = np.flatnonzero(flat >= 0)
        order = order[np.argsort(flat[order])]
        self.register_buffer('action_flat', torch.as_tensor(order),
                             persistent=False)
        self.register_buffer('action_joints', torch.as_tensor(joints),
                             persistent=False)

        self.cls_token = nn.Parameter(torch.zeros(1, 1, D))
        if cfg.use_v:
            self.patch_embed = nn.Conv2d(3, D, kernel_size=P, stride=P)
            self.image_head = nn.Linear(Dd, P * P * 3)
        if cfg.use_t:
            self.tactile_embed = nn.Linear(1, D)
            self.tactile_head = nn.Linear(Dd, 1)
        if cfg.use_a:
            self.action_embed = nn.Linear(gmax, D)
            self.action_head = nn.Linear(Dd, (1 + cfg.p) * gmax)
        if cfg.recon_bottle:
            self.null_tokens = nn.Parameter(torch.zeros(1, cfg.n_null, D))
            self.object_head = nn.Linear(Dd, OBJECT_DIM)

        n = self.layout.total
        if cfg.learned_pos_embed:
            self.pos_embed = nn.Parameter(torch.zeros(1, n, D))
            self.decoder_pos_embed = nn.Parameter(torch.zeros(1, n, Dd))
        else:
            self.register_buffer('pos_embed', sincos_embedding(n, D)[None])
            self.register_buffer('decoder_pos_embed',
                                 sincos_embedding(n, Dd)[None])

        self.encoder = _encoder(D, cfg.num_heads, cfg.depth, cfg.mlp_ratio)
        self.norm = nn.LayerNorm(D)
        self.decoder_embed = nn.Linear(D, Dd)
        self.mask_token = nn.Parameter(torch.zeros(1, 1, Dd))
        present = [g for g, k in zip(GROUPS, self.layout[:4]) if k]
        if cfg.separate_decoders:
            self.decoders = nn.ModuleDict(
                (g, _encoder(Dd, cfg.decoder_heads, cfg.decoder_depth,
                             cfg.mlp_ratio)) for g in present)
        else:
            self.decoders = nn.ModuleDict(
                {'shared': _encoder(Dd, cfg.decoder_heads, cfg.decoder_depth,
                                    cfg.mlp_ratio)})
        self.decoder_norm = nn.LayerNorm(Dd)
        self.initialize_weights()
        self.to(DTYPES[cfg.dtype])

    def initialize_weights(self):
        if self.config.learned_pos_embed:
            nn.init.normal_(self.pos_embed, std=0.02)
            nn.init.normal_(self.decoder_pos_embed, std=0.02)
        nn.init.normal_(self.cls_token, std=0.02)
        nn.init.normal_(self.mask_token, std=0.02)
        if self.config.recon_bottle:
            nn.init.normal_(self.null_tokens, std=0.02)
        if self.config.use_v:
            w = self.patch_embed.weight.data
            nn.init.xavier_uniform_(w.view([w.shape[0], -1]))
        for m in self.modules():
            if isinstance(m, nn.Linear):
                nn.init.xavier_uniform_(m.weight)
                if m.bias is not None:
                    nn.init.constant_(m.bias, 0)
            elif isinstance(m, nn.LayerNorm):
                nn.init.constant_(m.bias, 0)
                nn.init.constant_(m.weight, 1.0)

    @property
    def dtype(self):
        return self.cls_token.dtype

    def _span(self, g):
        o = self.layout.offsets[g]
        return o, o + _sizes(self.layout)[g]

    def tokenize(self, batch):
        """ embed every present modality and add position encodings

        Parameters
        ----------
        batch: dict of tensors
            'image' (B, H, W, 3), 'tactile' (B, 40), 'action' (B, 48);
            only the keys of present modalities are read

        Returns
        -------
        TokenBatch, absent groups are None
        """
        cfg = self.config
        pos = self.pos_embed
        B = None
        out = {'v': None, 'c': None, 'a': None, 'o': None}
        if cfg.use_v:
            img = batch['image']
            s = cfg.image_size
            if img.dim() != 4 or tuple(img.shape[1:]) != (s, s, 3):
                raise DimensionError("image batch must be (B, %d, %d, 3), "
                                     "got %s" % (s, s, tuple(img.shape)))
            x = self.patch_embed(img.permute(0, 3, 1, 2).to(self.dtype))
            x = x.flatten(2).transpose(1, 2)
            a, b = self._span('v')
            out['v'] = x + pos[:, a:b]
            B = x.shape[0]
        if cfg.use_t:
            tac = batch['tactile']
            if tac.dim() != 2 or tac.shape[1] != N_TACTILE:
                raise DimensionError("tactile batch must be (B, 40), got %s"
                                     % (tuple(tac.shape),))
            x = tac.to(self.dtype)[:, self.tactile_index, None]
            a, b = self._span('c')
            out['c'] = self.tactile_embed(x) + pos[:, a:b]
            B = x.shape[0]
        if cfg.use_a:
            act = batch['action']
            if act.dim() != 2 or act.shape[1] != N_JOINTS:
                raise DimensionError("action batch must be (B, 48), got %s"
                                     % (tuple(act.shape),))
            x = act.to(self.dtype)[:, self.action_index]
            x = x * self.action_valid.to(self.dtype)
            a, b = self._span('a')
            out['a'] = self.action_embed(x) + pos[:, a:b]
            B = x.shape[0]
        if cfg.recon_bottle:
            a, b = self._span('o')
            out['o'] = (self.null_tokens + pos[:, a:b]).expand(B, -1, -1)
        cls = (self.cls_token + pos[:, :1]).expand(B, -1, -1)
        return TokenBatch(cls, **out)

    def _keep_index(self, plan):
        sizes = _sizes(self.layout)
        for g in GROUPS:
            if plan.sizes.get(g) != sizes[g]:
                raise DimensionError("mask plan has %s tokens for group '%s',"
                                     " model has %d"
                                     % (plan.sizes.get(g), g, sizes[g]))
        keep = [np.zeros(1, dtype=int)]
        masked = []
        for g in GROUPS:
            o = self.layout.offsets[g]
            keep.append(o + plan.kept(g))
            masked.append(o + plan.masked[g])
        return np.concatenate(keep), np.concatenate(masked)

    def encode(self, tokens, plan):
        """ drop masked tokens and run the encoder

        Returns
        -------
        Latents: the kept sequence (CLS first, groups in order) and its
        group slices
        """
        seq = torch.cat([t for t in tokens if t is not None], dim=1)
        keep, _ = self._keep_index(plan)
        x = seq[:, torch.as_tensor(keep, device=seq.device)]
        x = self.norm(self.encoder(x))
        parts = [x[:, :1]]
        pos = 1
        for g in GROUPS:
            n = len(plan.kept(g))
            parts.append(x[:, pos:pos + n])
            pos += n
        return Latents(x, keep, x[:, 0], *parts[1:])

    def decode(self, latents, plan):
        """ restore the full sequence with mask tokens and apply the heads

        Returns
        -------
        Reconstruction, absent modalities are None
        """
        cfg = self.config
        keep, masked = self._keep_index(plan)
        y = self.decoder_embed(latents.sequence)
        B = y.shape[0]
        fill = self.mask_token.expand(B, len(masked), -1)
        order = np.concatenate([keep, masked])
        restore = torch.as_tensor(np.argsort(order), device=y.device)
        full = torch.cat([y, fill], dim=1)[:, restore]
        full = full + self.decoder_pos_embed

        if 'shared' in self.decoders:
            h = self.decoder_norm(self.decoders['shared'](full))
            hidden = dict((g, h) for g in GROUPS)
        else:
            hidden = dict((g, self.decoder_norm(dec(full)))
                          for g, dec in self.decoders.items())
        out = {}
        for g in GROUPS:
            a, b = self._span(g)
            out[g] = hidden[g][:, a:b] if b > a else None
        image = tactile = actions = obj = None
        if out['v'] is not None:
            image = self.image_head(out['v'])
        if out['c'] is not None:
            tactile = self.tactile_head(out['c'])[..., 0]
        if out['a'] is not None:
            pred = self.action_head(out['a'])
            pred = pred.reshape(B, -1, 1 + cfg.p, self.group_max)
            pred = pred.transpose(1, 2).reshape(B, 1 + cfg.p, -1)
            actions = pred[..., self.action_flat]
        if out['o'] is not None:
            o = self.object_head(out['o'].mean(dim=1))
            quat = F.normalize(o[:, 3:7], dim=-1)
            obj = torch.cat([o[:, :3], quat, o[:, 7:]], dim=-1)
        return Reconstruction(image, tactile, actions, obj)

    def forward(self, batch, plan):
        latents = self.encode(self.tokenize(batch), plan)
        return self.decode(latents, plan), latents

    def encode_cls(self, batch):
        """ h_cls with nothing masked, (B, embed_dim) """
        tokens = self.tokenize(batch)
        return self.encode(tokens, MaskPlan.empty(self.layout)).h_cls

    def targets(self, batch):
        """ reconstruction targets matching :class:`Reconstruction` """
        cfg = self.config
        image = tactile = actions = obj = None
        if cfg.use_v:
            image = patchify(batch['image'].to(self.dtype), cfg.patch_size)
        if cfg.use_t:
            tactile = batch['tactile'].to(self.dtype)[:, self.tactile_index]
        if cfg.use_a:
            cur = batch['action'].to(self.dtype)[:, None]
            if cfg.p > 0:
                fut = batch['future_actions'].to(self.dtype)
                if fut.shape[1] < cfg.p:
                    raise DimensionError("batch has %d future actions, model "
                                         "predicts %d" % (fut.shape[1],
                                                          cfg.p))
                cur = torch.cat([cur, fut[:, :cfg.p]], dim=1)
            actions = cur[..., self.action_joints]
        if cfg.recon_bottle:
            obj = batch['object'].to(self.dtype)
        return Reconstruction(image, tactile, actions, obj)

    def loss(self, batch, recon, plan, weights=None):
        """ weighted sum of the four reconstruction distances

        Returns
        -------
        (total, parts): 0-dim tensor and dict of 0-dim tensors with keys
        'image', 'tactile', 'object', 'action' (absent modalities are 0)

        Raises
        ------
        TrainingError
            non-finite loss
        """
        w_img, w_tac, w_bot, w_act = weights or self.config.weights
        target = self.targets(batch)
        zero = self.cls_token.new_zeros(())
        parts = dict(image=zero, tactile=zero, object=zero, action=zero)
        if recon.image is not None:
            idx = torch.as_tensor(plan.masked['v'], device=zero.device)
            parts['image'] = _distance(recon.image[:, idx],
                                       target.image[:, idx])
        if recon.tactile is not None:
            idx = torch.as_tensor(plan.masked['c'], device=zero.device)
            parts['tactile'] = _distance(torch.sigmoid(recon.tactile[:, idx]),
                                         target.tactile[:, idx])
        if recon.actions is not None:
            parts['action'] = _distance(recon.actions, target.actions)
        if recon.object is not None:
            parts['object'] = _distance(recon.object, target.object)
        total = w_img * parts['image'] + w_tac * parts['tactile'] + \
            w_bot * parts['object'] + w_act * parts['action']
        if not torch.isfinite(total):
            diag = dict((k, float(v.detach())) for k, v in parts.items())
            raise TrainingError("non-finite reconstruction loss", diag)
        return total, parts


def _distance(pred, target):
    """ per-sample Euclidean norm of the flattened residual, batch mean """
    r = (pred - target).reshape(pred.shape[0], -1)
    return torch.linalg.vector_norm(r, dim=1).mean()


def count_parameters(model):
    return sum(p.numel() for p in model.parameters())
