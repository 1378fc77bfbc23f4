"""
Pretraining loop and checkpoints
================================

Trains a :class:`vtaobimanip.model.VTAOModel` on a VTAO dataset with AdamW
(lr 2e-5, weight decay 0.05, batch 8 by default). One mask plan is drawn
per minibatch. The same seed reproduces the loss curve exactly.

A checkpoint is a single ``torch.save`` archive holding the model config,
the weights, the epoch and the loss history. When the loss turns
non-finite the weights of the last finite step are written to
``<out>.lastgood`` before :class:`TrainingError` is raised.
"""

import copy
import hashlib
import logging
import os
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import torch
from tqdm import tqdm

from .config import as_plain, build
from .errors import ConfigError, IntegrityError, TrainingError
from .model import ModelConfig, VTAOModel, batch_to_tensors, sample_mask

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = 'vtao-encoder'


@dataclass
class PretrainConfig:
    """ optimizer and schedule of the pretraining loop """
    lr: float = 2e-5
    weight_decay: float = 0.05
    batch_size: int = 8
    epochs: int = 300
    max_steps: int = 0          # 0: no limit
    grad_clip: float = 0.0      # 0: no clipping
    seed: int = 0
    log_every: int = 50
    progress: bool = True

    def validate(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("lr and batch_size must be positive, "
                              "epochs >= 0")
        if self.max_steps < 0 or self.grad_clip < 0:
            raise ConfigError("max_steps and grad_clip must be >= 0")
        return self


PretrainResult = namedtuple('PretrainResult', ['model', 'history', 'path'])


def parameter_digest(model_or_state):
    """ sha256 over the names and bytes of all parameters and buffers """
    state = model_or_state.state_dict() \
        if hasattr(model_or_state, 'state_dict') else model_or_state
    h = hashlib.sha256()
    for name in sorted(state):
        t = state[name].detach().cpu().contiguous()
        h.update(name.encode('utf8'))
        h.update(str(t.dtype).encode('utf8'))
        h.update(t.numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(path, model, epoch=0, step=0, history=(), extra=None):
    """ write config, weights, epoch and loss history to ``path`` """
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    if os.path.exists(path):
        logger.warning("overwriting checkpoint %s", path)
    from . import __version__
    ckpt = {'kind': CHECKPOINT_KIND, 'version': __version__,
            'config': as_plain(model.config),
            'state_dict': dict((k, v.detach().cpu().clone())
                               for k, v in model.state_dict().items()),
            'epoch': int(epoch), 'step': int(step),
            'history': list(history)}
    ckpt.update(extra or {})
    torch.save(ckpt, path)
    return path


def load_checkpoint(path):
    """ rebuild the model stored in an encoder checkpoint

    Returns
    -------
    (model, checkpoint dict)

    Raises
    ------
    IntegrityError
        unreadable file, wrong kind or weights not matching the config
    """
    try:
        ckpt = torch.load(path, map_location='cpu', weights_only=True)
    except (OSError, RuntimeError, EOFError, ValueError) as e:
        raise IntegrityError("cannot read checkpoint %s: %s" % (path, e))
    if not isinstance(ckpt, dict) or ckpt.get('kind') != CHECKPOINT_KIND:
        raise IntegrityError("%s is not an encoder checkpoint" % path)
    model = VTAOModel(build(ModelConfig, ckpt['config'], 'model'))
    try:
        model.load_state_dict(ckpt['state_dict'])
    except RuntimeError as e:
        raise IntegrityError("%s: weights do not match the stored config "
                             "(%s)" % (path, e))
    return model, ckpt


def _state_copy(model):
    return dict((k, v.detach().clone()) for k, v in model.state_dict().items())


def _dump_lastgood(out, model, state, epoch, step, history):
    if out is None or state is None:
        return None
    good = copy.deepcopy(model)
    good.load_state_dict(state)
    path = out + '.lastgood'
    save_checkpoint(path, good, epoch, step, history)
    logger.error("training diverged at step %d, last finite weights in %s",
                 step, path)
    return path


def pretrain(dataset, model_config=None, pretrain_config=None, out=None):
    """ Train the masked VTAO transformer

    Parameters
    ----------
    dataset: VTAODataset
    model_config: ModelConfig
    pretrain_config: PretrainConfig
    out: str, optional
        checkpoint path

    Returns
    -------
    PretrainResult(model, history, path)
        history holds one dict per optimizer step with the total and the
        four component losses

    Raises
    ------
    ConfigError
        empty dataset
    TrainingError
        non-finite loss or gradients
    """
    mcfg = (model_config or ModelConfig()).validate()
    pcfg = (pretrain_config or PretrainConfig()).validate()
    if len(dataset) == 0:
        raise ConfigError("cannot pretrain on an empty dataset")
    if mcfg.use_v and dataset.image_size != mcfg.image_size:
        raise ConfigError("dataset images are %d px, model expects %d"
                          % (dataset.image_size, mcfg.image_size))
    torch.manual_seed(pcfg.seed)
    rng = np.random.default_rng(pcfg.seed)
    model = VTAOModel(mcfg)
    history = []
    if not mcfg.pretrained:
        logger.info("%s: encoder stays at its random initialization",
                    mcfg.name)
        if out is not None:
            save_checkpoint(out, model, 0, 0, history)
        return PretrainResult(model, history, out)

    opt = torch.optim.AdamW(model.parameters(), lr=pcfg.lr,
                            weight_decay=pcfg.weight_decay)
    dtype = model.dtype
    n = len(dataset)
    step = 0
    epoch = 0
    last_good = _state_copy(model)
    model.train()
    bar = tqdm(range(pcfg.epochs), disable=not pcfg.progress,
               desc="pretrain %s" % mcfg.name)
    for epoch in bar:
        order = rng.permutation(n)
        for start in range(0, n, pcfg.batch_size):
            idx = order[start:start + pcfg.batch_size]
            batch = batch_to_tensors(dataset.batch(idx), dtype)
            plan = sample_mask(mcfg, rng)
            try:
                recon, _ = model(batch, plan)
                total, parts = model.loss(batch, recon, plan)
            except TrainingError as e:
                _dump_lastgood(out, model, last_good, epoch, step, history)
                e.diagnostics.update(step=step, epoch=epoch)
                raise
            last_good = _state_copy(model)
            opt.zero_grad()
            total.backward()
            gnorm = torch.linalg.vector_norm(torch.stack(
                [torch.linalg.vector_norm(p.grad) for p in model.parameters()
                 if p.grad is not None] or [total.new_zeros(())]))
            if not torch.isfinite(gnorm):
                _dump_lastgood(out, model, last_good, epoch, step, history)
                raise TrainingError("non-finite gradients",
                                    {'step': step, 'epoch': epoch,
                                     'loss': float(total.detach())})
            if pcfg.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(),
                                               pcfg.grad_clip)
            opt.step()
            row = {'step': step, 'epoch': epoch,
                   'total': float(total.detach())}
            row.update((k, float(v.detach())) for k, v in parts.items())
            history.append(row)
            if pcfg.log_every and step % pcfg.log_every == 0:
                logger.info("step %d epoch %d loss %.5f (img %.4f tac %.4f "
                            "obj %.4f act %.4f)", step, epoch, row['total'],
                            row['image'], row['tactile'], row['object'],
                            row['action'])
            step += 1
            if pcfg.max_steps and step >= pcfg.max_steps:
                break
        bar.set_postfix(loss=history[-1]['total'] if history else None)
        if pcfg.max_steps and step >= pcfg.max_steps:
            break
    model.eval()
    if history:
        logger.info("pretraining done: %d steps, loss %.5f -> %.5f", step,
                    history[0]['total'], history[-1]['total'])
    if out is not None:
        save_checkpoint(out, model, epoch + 1, step, history)
    return PretrainResult(model, history, out)


def write_history(filename, history, header_params={}):
    """ Output the loss history to text, one row per step """
    from . import __version__
    keys = ['step', 'epoch', 'total', 'image', 'tactile', 'object', 'action']
    with open(filename, 'w') as fp:
        fp.write("# Generated by vtaobimanip {}\n".format(__version__))
        for key, val in header_params.items():
            fp.write("# {}: {}\n".format(key, val))
        fp.write(" ".join("{:>12s}".format(k) for k in keys) + "\n")
        for row in history:
            fp.write("{:12d} {:12d} ".format(row['step'], row['epoch']))
            fp.write(" ".join("{:12.6e}".format(row[k]) for k in keys[2:]))
            fp.write("\n")


def read_history(filename):
    """ rows written by :func:`write_history` as a list of dicts """
    rows, keys = [], None
    with open(filename) as fp:
        for line in fp:
            if line.startswith('#') or not line.strip():
                continue
            if keys is None:
                keys = line.split()
                continue
            rows.append(dict((k, int(v) if k in ('step', 'epoch')
                              else float(v))
                             for k, v in zip(keys, line.split())))
    return rows
