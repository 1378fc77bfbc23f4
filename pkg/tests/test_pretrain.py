"""
 Pretraining loop: reproducibility, checkpoints and divergence handling.
"""

import importlib
import os

import numpy
import pytest
import torch

from vtaobimanip import model as vm
# the package re-exports the pretrain() function under the module's name
pt = importlib.import_module('vtaobimanip.pretrain')
from vtaobimanip.errors import ConfigError, IntegrityError, TrainingError

import testutils


def quick(**kw):
    base = dict(epochs=2, batch_size=4, lr=1e-3, seed=0, progress=False,
                log_every=0)
    base.update(kw)
    return pt.PretrainConfig(**base)


def test_same_seed_same_curve(tiny_dataset):
    cfg = testutils.tiny_model_config(p=2)
    a = pt.pretrain(tiny_dataset, cfg, quick())
    b = pt.pretrain(tiny_dataset, cfg, quick())
    assert len(a.history) == 4
    assert [r['total'] for r in a.history] == [r['total'] for r in b.history]
    assert pt.parameter_digest(a.model) == pt.parameter_digest(b.model)


def test_checkpoint_roundtrip(tiny_dataset, tmp_path):
    cfg = testutils.tiny_model_config(p=2)
    out = str(tmp_path / "encoder.pt")
    res = pt.pretrain(tiny_dataset, cfg, quick(max_steps=3), out)
    assert res.path == out
    assert len(res.history) == 3
    model, ckpt = pt.load_checkpoint(out)
    assert ckpt['step'] == 3
    assert pt.parameter_digest(model) == pt.parameter_digest(res.model)
    assert model.config == res.model.config


def test_scratch_baseline_skips_training(tiny_dataset, tmp_path):
    cfg = vm.configure_ablation('VTA-Scr', testutils.tiny_model_config(p=2))
    out = str(tmp_path / "scr.pt")
    res = pt.pretrain(tiny_dataset, cfg, quick(), out)
    assert res.history == []
    assert os.path.exists(out)


def test_bad_checkpoint(tmp_path):
    fname = str(tmp_path / "junk.pt")
    with open(fname, 'wb') as f:
        f.write(b'not a checkpoint')
    with pytest.raises(IntegrityError):
        pt.load_checkpoint(fname)
    torch.save({'kind': 'something-else'}, fname)
    with pytest.raises(IntegrityError):
        pt.load_checkpoint(fname)


def test_image_size_mismatch(tiny_dataset):
    cfg = testutils.tiny_model_config(p=2, image_size=64)
    with pytest.raises(ConfigError):
        pt.pretrain(tiny_dataset, cfg, quick())


def test_divergence_keeps_last_good(tiny_dataset, tmp_path, monkeypatch):
    cfg = testutils.tiny_model_config(p=2)
    out = str(tmp_path / "encoder.pt")
    original = vm.VTAOModel.loss
    calls = []

    def failing_loss(self, batch, recon, plan, weights=None):
        calls.append(1)
        if len(calls) > 2:
            raise TrainingError("non-finite reconstruction loss", {})
        return original(self, batch, recon, plan, weights)

    monkeypatch.setattr(vm.VTAOModel, 'loss', failing_loss)
    with pytest.raises(TrainingError) as e:
        pt.pretrain(tiny_dataset, cfg, quick(epochs=5), out)
    assert e.value.diagnostics['step'] == 2
    assert os.path.exists(out + '.lastgood')
    model, ckpt = pt.load_checkpoint(out + '.lastgood')
    assert len(ckpt['history']) == 2


def test_history_file(tiny_dataset, tmp_path):
    cfg = testutils.tiny_model_config(p=2)
    res = pt.pretrain(tiny_dataset, cfg, quick(max_steps=2))
    fname = str(tmp_path / "history.txt")
    pt.write_history(fname, res.history, {'ablation': 'VTAO'})
    names, rows = testutils.read_columns(fname)
    assert names[:3] == ['step', 'epoch', 'total']
    assert rows.shape == (2, 7)
    assert numpy.allclose(rows[:, 2], [r['total'] for r in res.history],
                          rtol=1e-6)
    back = pt.read_history(fname)
    assert [r['step'] for r in back] == [r['step'] for r in res.history]
    assert numpy.allclose([r['action'] for r in back],
                          [r['action'] for r in res.history], rtol=1e-6)


@pytest.mark.slow
def test_overfits_small_set(tiny_dataset):
    cfg = testutils.tiny_model_config(p=2, embed_dim=32, decoder_dim=32)
    res = pt.pretrain(tiny_dataset, cfg,
                      pt.PretrainConfig(epochs=2000, batch_size=8, lr=1e-3,
                                        weight_decay=0.0, progress=False,
                                        log_every=0))
    first = res.history[0]['total']
    last = numpy.mean([r['total'] for r in res.history[-20:]])
    assert last < 0.05 * first


if __name__ == "__main__":
    pytest.main()
