"""
 Stream alignment, tactile binarization, object labels and the synthetic
 dataset generator with its on-disk format.
"""

import os

import numpy
import pytest

from vtaobimanip import dataset as ds
from vtaobimanip import transforms
from vtaobimanip.errors import ConfigError, CoverageError, \
    IntegrityError, ValidationError

import testutils


def ticks(rate, t_stop, jitter=0.0, rng=None):
    n = int(numpy.floor(t_stop * rate)) + 1
    ts = numpy.arange(n) / rate
    if jitter:
        ts = ts + rng.normal(0.0, jitter, n)
    return ts


@pytest.mark.parametrize("rate,bound", [(200.0, 2.5e-3), (1000.0, 0.5e-3)])
def test_alignment_error_bound(rate, bound):
    visual = ticks(30.0, 2.0)
    stream = ticks(rate, 2.1)
    err = ds.alignment_errors(stream, visual)
    assert err.max() <= bound + 1e-12


def test_alignment_error_with_jitter(rng):
    visual = ticks(30.0, 2.0)
    stream = ticks(200.0, 2.1, jitter=1e-4, rng=rng)
    assert ds.alignment_errors(stream, visual).max() <= 2.5e-3 + 6e-4


def test_align_streams_payload():
    visual = ticks(30.0, 1.0)
    tac_ts = ticks(200.0, 1.05)
    tac = ds.SensorStream(tac_ts, numpy.arange(len(tac_ts))[:, None], 200.0,
                          'tactile')
    mocap_ts = ticks(1000.0, 1.01)
    mocap = [ds.StreamSample(t, [t]) for t in mocap_ts]
    tac_out, mocap_out = ds.align_streams(visual, tac, mocap)
    assert tac_out.shape == (len(visual), 1)
    assert numpy.array_equal(tac_out[:, 0],
                             ds.nearest_indices(tac.timestamps, visual))
    assert numpy.abs(mocap_out[:, 0] - visual).max() <= 0.5e-3 + 1e-12


def test_ties_go_to_earlier_sample():
    assert ds.nearest_indices([0.0, 1.0], [0.5])[0] == 0
    assert ds.nearest_indices([0.0, 1.0], [0.5 + 1e-6])[0] == 1
    assert ds.nearest_indices([0.0, 1.0, 2.0], [1.5, 2.7]).tolist() == [1, 2]


def test_coverage_error():
    visual = ticks(30.0, 1.0)
    stream = ticks(200.0, 0.5)
    with pytest.raises(CoverageError) as e:
        ds.align_streams(visual, ds.SensorStream(stream, stream, 200.0),
                         ds.SensorStream(ticks(1000.0, 1.0),
                                         ticks(1000.0, 1.0), 1000.0))
    assert len(e.value.frame_indices) > 0


def test_coverage_margin_one_period():
    visual = numpy.array([0.0, 0.5, 1.0 + 0.004])
    stream = ticks(200.0, 1.0)
    mocap = ticks(1000.0, 1.01)
    ds.align_streams(visual, ds.SensorStream(stream, stream, 200.0),
                     ds.SensorStream(mocap, mocap, 1000.0))


def test_non_increasing_timestamps():
    visual = ticks(30.0, 1.0)
    bad = ticks(200.0, 1.1)
    bad[10] = bad[9]
    good = ticks(1000.0, 1.1)
    with pytest.raises(ValidationError):
        ds.align_streams(visual, ds.SensorStream(bad, bad, 200.0),
                         ds.SensorStream(good, good, 1000.0))
    with pytest.raises(ValidationError):
        ds.align_streams(visual, ds.SensorStream([], [], 200.0),
                         ds.SensorStream(good, good, 1000.0))


def test_binarize_is_strict():
    raw = numpy.array([0.0, 0.4, 0.4000001, 0.8])
    assert ds.binarize_tactile(raw).tolist() == [0, 0, 1, 1]
    with pytest.raises(ValidationError):
        ds.binarize_tactile([0.1, numpy.nan])


def test_object_label_identity_camera(rng):
    q = testutils.random_quat(rng)
    p = rng.standard_normal(3)
    sizes = [0.03, 0.1, 0.015, 0.02]
    label = ds.make_object_label((p, q), (numpy.zeros(3),
                                          transforms.IDENTITY_QUAT), sizes)
    assert numpy.allclose(label.position, p)
    assert label.orientation[0] >= 0
    assert numpy.isclose(abs(numpy.dot(label.orientation, q)), 1.0)
    assert numpy.allclose(label.sizes, sizes)


def test_object_label_in_camera_frame(rng):
    cam = (rng.standard_normal(3), testutils.random_quat(rng))
    bottle = (rng.standard_normal(3), testutils.random_quat(rng))
    label = ds.make_object_label(bottle, cam, [0.03, 0.1, 0.015, 0.02])
    R_c = testutils.quat_matrix(cam[1])
    assert numpy.allclose(label.position, R_c.T @ (bottle[0] - cam[0]))
    expected = testutils.hamilton(testutils.conjugate(cam[1]), bottle[1])
    assert numpy.isclose(abs(numpy.dot(label.orientation, expected)), 1.0)
    assert numpy.isclose(numpy.linalg.norm(label.orientation), 1.0)


def test_object_label_errors():
    cam = (numpy.zeros(3), transforms.IDENTITY_QUAT)
    with pytest.raises(ValidationError):
        ds.make_object_label((numpy.zeros(3), [1.0, 0.1, 0, 0]), cam,
                             [0.03, 0.1, 0.015, 0.02])
    with pytest.raises(ValidationError):
        ds.make_object_label((numpy.zeros(3), transforms.IDENTITY_QUAT), cam,
                             [0.03, 0.1, 0.035, 0.02])


def test_generator_config_validation():
    with pytest.raises(ConfigError):
        ds.GeneratorConfig(frames_per_trajectory=5, p=5).validate()
    with pytest.raises(ConfigError):
        ds.GeneratorConfig(keyframes=3).validate()
    with pytest.raises(ConfigError):
        ds.GeneratorConfig(body_radius=(0.04, 0.03)).validate()


def test_tiny_dataset_shapes(tiny_dataset):
    d = tiny_dataset
    assert len(d) == 8
    assert d.p == 2
    assert d.images.shape == (8, 32, 32, 3)
    assert d.tactile.shape == (8, 40)
    assert set(numpy.unique(d.tactile)) <= {0, 1}
    assert d.future_actions.shape == (8, 2, 48)
    assert numpy.array_equal(d.future_actions[0, 0], d.actions[1])
    assert numpy.all(numpy.diff(d.timestamps) > 0)
    q = d.objects[:, 3:7]
    assert numpy.allclose(numpy.linalg.norm(q, axis=1), 1.0, atol=1e-5)
    assert numpy.all(q[:, 0] >= 0)
    batch = d.batch([0, 3])
    assert batch['image'].dtype == numpy.float32
    assert batch['image'].max() <= 1.0
    assert sorted(batch) == ['action', 'future_actions', 'image', 'object',
                             'tactile']
    frame = d.frame(2)
    assert frame.image.shape == (32, 32, 3)
    assert frame.object.sizes.shape == (4,)


def test_generator_deterministic(tiny_dataset):
    cfg = ds.GeneratorConfig(n_trajectories=1, frames_per_trajectory=10, p=2,
                             image_size=32)
    again = ds.generate_synthetic_dataset(cfg, seed=0)
    for name, _ in ds.VTAODataset.ARRAYS:
        assert numpy.array_equal(getattr(again, name),
                                 getattr(tiny_dataset, name))
    other = ds.generate_synthetic_dataset(cfg, seed=1)
    assert not numpy.array_equal(other.objects, tiny_dataset.objects)


def test_save_load(tiny_dataset, tmp_path):
    path = str(tmp_path / "data")
    tiny_dataset.save(path)
    back = ds.load_dataset(path)
    for name, _ in ds.VTAODataset.ARRAYS:
        assert numpy.array_equal(getattr(back, name),
                                 getattr(tiny_dataset, name))
    assert back.p == tiny_dataset.p


def test_summary(tiny_dataset, tmp_path):
    fname = str(tmp_path / "summary.txt")
    tiny_dataset.write_summary(fname, {'seed': 0})
    names, rows = testutils.read_columns(fname)
    assert names == ['traj', 'frames', 'contacts', 'duration']
    assert rows[0, 1] == 8
    with open(fname) as f:
        assert f.readline().startswith("# Generated by vtaobimanip")


def test_array_file(tmp_path):
    a = numpy.arange(24, dtype=numpy.float32).reshape(2, 3, 4)
    fname = str(tmp_path / "a.bin")
    ds.write_array(fname, a)
    b = ds.read_array(fname)
    assert b.dtype == a.dtype and numpy.array_equal(a, b)


def test_truncated_array(tmp_path):
    fname = str(tmp_path / "a.bin")
    ds.write_array(fname, numpy.zeros((4, 5)))
    with open(fname, 'rb') as f:
        data = f.read()
    with open(fname, 'wb') as f:
        f.write(data[:-8])
    with pytest.raises(IntegrityError):
        ds.read_array(fname)
    with open(fname, 'wb') as f:
        f.write(b'NOTMAGIC' + data[8:])
    with pytest.raises(IntegrityError):
        ds.read_array(fname)


def test_missing_array(tiny_dataset, tmp_path):
    path = str(tmp_path / "data")
    tiny_dataset.save(path)
    os.remove(os.path.join(path, 'tactile.bin'))
    with pytest.raises(IntegrityError):
        ds.load_dataset(path)


if __name__ == "__main__":
    pytest.main()
