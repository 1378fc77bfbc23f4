"""
VTAO dataset
============

Frame assembly for pretraining. A VTAO frame bundles

- an RGB image V (H x W x 3 in [0, 1]),
- 40 binary tactile bits C (20 per hand, left then right),
- the 48 joint angles A of both robot hands and the actions of the next
  p visual frames,
- an object label O: bottle pose in the camera frame and its four sizes.

Human demonstrations arrive as three unsynchronized streams: 30 Hz video,
200 Hz tactile gloves and 1 kHz motion capture. :func:`align_streams` picks
the nearest sample of every stream for each video frame and
:func:`binarize_tactile` thresholds the glove voltages.

:func:`generate_synthetic_dataset` scripts grasp-then-twist episodes around
procedurally sized bottles, samples them as the three raw streams and runs
them through the same alignment path.

On disk a dataset is a directory of shape-prefixed binary arrays
(see :func:`write_array`) and a ``manifest.yaml``.

Version history
---------------

**2024.10**
- nearest-sample alignment, binarization, synthetic generator
- optional human-hand mocap path through retargeting

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

import os
import logging
import struct
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from . import kinematics
from . import noise
from . import transforms as tf
from . import environment as env
from .config import as_plain, config_digest, dump_yaml, load_yaml
from .errors import (ValidationError, CoverageError, IntegrityError,
                     ConfigError, DimensionError)
from .render import Camera, render_scene

logger = logging.getLogger(__name__)

TACTILE_THRESHOLD = 0.4
TACTILE_ON_VOLTAGE = 0.8
N_TACTILE = 40
N_ACTION = 48
OBJECT_DIM = 11
TIE_TOL = 1e-9

VTAOFrame = namedtuple('VTAOFrame', ['image', 'tactile', 'action',
                                     'future_actions', 'object',
                                     'timestamp'])
ObjectLabel = namedtuple('ObjectLabel', ['position', 'orientation', 'sizes'])
StreamSample = namedtuple('StreamSample', ['timestamp', 'payload'])


def object_vector(label):
    """ 11 numbers: position, (w, x, y, z) quaternion, sizes """
    return np.concatenate([label.position, label.orientation, label.sizes])


def object_from_vector(v):
    v = np.asarray(v, dtype=float)
    return ObjectLabel(v[:3], v[3:7], v[7:11])


class SensorStream(object):
    """ timestamps (N,) and payload (N, D) of one sensor at ``rate`` Hz """
    def __init__(self, timestamps, payload, rate, name='stream'):
        self.timestamps = np.asarray(timestamps, dtype=float)
        self.payload = np.asarray(payload)
        self.rate = float(rate)
        self.name = name
        if self.payload.shape[0] != self.timestamps.shape[0]:
            raise DimensionError("%s: %d timestamps but %d payload rows"
                                 % (name, len(self.timestamps),
                                    self.payload.shape[0]))

    @classmethod
    def from_samples(cls, samples, rate, name='stream'):
        samples = list(samples)
        return cls([s.timestamp for s in samples],
                   np.array([s.payload for s in samples]), rate, name)

    def samples(self):
        for t, x in zip(self.timestamps, self.payload):
            yield StreamSample(t, x)

    @property
    def period(self):
        return 1.0 / self.rate

    def __len__(self):
        return len(self.timestamps)


def _as_stream(s, rate, name):
    if isinstance(s, SensorStream):
        return s
    return SensorStream.from_samples(s, rate, name)


def nearest_indices(timestamps, query):
    """ index of the nearest timestamp for every query time

    ``timestamps`` must be strictly increasing. Ties (within 1e-9 s) go to
    the earlier sample.
    """
    ts = np.asarray(timestamps, dtype=float)
    query = np.asarray(query, dtype=float)
    if len(ts) == 1:
        return np.zeros(query.shape, dtype=int)
    hi = np.clip(np.searchsorted(ts, query), 1, len(ts) - 1)
    lo = hi - 1
    earlier = (query - ts[lo]) <= (ts[hi] - query) + TIE_TOL
    return np.where(earlier, lo, hi)


def _check_increasing(ts, name):
    if len(ts) == 0:
        raise ValidationError("%s stream is empty" % name)
    if not np.all(np.isfinite(ts)):
        raise ValidationError("%s timestamps are not finite" % name)
    if np.any(np.diff(ts) <= 0):
        bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
        raise ValidationError("%s timestamps not strictly increasing at "
                              "sample %d" % (name, bad))


def align_streams(visual_ts, tactile, mocap, tactile_rate=200.0,
                  mocap_rate=1000.0):
    """ Nearest-sample alignment of tactile and mocap onto video frames

    Parameters
    ----------
    visual_ts: np.array
        frame timestamps in seconds
    tactile, mocap: SensorStream or sequence of StreamSample
    tactile_rate, mocap_rate: float
        used when plain sample sequences are given

    Returns
    -------
    (tactile_payload, mocap_payload): per visual frame, first axis len(visual_ts)

    Raises
    ------
    ValidationError
        empty stream or timestamps not strictly increasing
    CoverageError
        a frame lies more than one stream period outside a stream
    """
    visual_ts = np.asarray(visual_ts, dtype=float)
    _check_increasing(visual_ts, 'visual')
    out = []
    for s, rate, name in ((tactile, tactile_rate, 'tactile'),
                          (mocap, mocap_rate, 'mocap')):
        s = _as_stream(s, rate, name)
        _check_increasing(s.timestamps, name)
        outside = (visual_ts < s.timestamps[0] - s.period) | \
            (visual_ts > s.timestamps[-1] + s.period)
        if np.any(outside):
            idx = np.flatnonzero(outside)
            raise CoverageError("%d visual frames outside the %s stream "
                                "coverage [%g, %g]"
                                % (len(idx), name, s.timestamps[0],
                                   s.timestamps[-1]), idx)
        out.append(s.payload[nearest_indices(s.timestamps, visual_ts)])
    return tuple(out)


def alignment_errors(stream_ts, visual_ts):
    """ |selected timestamp - frame timestamp| for every frame """
    stream_ts = np.asarray(stream_ts, dtype=float)
    idx = nearest_indices(stream_ts, visual_ts)
    return np.abs(stream_ts[idx] - np.asarray(visual_ts))


def binarize_tactile(raw, threshold=TACTILE_THRESHOLD):
    """ 1 where raw > threshold (strict), else 0

    Raises
    ------
    ValidationError
        on NaN input
    """
    raw = np.asarray(raw, dtype=float)
    if np.any(np.isnan(raw)):
        raise ValidationError("tactile voltages contain NaN")
    return (raw > threshold).astype(np.uint8)


def make_object_label(bottle_pose_world, camera_pose_world, sizes):
    """ bottle pose in the camera frame, inverse(camera) * bottle

    Parameters
    ----------
    bottle_pose_world, camera_pose_world: (position, (w, x, y, z) quaternion)
    sizes: sequence of 4 floats
        body radius, body height, cap radius, cap height

    Returns
    -------
    ObjectLabel, with a unit quaternion of non-negative w

    Raises
    ------
    ValidationError
        non-unit quaternion (norm off by more than 1e-3) or invalid sizes
    """
    tf.check_unit(bottle_pose_world[1], name="bottle quaternion")
    tf.check_unit(camera_pose_world[1], name="camera quaternion")
    sizes = np.asarray(sizes, dtype=float)
    if sizes.shape != (4,) or np.any(~(sizes > 0)):
        raise ValidationError("sizes must be 4 positive values")
    if not sizes[2] < sizes[0]:
        raise ValidationError("cap radius must be below body radius")
    pos, quat = tf.pose_compose(tf.pose_inverse(camera_pose_world),
                                bottle_pose_world)
    quat = tf.canonical_quat(quat / np.linalg.norm(quat))
    return ObjectLabel(pos, quat, sizes)


@dataclass
class GeneratorConfig:
    """ synthetic dataset settings """
    n_trajectories: int = 8
    frames_per_trajectory: int = 60
    p: int = 5
    image_size: int = 224
    visual_rate: float = 30.0
    tactile_rate: float = 200.0
    mocap_rate: float = 1000.0
    tactile_jitter: float = 1e-4
    mocap_jitter: float = 1e-5
    tactile_noise: float = 0.05
    mocap_noise: float = 0.0
    body_radius: tuple = env.BOTTLE_RANGES['body_radius']
    body_height: tuple = env.BOTTLE_RANGES['body_height']
    cap_radius: tuple = env.BOTTLE_RANGES['cap_radius']
    cap_height: tuple = env.BOTTLE_RANGES['cap_height']
    keyframes: int = 8
    contact_eps: float = 0.01
    retarget: bool = False

    def validate(self):
        if self.n_trajectories < 1 or self.frames_per_trajectory < 1:
            raise ConfigError("need at least one trajectory and frame")
        if self.p < 0 or self.frames_per_trajectory <= self.p:
            raise ConfigError("frames_per_trajectory (%d) must exceed p (%d)"
                              % (self.frames_per_trajectory, self.p))
        for key in ('body_radius', 'body_height', 'cap_radius',
                    'cap_height'):
            lo, hi = getattr(self, key)
            if not 0 < lo <= hi:
                raise ConfigError("%s range (%g, %g) needs 0 < lo <= hi"
                                  % (key, lo, hi))
        if not self.cap_radius[0] < self.body_radius[1]:
            raise ConfigError("cap_radius range leaves no bottle with "
                              "cap radius below body radius")
        if self.keyframes < 4:
            raise ConfigError("a cubic spline needs at least 4 keyframes")
        if min(self.visual_rate, self.tactile_rate, self.mocap_rate) <= 0:
            raise ConfigError("stream rates must be positive")
        return self


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _dof(model, names):
    return [model.dof_names.index(n) for n in names]


class ScriptedEpisode(object):
    """ grasp-then-twist motion around one bottle, continuous in time

    The left hand closes its fingers around the body during the first 40%
    of the episode, the bottle is then lifted slightly and tilted. The right
    hand curls three fingers onto the cap and sweeps them sideways. Joint
    keyframes are randomized and joined by a cubic spline.
    """
    def __init__(self, bottle, duration, cfg, rng):
        self.bottle = bottle
        self.duration = duration
        self.model = env.robot_hand()
        m = self.model
        s = np.linspace(0.0, 1.0, cfg.keyframes)
        q = np.tile(m.rest_pose(), (cfg.keyframes, 2))

        grip = rng.uniform(0.5, 0.9)
        close = _smoothstep(s / 0.4)[:, None]
        for f in ('FF', 'MF', 'RF', 'LF'):
            j3, j2 = _dof(m, [f + 'J3', f + 'J2'])
            q[:, j3] = grip * close[:, 0]
            q[:, j2] = 0.5 * grip * close[:, 0]
        q[:, _dof(m, ['THJ4'])[0]] = 0.6 * grip * close[:, 0]

        curl = rng.uniform(0.3, 0.7)
        reach = _smoothstep((s - 0.2) / 0.3)
        cycles = rng.uniform(1.5, 3.0)
        sweep = 0.3 * np.sin(2.0 * np.pi * cycles * np.clip(s - 0.4, 0, 1))
        off = m.n_dof
        for f in ('FF', 'MF', 'RF'):
            j4, j3, j2 = _dof(m, [f + 'J4', f + 'J3', f + 'J2'])
            q[:, off + j3] = curl * reach
            q[:, off + j2] = 0.5 * curl * reach
            q[:, off + j4] = sweep * (s > 0.4)

        q[1:-1] += rng.normal(0.0, 0.03, q[1:-1].shape)
        for h in range(2):
            sl = slice(h * m.n_dof, (h + 1) * m.n_dof)
            q[:, sl] = kinematics.apply_coupling(
                m, np.clip(q[:, sl], m.lower, m.upper))
        self.spline = make_interp_spline(s * duration, q, k=3)

        self.lift = rng.uniform(0.0, 0.02)
        self.tilt = rng.uniform(-0.05, 0.05)
        self.wrists = env.hand_root_poses(bottle, m)

    def joints(self, t):
        """ (len(t), 48) joint angles, limits and couplings enforced """
        m = self.model
        q = self.spline(np.clip(t, 0.0, self.duration)).reshape(-1, 2,
                                                                m.n_dof)
        q = kinematics.apply_coupling(m, np.clip(q, m.lower, m.upper))
        return q.reshape(-1, 2 * m.n_dof)

    def bottle_pose(self, t):
        """ body-center position and quaternion at time t (scalar) """
        u = _smoothstep((t / self.duration - 0.5) / 0.3)
        pos = np.array([0.0, 0.0, 0.5 * self.bottle.body_height +
                        self.lift * u])
        quat = tf.quat_from_rotvec([self.tilt * u, 0.0, 0.0])
        return pos, quat

    def links(self, q):
        """ world positions of all links, (N, 2, n_links, 3) """
        m = self.model
        p = kinematics.link_positions(m, q.reshape(-1, 2, m.n_dof))
        out = np.empty_like(p)
        for h, (pos, quat) in enumerate(self.wrists):
            out[:, h] = p[:, h] @ tf.quat_to_matrix(quat).T + pos
        return out

    def contacts(self, t, eps):
        """ (len(t), 40) contact bits of the tactile probes """
        m = self.model
        links = self.links(self.joints(t))
        bits = np.zeros((len(t), N_TACTILE), dtype=np.uint8)
        for i, ti in enumerate(t):
            pos, quat = self.bottle_pose(ti)
            probes = links[i][:, m.probe_links].reshape(-1, 3)
            body, cap = env.bottle_contacts(probes, pos, quat, self.bottle,
                                            eps)
            bits[i] = body | cap
        return bits


def _sample_bottle(cfg, rng, name):
    while True:
        b = env.BottleSpec(float(rng.uniform(*cfg.body_radius)),
                           float(rng.uniform(*cfg.body_height)),
                           float(rng.uniform(*cfg.cap_radius)),
                           float(rng.uniform(*cfg.cap_height)),
                           160.0, name)
        if b.cap_radius < b.body_radius:
            return b


_HUMAN_MAP = [
    ('IDX_ABD', 'FFJ4'), ('IDX_MCP', 'FFJ3'), ('IDX_PIP', 'FFJ2'),
    ('IDX_DIP', 'FFJ1'), ('MID_ABD', 'MFJ4'), ('MID_MCP', 'MFJ3'),
    ('MID_PIP', 'MFJ2'), ('MID_DIP', 'MFJ1'), ('RNG_ABD', 'RFJ4'),
    ('RNG_MCP', 'RFJ3'), ('RNG_PIP', 'RFJ2'), ('RNG_DIP', 'RFJ1'),
    ('LIT_ABD', 'LFJ4'), ('LIT_MCP', 'LFJ3'), ('LIT_PIP', 'LFJ2'),
    ('LIT_DIP', 'LFJ1'), ('TH_CMC_ROT', 'THJ5'), ('TH_CMC_FLEX', 'THJ4'),
    ('TH_MCP_ABD', 'THJ2'), ('TH_MCP_FLEX', 'THJ3'), ('TH_IP', 'THJ1'),
]


def robot_to_human_angles(robot, human, q):
    """ joint-by-joint analogue of robot angles on the human hand model

    Stands in for captured human motion; angles are clamped to the human
    limits. ``q`` has shape (..., robot.n_dof).
    """
    q = np.asarray(q, dtype=float)
    out = np.zeros(q.shape[:-1] + (human.n_dof,))
    for h_name, r_name in _HUMAN_MAP:
        out[..., human.dof_names.index(h_name)] = \
            q[..., robot.dof_names.index(r_name)]
    return np.clip(out, human.lower, human.upper)


def synthesize_streams(episode, n_frames, cfg, rng):
    """ Sample a scripted episode as raw 30/200/1000 Hz sensor streams

    Returns
    -------
    (visual_ts, tactile, mocap): frame times and two SensorStreams; the
    tactile payload holds glove voltages, the mocap payload joint angles
    (robot, or human when ``cfg.retarget``)
    """
    visual_ts = np.arange(n_frames) / cfg.visual_rate
    stop = visual_ts[-1] + 2.0 / cfg.visual_rate
    t_tac = noise.jittered_timestamps(0.0, stop, cfg.tactile_rate,
                                      cfg.tactile_jitter, rng)
    t_moc = noise.jittered_timestamps(0.0, stop, cfg.mocap_rate,
                                      cfg.mocap_jitter, rng)
    bits = episode.contacts(t_tac, cfg.contact_eps)
    volts = TACTILE_ON_VOLTAGE * bits
    volts = volts + noise.white(volts.shape,
                                b0=2.0 * cfg.tactile_noise ** 2 /
                                cfg.tactile_rate,
                                fs=cfg.tactile_rate, rng=rng)
    angles = episode.joints(t_moc)
    if cfg.retarget:
        human = kinematics.load_hand_model('human21')
        robot = episode.model
        angles = np.concatenate(
            [robot_to_human_angles(robot, human, angles[:, :robot.n_dof]),
             robot_to_human_angles(robot, human, angles[:, robot.n_dof:])],
            axis=1)
    if cfg.mocap_noise > 0:
        angles = angles + noise.white(angles.shape,
                                      b0=2.0 * cfg.mocap_noise ** 2 /
                                      cfg.mocap_rate,
                                      fs=cfg.mocap_rate, rng=rng)
    return (visual_ts,
            SensorStream(t_tac, volts, cfg.tactile_rate, 'tactile'),
            SensorStream(t_moc, angles, cfg.mocap_rate, 'mocap'))


def _retarget_hands(mocap, config=None):
    from .retargeting import retarget_batch
    robot = env.robot_hand()
    human = kinematics.load_hand_model('human21')
    n = human.n_dof
    left, right = retarget_batch(robot, human, [mocap[:, :n], mocap[:, n:]],
                                 workers=2, config=config)
    return np.concatenate([left, right], axis=1)


class VTAODataset(object):
    """ In-memory VTAO frames

    :Example:
        ::

            ds = vtaobimanip.generate_synthetic_dataset(GeneratorConfig(), 0)
            frame = ds.frame(0)
            batch = ds.batch([0, 1, 2])
            ds.save("data/")

    Attributes
    ----------
    images: np.array, uint8 (N, H, W, 3)
    tactile: np.array, uint8 (N, 40)
    actions: np.array, float32 (N, 48)
    future_actions: np.array, float32 (N, p, 48)
    objects: np.array, float32 (N, 11)
    timestamps: np.array, float64 (N,)
    trajectory: np.array, int32 (N,)
    meta: dict
        p, seed, image_size and the generator config with its digest
    """
    ARRAYS = (('images', np.uint8), ('tactile', np.uint8),
              ('actions', np.float32), ('future_actions', np.float32),
              ('objects', np.float32), ('timestamps', np.float64),
              ('trajectory', np.int32))

    def __init__(self, images, tactile, actions, future_actions, objects,
                 timestamps, trajectory, meta=None):
        self.images = np.ascontiguousarray(images, dtype=np.uint8)
        self.tactile = np.ascontiguousarray(tactile, dtype=np.uint8)
        self.actions = np.ascontiguousarray(actions, dtype=np.float32)
        self.future_actions = np.ascontiguousarray(future_actions,
                                                   dtype=np.float32)
        self.objects = np.ascontiguousarray(objects, dtype=np.float32)
        self.timestamps = np.ascontiguousarray(timestamps, dtype=np.float64)
        self.trajectory = np.ascontiguousarray(trajectory, dtype=np.int32)
        self.meta = dict(meta or {})
        self._check()

    def _check(self):
        n = len(self.images)
        for name, _ in self.ARRAYS:
            if len(getattr(self, name)) != n:
                raise DimensionError("%s has %d rows, images %d"
                                     % (name, len(getattr(self, name)), n))
        if self.images.ndim != 4 or self.images.shape[-1] != 3:
            raise DimensionError("images must be (N, H, W, 3)")
        if self.tactile.shape[1:] != (N_TACTILE,):
            raise DimensionError("tactile must be (N, 40)")
        if self.actions.shape[1:] != (N_ACTION,):
            raise DimensionError("actions must be (N, 48)")
        if self.future_actions.ndim != 3 or \
                self.future_actions.shape[2] != N_ACTION:
            raise DimensionError("future_actions must be (N, p, 48)")
        if self.objects.shape[1:] != (OBJECT_DIM,):
            raise DimensionError("objects must be (N, 11)")

    @property
    def p(self):
        return self.future_actions.shape[1]

    @property
    def image_size(self):
        return self.images.shape[1]

    def __len__(self):
        return len(self.images)

    def frame(self, i):
        """ frame i as a VTAOFrame with the image scaled to [0, 1] """
        return VTAOFrame(self.images[i].astype(np.float64) / 255.0,
                         self.tactile[i].copy(),
                         self.actions[i].astype(np.float64),
                         self.future_actions[i].astype(np.float64),
                         object_from_vector(self.objects[i]),
                         float(self.timestamps[i]))

    def batch(self, indices):
        """ dict of float32 arrays: image, tactile, action, future_actions,
        object """
        idx = np.asarray(indices, dtype=int)
        return {'image': self.images[idx].astype(np.float32) / 255.0,
                'tactile': self.tactile[idx].astype(np.float32),
                'action': self.actions[idx],
                'future_actions': self.future_actions[idx],
                'object': self.objects[idx]}

    def save(self, path):
        save_dataset(self, path)

    @classmethod
    def load(cls, path):
        return load_dataset(path)

    def write_summary(self, filename, header_params={}):
        """ Output per-trajectory frame counts and contact rates to text """
        from . import __version__
        with open(filename, 'w') as fp:
            fp.write("# Generated by vtaobimanip {}\n".format(__version__))
            fp.write("# frames: {}\n".format(len(self)))
            fp.write("# p: {}\n".format(self.p))
            for key, val in header_params.items():
                fp.write("# {}: {}\n".format(key, val))
            fp.write("{:>5s} {:>7s} {:>10s} {:>10s}\n".format(
                "traj", "frames", "contacts", "duration"))
            for k in np.unique(self.trajectory):
                sel = self.trajectory == k
                ts = self.timestamps[sel]
                fp.write("{:5d} {:7d} {:10.4f} {:10.4f}\n".format(
                    int(k), int(sel.sum()),
                    float(self.tactile[sel].mean()),
                    float(ts[-1] - ts[0])))


def generate_synthetic_dataset(config=None, seed=0, out=None):
    """ Generate a synthetic VTAO dataset

    Every trajectory has ``frames_per_trajectory`` visual frames of which
    the last ``p`` are dropped, so that each kept frame has p future
    actions. The same seed gives byte-identical output.

    Parameters
    ----------
    config: GeneratorConfig
    seed: int
    out: str, optional
        directory to save the dataset to

    Returns
    -------
    VTAODataset

    Raises
    ------
    ConfigError
        invalid ranges
    """
    cfg = (config or GeneratorConfig()).validate()
    rng = np.random.default_rng(seed)
    camera = Camera(image_size=cfg.image_size)
    cam_pose = (np.asarray(camera.position, dtype=float), camera.quat)
    F = cfg.frames_per_trajectory
    keep = F - cfg.p
    cols = dict((name, []) for name, _ in VTAODataset.ARRAYS)
    for k in range(cfg.n_trajectories):
        bottle = _sample_bottle(cfg, rng, 'traj%03d' % k)
        episode = ScriptedEpisode(bottle, (F + 1) / cfg.visual_rate, cfg, rng)
        visual_ts, tactile, mocap = synthesize_streams(episode, F, cfg, rng)
        volts, angles = align_streams(visual_ts, tactile, mocap)
        bits = binarize_tactile(volts)
        actions = _retarget_hands(angles) if cfg.retarget else angles
        q_scene = episode.joints(visual_ts)
        links = episode.links(q_scene)
        m = episode.model
        idx = [0, m.palm_link] + list(m.probe_links)
        for i in range(keep):
            pos, quat = episode.bottle_pose(visual_ts[i])
            spheres = [(links[i, 0, idx], 'left_hand'),
                       (links[i, 1, idx], 'right_hand')]
            image, _ = render_scene(camera, pos, quat, bottle, spheres)
            label = make_object_label((pos, quat), cam_pose, bottle.sizes)
            cols['images'].append(np.round(image * 255.0).astype(np.uint8))
            cols['tactile'].append(bits[i])
            cols['actions'].append(actions[i])
            cols['future_actions'].append(
                actions[i + 1:i + 1 + cfg.p].reshape(cfg.p, N_ACTION))
            cols['objects'].append(object_vector(label))
            cols['timestamps'].append(visual_ts[i])
            cols['trajectory'].append(k)
        logger.info("trajectory %d/%d: bottle %s, %d frames, contact rate "
                    "%.3f", k + 1, cfg.n_trajectories, bottle.name, keep,
                    float(bits[:keep].mean()))
    meta = {'seed': int(seed), 'p': cfg.p, 'image_size': cfg.image_size,
            'generator': as_plain(cfg), 'config_hash': config_digest(cfg)}
    ds = VTAODataset(np.stack(cols['images']), np.stack(cols['tactile']),
                     np.stack(cols['actions']),
                     np.stack(cols['future_actions']),
                     np.stack(cols['objects']),
                     np.array(cols['timestamps']),
                     np.array(cols['trajectory']), meta)
    if out is not None:
        save_dataset(ds, out)
    return ds


########################################################################
# On-disk format

MAGIC = b'VTAOARR1'


def write_array(filename, array):
    """ Write one array: magic, dtype string, ndim, shape, raw payload

    The header is little-endian: 8-byte magic, 4-byte dtype length, the
    numpy dtype string, 4-byte ndim and one 8-byte unsigned per dimension.
    """
    a = np.ascontiguousarray(array)
    a = a.astype(a.dtype.newbyteorder('<'), copy=False)
    dt = a.dtype.str.encode('ascii')
    with open(filename, 'wb') as f:
        f.write(MAGIC)
        f.write(struct.pack('<I', len(dt)))
        f.write(dt)
        f.write(struct.pack('<I', a.ndim))
        f.write(struct.pack('<%dQ' % a.ndim, *a.shape))
        f.write(a.tobytes())


def read_array(filename):
    """ read an array written by :func:`write_array`

    Raises
    ------
    IntegrityError
        bad magic, truncated header or payload size mismatch
    """
    with open(filename, 'rb') as f:
        data = f.read()
    try:
        if data[:8] != MAGIC:
            raise IntegrityError("%s: not a vtaobimanip array file"
                                 % filename)
        pos = 8
        (n,) = struct.unpack_from('<I', data, pos)
        pos += 4
        dtype = np.dtype(data[pos:pos + n].decode('ascii'))
        pos += n
        (ndim,) = struct.unpack_from('<I', data, pos)
        pos += 4
        shape = struct.unpack_from('<%dQ' % ndim, data, pos)
        pos += 8 * ndim
    except (struct.error, UnicodeDecodeError, TypeError) as e:
        raise IntegrityError("%s: corrupt header (%s)" % (filename, e))
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) - pos != expected:
        raise IntegrityError("%s: payload has %d bytes, shape %s needs %d"
                             % (filename, len(data) - pos, shape, expected))
    return np.frombuffer(data, dtype=dtype, offset=pos).reshape(shape).copy()


def save_dataset(dataset, path):
    """ write arrays and manifest.yaml into directory ``path`` """
    os.makedirs(path, exist_ok=True)
    manifest = {'format': 1, 'frames': len(dataset), 'p': dataset.p,
                'image_size': dataset.image_size, 'arrays': {}}
    manifest.update(dict((k, v) for k, v in dataset.meta.items()
                         if k not in manifest))
    for name, _ in VTAODataset.ARRAYS:
        a = getattr(dataset, name)
        write_array(os.path.join(path, name + '.bin'), a)
        manifest['arrays'][name] = {'dtype': a.dtype.str,
                                    'shape': list(a.shape)}
    dump_yaml(manifest, os.path.join(path, 'manifest.yaml'))
    logger.info("saved %d frames to %s", len(dataset), path)


def load_dataset(path):
    """ Load a dataset directory written by :func:`save_dataset`

    Raises
    ------
    IntegrityError
        missing files, or arrays disagreeing with the manifest
    """
    mpath = os.path.join(path, 'manifest.yaml')
    if not os.path.exists(mpath):
        raise IntegrityError("%s: no manifest.yaml" % path)
    manifest = load_yaml(mpath)
    arrays = {}
    for name, dtype in VTAODataset.ARRAYS:
        fname = os.path.join(path, name + '.bin')
        if not os.path.exists(fname):
            raise IntegrityError("%s: missing array %s" % (path, name))
        a = read_array(fname)
        entry = manifest.get('arrays', {}).get(name, {})
        if list(a.shape) != list(entry.get('shape', a.shape)) or \
                a.dtype != np.dtype(dtype):
            raise IntegrityError("%s: %s has shape %s dtype %s, manifest "
                                 "says %s" % (path, name, a.shape, a.dtype,
                                              entry))
        if len(a) != manifest.get('frames'):
            raise IntegrityError("%s: manifest lists %s frames, %s has %d"
                                 % (path, manifest.get('frames'), name,
                                    len(a)))
        arrays[name] = a
    if arrays['future_actions'].shape[1] != manifest.get('p'):
        raise IntegrityError("%s: manifest p=%s, arrays hold %d future "
                             "steps" % (path, manifest.get('p'),
                                        arrays['future_actions'].shape[1]))
    meta = dict((k, v) for k, v in manifest.items()
                if k not in ('arrays', 'format', 'frames'))
    return VTAODataset(meta=meta, **arrays)
