"""
Bimanual cap-unscrewing environment
===================================

A kinematic-contact surrogate of the bimanual bottle-cap task. Two robot
hands (``robot24`` models) face a procedurally sized bottle standing at the
table center. The left hand starts in a pre-grasp pose beside the body;
the right hand hangs above the cap with its fingers pointing down.

World frame: table top at z = 0, bottle axis through the origin. The bottle
pose is the pose of the body center, the cap sits on top of the body.

Each step:

1. finger joints move by ``action * finger_scale`` (actuated joints only,
   tendon-coupled joints mirror their drivers) and are clamped
2. the left wrist moves by ``action[40:43] * wrist_pos_scale`` and rotates
   by the rotation vector ``action[43:46] * wrist_rot_scale``
3. stage 2 only: with at least ``attach_contacts`` left-hand contacts the
   bottle is rigidly attached to the left palm, otherwise it falls freely
   (semi-implicit Euler)
4. contacts are recomputed; the cap turns by ``k_c`` times the mean
   tangential travel of right fingertips touching the cap
5. the episode ends on success (cap angle > pi), a dropped bottle or the
   horizon

The shaped rewards follow the two curriculum stages, see
:func:`reward_stage1` and :func:`reward_stage2`.

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
import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, asdict

import numpy as np
from scipy.spatial.transform import Rotation

from . import kinematics
from . import transforms as tf
from .errors import (DimensionError, ValidationError, EnvironmentStateError,
                     ConfigError)
from .realtime import SuccessTracker
from .render import Camera, render_scene

logger = logging.getLogger(__name__)

N_ACTUATED = 20
ACTION_DIM = 2 * N_ACTUATED + 6
N_JOINTS = 24
PROPRIO_DIM = 2 * N_JOINTS * 2 + 7 + 6
N_PROBES = 20

# reward weights of the two curriculum stages
ALPHA = (-5.0, 0.05, 0.5, 1.1, 0.5)
BETA = (1.0, 1.0, 1.0)
CAP_ANGLE_CLAMP = 7.0
SUCCESS_ANGLE = np.pi

# hand orientations, columns are the hand x, y, z axes in the world
LEFT_HAND_ROT = np.array([[1.0, 0.0, 0.0],
                          [0.0, 0.0, -1.0],
                          [0.0, 1.0, 0.0]])
RIGHT_HAND_ROT = np.array([[0.0, 0.0, -1.0],
                           [0.0, -1.0, 0.0],
                           [-1.0, 0.0, 0.0]])
LEFT_CLEARANCE = 0.011
RIGHT_CLEARANCE = 0.012
RIGHT_GRIP_HEIGHT = 0.7

# procedural bottle parameter ranges (meters, rad/m)
BOTTLE_RANGES = {
    'body_radius': (0.030, 0.045),
    'body_height': (0.090, 0.140),
    'cap_radius': (0.014, 0.022),
    'cap_height': (0.020, 0.030),
    'k_c': (120.0, 180.0),
}
SET_MARGIN = 0.05


@dataclass(frozen=True)
class BottleSpec:
    """ procedural bottle: two coaxial cylinders and a cap friction gain """
    body_radius: float = 0.035
    body_height: float = 0.10
    cap_radius: float = 0.018
    cap_height: float = 0.025
    k_c: float = 160.0
    name: str = 'bottle'

    def validate(self):
        vals = (self.body_radius, self.body_height, self.cap_radius,
                self.cap_height, self.k_c)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ValidationError("%s: sizes and k_c must be positive"
                                  % self.name)
        if not self.cap_radius < self.body_radius:
            raise ValidationError("%s: cap radius must be below body radius"
                                  % self.name)
        return self

    @property
    def sizes(self):
        """ (body radius, body height, cap radius, cap height) """
        return np.array([self.body_radius, self.body_height,
                         self.cap_radius, self.cap_height])

    def normalized(self):
        keys = list(BOTTLE_RANGES)
        return np.array([(getattr(self, k) - BOTTLE_RANGES[k][0]) /
                         (BOTTLE_RANGES[k][1] - BOTTLE_RANGES[k][0])
                         for k in keys])


EASY_BOTTLE = BottleSpec(0.035, 0.10, 0.018, 0.025, 160.0, 'easy')


@dataclass
class EnvConfig:
    """ surrogate physics and rendering constants """
    dt: float = 1.0 / 30.0
    horizon: int = 300
    contact_eps: float = 0.01
    finger_scale: float = 0.05
    wrist_pos_scale: float = 0.01
    wrist_rot_scale: float = 0.02
    gravity: float = 9.81
    attach_contacts: int = 3
    drop_z: float = 0.0
    image_size: int = 224
    camera_position: tuple = (0.30, 0.0, 0.32)
    camera_target: tuple = (0.0, 0.0, 0.07)
    fov_deg: float = 60.0
    sphere_radius: float = 0.009
    init_noise: float = 0.0

    def validate(self):
        if self.dt <= 0 or self.horizon < 1 or self.contact_eps <= 0:
            raise ConfigError("dt, horizon and contact_eps must be positive")
        if self.image_size < 16:
            raise ConfigError("image_size must be at least 16")
        return self

    def camera(self):
        return Camera(tuple(self.camera_position), tuple(self.camera_target),
                      self.fov_deg, self.image_size)


@dataclass
class EnvState:
    """ complete state of one environment instance

    Joint arrays hold the left hand in [0:24] and the right hand in
    [24:48]. ``contacts`` flags the 40 probe links touching the bottle,
    ``cap_contacts`` those touching the cap; probe i hosts tactile sensor i.
    ``palm_point``, ``palm_target`` and ``right_tips`` are world positions
    cached by the last transition.
    """
    bottle: BottleSpec
    stage: int
    q: np.ndarray
    qd: np.ndarray
    wrist_pos: np.ndarray
    wrist_quat: np.ndarray
    wrist_twist: np.ndarray
    right_wrist_pos: np.ndarray
    right_wrist_quat: np.ndarray
    bottle_pos: np.ndarray
    bottle_quat: np.ndarray
    bottle_vel: np.ndarray
    cap_angle: float
    cap_vel: float
    q_ini: np.ndarray
    bottle_pos_ini: np.ndarray
    contacts: np.ndarray
    cap_contacts: np.ndarray
    contact_points: np.ndarray
    palm_point: np.ndarray
    palm_target: np.ndarray
    right_tips: np.ndarray
    attached: bool = False
    attach_pos: np.ndarray = None
    attach_quat: np.ndarray = None
    steps: int = 0
    done: bool = False
    success: bool = False
    dropped: bool = False

    @property
    def immobile(self):
        """ the bottle is fixed to the table in stage 1 """
        return self.stage == 1

    def copy(self):
        return copy.deepcopy(self)


@dataclass
class RewardBreakdown:
    """ reward terms of one transition, total = r_left + r_right """
    r_hdis: float = 0.0
    r_fcon: float = 0.0
    r_cang: float = 0.0
    r_cvel: float = 0.0
    r_fdis: float = 0.0
    r_htdis: float = 0.0
    r_bdis: float = 0.0
    r_brot: float = 0.0
    r_left: float = 0.0
    r_right: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return asdict(self)


REWARD_TERMS = [f.name for f in fields(RewardBreakdown)]


@dataclass
class Observation:
    """ what a policy sees; ``state`` is exposed for scripted controllers """
    image: np.ndarray
    tactile: np.ndarray
    proprio: np.ndarray
    state: EnvState = None


_ROBOT = None


def robot_hand():
    """ the shared robot24 model """
    global _ROBOT
    if _ROBOT is None:
        _ROBOT = kinematics.load_hand_model('robot24')
    return _ROBOT


def _probe_parts(model):
    """ link indices of the PIP probes of the four fingers and MF/RF tips """
    pips = [model.probe_links[4 * f + 1] for f in range(1, 5)]
    return pips, [model.fingertip_links[2], model.fingertip_links[3]]


def hand_root_poses(bottle, model=None):
    """ world poses of both wrists for a bottle standing at the origin

    The left wrist is placed so that the mean of the four finger PIP links
    lies ``LEFT_CLEARANCE`` outside the body at half height, the right
    wrist so that the mean of the MF and RF tips lies ``RIGHT_CLEARANCE``
    beside the cap at 70% of its height.
    """
    model = model or robot_hand()
    p = kinematics.link_positions(model, model.rest_pose())
    pips, tips = _probe_parts(model)
    left_target = np.array([0.0, -(bottle.body_radius + LEFT_CLEARANCE),
                            0.5 * bottle.body_height])
    right_target = np.array([-(bottle.cap_radius + RIGHT_CLEARANCE), 0.0,
                             bottle.body_height +
                             RIGHT_GRIP_HEIGHT * bottle.cap_height])
    left = (left_target - LEFT_HAND_ROT @ p[pips].mean(axis=0),
            tf.matrix_to_quat(LEFT_HAND_ROT))
    right = (right_target - RIGHT_HAND_ROT @ p[tips].mean(axis=0),
             tf.matrix_to_quat(RIGHT_HAND_ROT))
    return left, right


def world_links(model, q, wrist_poses):
    """ world positions of all links of both hands, (2, n_links, 3)

    Also returns the left palm pose as (position, rotation matrix).
    """
    T = kinematics.forward_kinematics(model, np.asarray(q).reshape(2, -1))
    out = np.empty((2, model.n_joints, 3))
    for h, (pos, quat) in enumerate(wrist_poses):
        R = tf.quat_to_matrix(quat)
        out[h] = T[h, :, :3, 3] @ R.T + pos
        if h == 0:
            palm_R = R @ T[0, model.palm_link, :3, :3]
            palm_p = out[0, model.palm_link]
    return out, (palm_p, palm_R)


def _palm_point(model, links):
    """ midpoint of the palm origin and the middle-finger knuckle """
    mf_knuckle = model.probe_links[4 * 2]
    return 0.5 * (links[0, model.palm_link] + links[0, mf_knuckle])


def _cylinder_distance(p, radius, z0, z1):
    rho = np.sqrt(p[..., 0]**2 + p[..., 1]**2)
    dr = np.maximum(rho - radius, 0.0)
    dz = np.maximum(np.maximum(z0 - p[..., 2], p[..., 2] - z1), 0.0)
    return np.sqrt(dr * dr + dz * dz)


def bottle_contacts(points, bottle_pos, bottle_quat, bottle, eps):
    """ contact flags of world points with the body and the cap

    A point is in contact when it lies within ``eps`` of the solid
    cylinder, penetration included.

    Returns
    -------
    (body, cap): two boolean arrays
    """
    pb = tf.inverse_transform_points(bottle_pos, bottle_quat, points)
    hb = 0.5 * bottle.body_height
    body = _cylinder_distance(pb, bottle.body_radius, -hb, hb) <= eps
    cap = _cylinder_distance(pb, bottle.cap_radius, hb,
                             hb + bottle.cap_height) <= eps
    return body, cap


def _probe_points(model, links):
    return links[:, model.probe_links, :].reshape(2 * N_PROBES, 3)


def _refresh(state, model, cfg, links=None):
    """ recompute contacts and cached world positions """
    if links is None:
        links, _ = world_links(model, state.q, _wrists(state))
    probes = _probe_points(model, links)
    body, cap = bottle_contacts(probes, state.bottle_pos, state.bottle_quat,
                                state.bottle, cfg.contact_eps)
    state.contacts = body | cap
    state.cap_contacts = cap
    state.contact_points = np.where(state.contacts[:, None], probes, 0.0)
    state.palm_point = _palm_point(model, links)
    state.right_tips = links[1, model.fingertip_links, :].copy()
    return links


def _wrists(state):
    return ((state.wrist_pos, state.wrist_quat),
            (state.right_wrist_pos, state.right_wrist_quat))


def reset(bottle, stage, seed=0, config=None):
    """ Initial state for a bottle and curriculum stage

    The layout is fixed; ``seed`` only matters when
    ``config.init_noise`` > 0, in which case the actuated finger joints
    start with uniform noise of that amplitude.
    """
    cfg = (config or EnvConfig()).validate()
    bottle.validate()
    if stage not in (1, 2):
        raise ValidationError("stage must be 1 or 2, got %r" % (stage,))
    model = robot_hand()
    rng = np.random.default_rng(seed)
    q = np.tile(model.rest_pose(), 2)
    if cfg.init_noise > 0:
        for h in range(2):
            qa = q[h * N_JOINTS:(h + 1) * N_JOINTS][model.actuated]
            qa = qa + rng.uniform(-cfg.init_noise, cfg.init_noise, qa.shape)
            q[h * N_JOINTS:(h + 1) * N_JOINTS] = kinematics.clamp_to_limits(
                model, kinematics.expand_actuated(model, qa))
    (lp, lq), (rp, rq) = hand_root_poses(bottle, model)
    bottle_pos = np.array([0.0, 0.0, 0.5 * bottle.body_height])
    state = EnvState(
        bottle=bottle, stage=stage, q=q, qd=np.zeros(2 * N_JOINTS),
        wrist_pos=lp, wrist_quat=lq, wrist_twist=np.zeros(6),
        right_wrist_pos=rp, right_wrist_quat=rq,
        bottle_pos=bottle_pos, bottle_quat=tf.IDENTITY_QUAT.copy(),
        bottle_vel=np.zeros(3), cap_angle=0.0, cap_vel=0.0,
        q_ini=tf.IDENTITY_QUAT.copy(), bottle_pos_ini=bottle_pos.copy(),
        contacts=np.zeros(2 * N_PROBES, dtype=bool),
        cap_contacts=np.zeros(2 * N_PROBES, dtype=bool),
        contact_points=np.zeros((2 * N_PROBES, 3)),
        palm_point=np.zeros(3), palm_target=np.zeros(3),
        right_tips=np.zeros((5, 3)))
    _refresh(state, model, cfg)
    state.palm_target = state.palm_point.copy()
    return state


def _tangential_travel(prev_tips, prev_pose, tips, pose):
    """ arc length of each tip around the bottle axis, bottle frame """
    a = tf.inverse_transform_points(prev_pose[0], prev_pose[1], prev_tips)
    b = tf.inverse_transform_points(pose[0], pose[1], tips)
    phi = np.arctan2(b[:, 1], b[:, 0]) - np.arctan2(a[:, 1], a[:, 0])
    phi = (phi + np.pi) % (2.0 * np.pi) - np.pi
    rho = 0.5 * (np.hypot(a[:, 0], a[:, 1]) + np.hypot(b[:, 0], b[:, 1]))
    return rho * phi


def step(state, action, config=None):
    """ Advance one control step

    Parameters
    ----------
    state: EnvState
        not modified
    action: np.array
        46 values in [-1, 1]: 20 left actuated joints, 20 right actuated
        joints, left wrist translation (3) and rotation vector (3);
        values outside are clipped

    Returns
    -------
    (EnvState, RewardBreakdown, done, info)

    Raises
    ------
    DimensionError, ValidationError
        wrong length or non-finite action
    EnvironmentStateError
        when the episode is already over
    """
    cfg = config or EnvConfig()
    action = np.asarray(action, dtype=float)
    if action.shape != (ACTION_DIM,):
        raise DimensionError("action must have %d entries, got shape %s"
                             % (ACTION_DIM, action.shape))
    if not np.all(np.isfinite(action)):
        raise ValidationError("action contains NaN or inf")
    if state.done:
        raise EnvironmentStateError("stepping a finished episode, "
                                    "call reset first")
    model = robot_hand()
    a = np.clip(action, -1.0, 1.0)
    s = state.copy()

    q = s.q.copy()
    for h in range(2):
        sl = slice(h * N_JOINTS, (h + 1) * N_JOINTS)
        qa = q[sl][model.actuated] + cfg.finger_scale * \
            a[h * N_ACTUATED:(h + 1) * N_ACTUATED]
        qa = np.clip(qa, model.lower[model.actuated],
                     model.upper[model.actuated])
        q[sl] = kinematics.expand_actuated(model, qa)
    s.qd = (q - state.q) / cfg.dt
    s.q = q

    dp = cfg.wrist_pos_scale * a[40:43]
    dr = cfg.wrist_rot_scale * a[43:46]
    s.wrist_pos = state.wrist_pos + dp
    s.wrist_quat = tf.from_rotation(Rotation.from_rotvec(dr) *
                                    tf.as_rotation(state.wrist_quat))
    s.wrist_twist = np.concatenate([dp, dr]) / cfg.dt

    links, (palm_p, palm_R) = world_links(model, s.q, _wrists(s))
    n_left = 0
    if s.stage == 2:
        body, cap = bottle_contacts(_probe_points(model, links)[:N_PROBES],
                                    s.bottle_pos, s.bottle_quat, s.bottle,
                                    cfg.contact_eps)
        n_left = int(np.sum(body | cap))
        if n_left >= cfg.attach_contacts:
            palm_quat = tf.matrix_to_quat(palm_R)
            if not s.attached:
                s.attach_pos, s.attach_quat = tf.pose_compose(
                    tf.pose_inverse((palm_p, palm_quat)),
                    (s.bottle_pos, s.bottle_quat))
                s.attached = True
            pos, quat = tf.pose_compose((palm_p, palm_quat),
                                        (s.attach_pos, s.attach_quat))
            s.bottle_vel = (pos - state.bottle_pos) / cfg.dt
            s.bottle_pos, s.bottle_quat = pos, quat
        else:
            s.attached = False
            s.bottle_vel = state.bottle_vel.copy()
            s.bottle_vel[2] -= cfg.gravity * cfg.dt
            s.bottle_pos = state.bottle_pos + s.bottle_vel * cfg.dt

    _refresh(s, model, cfg, links)
    if s.stage == 1:
        n_left = int(np.sum(s.contacts[:N_PROBES]))

    tip_probes = [model.probe_links.index(k) for k in model.fingertip_links]
    touching = s.cap_contacts[N_PROBES:][tip_probes]
    if np.any(touching):
        travel = _tangential_travel(
            state.right_tips, (state.bottle_pos, state.bottle_quat),
            s.right_tips, (s.bottle_pos, s.bottle_quat))
        s.cap_vel = s.bottle.k_c * float(np.mean(travel[touching])) / cfg.dt
    else:
        s.cap_vel = 0.0
    s.cap_angle = state.cap_angle + s.cap_vel * cfg.dt

    s.steps = state.steps + 1
    s.success = detect_success(s)
    s.dropped = bool(s.stage == 2 and s.bottle_pos[2] < cfg.drop_z)
    timeout = s.steps >= cfg.horizon
    s.done = bool(s.success or s.dropped or timeout)
    reward = reward_stage1(s) if s.stage == 1 else reward_stage2(s)
    info = {'success': s.success, 'dropped': s.dropped, 'timeout': timeout,
            'n_left_contacts': n_left, 'cap_angle': s.cap_angle}
    return s, reward, s.done, info


def _right_terms(state):
    a1, a2, a3, a4, a5 = ALPHA
    c_flag = 1.0 if np.any(state.cap_contacts[N_PROBES:]) else 0.0
    R = tf.quat_to_matrix(state.bottle_quat)
    top = state.bottle_pos + R @ np.array(
        [0.0, 0.0, 0.5 * state.bottle.body_height + state.bottle.cap_height])
    d_fz = float(np.mean(np.abs(state.right_tips[:, 2] - top[2])))
    r_cang = a3 * min(state.cap_angle, CAP_ANGLE_CLAMP)
    r_cvel = a4 * c_flag * state.cap_vel
    r_fdis = a5 * np.exp(-10.0 * d_fz)
    return r_cang, r_cvel, r_fdis


def distance_to_axis(point, bottle_pos, bottle_quat):
    """ distance of a point to the bottle's symmetry axis """
    axis = tf.quat_to_matrix(bottle_quat)[:, 2]
    v = np.asarray(point) - bottle_pos
    return float(np.linalg.norm(v - np.dot(v, axis) * axis))


def quaternion_angle(q_bot, q_ini):
    """ tilt measure 2*arcsin(min(|vec(q_bot * q_ini^-1)|, 1)) """
    q_diff = tf.quat_multiply(q_bot, tf.quat_inverse(q_ini))
    return 2.0 * np.arcsin(min(np.linalg.norm(q_diff[1:]), 1.0))


def reward_stage1(state):
    """ Stage-1 reward: left hand approaches and touches the fixed bottle,
    right hand turns the cap

    r_left  = a1*d_h2b + a2*N_con
    r_right = a3*min(a_c, 7) + a4*C_flag*v_c + a5*exp(-10*d_fz)
    """
    if state.stage != 1:
        raise EnvironmentStateError("reward_stage1 called in stage %d"
                                    % state.stage)
    a1, a2 = ALPHA[:2]
    d_h2b = distance_to_axis(state.palm_point, state.bottle_pos,
                             state.bottle_quat)
    n_con = int(np.sum(state.contacts[:N_PROBES]))
    r_hdis = a1 * d_h2b
    r_fcon = a2 * n_con
    r_cang, r_cvel, r_fdis = _right_terms(state)
    r_left = r_hdis + r_fcon
    r_right = r_cang + r_cvel + r_fdis
    return RewardBreakdown(r_hdis=r_hdis, r_fcon=r_fcon, r_cang=r_cang,
                           r_cvel=r_cvel, r_fdis=r_fdis, r_left=r_left,
                           r_right=r_right, total=r_left + r_right)


def reward_stage2(state):
    """ Stage-2 reward: left hand holds the free bottle still and upright,
    right hand terms as in stage 1

    r_left = b1*exp(-5*d_h2t) + b2*exp(-10*d_o2i) + b3/(|d_qua| + 1)
    """
    if state.stage != 2:
        raise EnvironmentStateError("reward_stage2 called in stage %d"
                                    % state.stage)
    b1, b2, b3 = BETA
    d_h2t = float(np.linalg.norm(state.palm_point - state.palm_target))
    d_o2i = float(np.linalg.norm(state.bottle_pos - state.bottle_pos_ini))
    d_qua = quaternion_angle(state.bottle_quat, state.q_ini)
    r_htdis = b1 * np.exp(-5.0 * d_h2t)
    r_bdis = b2 * np.exp(-10.0 * d_o2i)
    r_brot = b3 / (abs(d_qua) + 1.0)
    r_cang, r_cvel, r_fdis = _right_terms(state)
    r_left = r_htdis + r_bdis + r_brot
    r_right = r_cang + r_cvel + r_fdis
    return RewardBreakdown(r_cang=r_cang, r_cvel=r_cvel, r_fdis=r_fdis,
                           r_htdis=r_htdis, r_bdis=r_bdis, r_brot=r_brot,
                           r_left=r_left, r_right=r_right,
                           total=r_left + r_right)


def detect_success(state):
    """ cap turned by more than half a turn """
    return bool(state.cap_angle > SUCCESS_ANGLE)


def proprioception(state):
    """ joint angles, joint velocities, left wrist pose and twist (109) """
    return np.concatenate([state.q, state.qd, state.wrist_pos,
                           state.wrist_quat, state.wrist_twist])


def render_observation(state, bottle=None, config=None):
    """ Render the ego-centric image and read the 40 binary tactile bits

    Returns
    -------
    V_obs: np.array, (H, W, 3) float in [0, 1]
    C_obs: np.array, (40,) uint8, 1 where the host link is in contact
    """
    cfg = config or EnvConfig()
    bottle = bottle or state.bottle
    model = robot_hand()
    links, _ = world_links(model, state.q, _wrists(state))
    spheres = []
    for h, lab in enumerate(('left_hand', 'right_hand')):
        idx = [0, model.palm_link] + list(model.probe_links)
        spheres.append((links[h, idx], lab))
    image, _ = render_scene(cfg.camera(), state.bottle_pos, state.bottle_quat,
                            bottle, spheres, cfg.sphere_radius)
    return image, state.contacts.astype(np.uint8)


def make_bottle_sets(seed=0, n_seen=10, n_unseen=5, margin=SET_MARGIN):
    """ Sample the seen (training) and unseen (test) bottle sets

    Parameters are drawn uniformly from ``BOTTLE_RANGES``. Every unseen
    bottle is at least ``margin`` away from every seen bottle in the
    range-normalized parameter space.

    Returns
    -------
    (seen, unseen): two lists of BottleSpec
    """
    rng = np.random.default_rng(seed)
    keys = list(BOTTLE_RANGES)

    def draw(name):
        while True:
            vals = dict((k, float(rng.uniform(*BOTTLE_RANGES[k])))
                        for k in keys)
            if vals['cap_radius'] < vals['body_radius']:
                return BottleSpec(name=name, **vals)

    seen = [draw('seen%02d' % i) for i in range(n_seen)]
    seen_x = np.array([b.normalized() for b in seen])
    unseen = []
    while len(unseen) < n_unseen:
        b = draw('unseen%02d' % len(unseen))
        if np.min(np.linalg.norm(seen_x - b.normalized(), axis=1)) >= margin:
            unseen.append(b)
    return seen, unseen


class BimanualCapEnv(object):
    """ One environment instance owning its EnvState

    :Example:
        ::

            env = BimanualCapEnv(EASY_BOTTLE, stage=1)
            obs = env.reset(seed=0)
            obs, reward, done, info = env.step(numpy.zeros(46))
    """
    def __init__(self, bottle, stage=1, config=None, render=True):
        self.bottle = bottle.validate()
        self.stage = stage
        self.config = (config or EnvConfig()).validate()
        self.render = render
        self.state = None

    def observe(self):
        if self.render:
            image, tactile = render_observation(self.state, self.bottle,
                                                self.config)
        else:
            image, tactile = None, self.state.contacts.astype(np.uint8)
        return Observation(image, tactile, proprioception(self.state),
                           self.state)

    def reset(self, seed=0):
        self.state = reset(self.bottle, self.stage, seed, self.config)
        return self.observe()

    def step(self, action):
        if self.state is None:
            raise EnvironmentStateError("call reset before step")
        self.state, reward, done, info = step(self.state, action,
                                              self.config)
        return self.observe(), reward, done, info


class VecBimanualEnv(object):
    """ N independent environments with auto-reset

    Environment i uses ``bottles[i % len(bottles)]``. Finished episodes are
    pushed to ``tracker`` (1 for success) and immediately reset, so the
    observation returned for a finished instance is its new first
    observation. With ``workers`` > 1 the instances are stepped by a thread
    pool; each worker touches only its own instance and completions are
    recorded afterwards in index order.
    """
    def __init__(self, bottles, n_envs, stage=1, config=None, seed=0,
                 render=True, workers=1):
        self.config = (config or EnvConfig()).validate()
        self.envs = [BimanualCapEnv(bottles[i % len(bottles)], stage,
                                    self.config, render)
                     for i in range(n_envs)]
        self.n_envs = n_envs
        self.seed = seed
        self.episodes = np.zeros(n_envs, dtype=int)
        self.tracker = SuccessTracker(n_envs)
        self.completed = []     # (env index, success, cap angle, length)
        self.workers = workers
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    @property
    def stage(self):
        return self.envs[0].stage

    def _seed(self, i, episode=None):
        if episode is None:
            episode = self.episodes[i]
        return self.seed + 100003 * i + int(episode)

    def reset(self):
        return self._stack([env.reset(self._seed(i))
                            for i, env in enumerate(self.envs)])

    @staticmethod
    def _stack(obs):
        images = None if obs[0].image is None else \
            np.stack([o.image for o in obs])
        return Observation(images, np.stack([o.tactile for o in obs]),
                           np.stack([o.proprio for o in obs]),
                           [o.state for o in obs])

    def _step_one(self, i, action):
        env = self.envs[i]
        obs, reward, done, info = env.step(action)
        record = None
        if done:
            record = (i, bool(info['success']), float(info['cap_angle']),
                      env.state.steps)
            obs = env.reset(self._seed(i, self.episodes[i] + 1))
        return obs, reward, done, info, record

    def step(self, actions):
        """ step every instance, returns stacked (obs, rewards, dones, infos)
        """
        actions = np.asarray(actions, dtype=float)
        if self._pool is not None:
            results = list(self._pool.map(self._step_one,
                                          range(self.n_envs), actions))
        else:
            results = [self._step_one(i, a) for i, a in enumerate(actions)]
        obs, rewards, dones, infos, records = zip(*results)
        for record in records:
            if record is not None:
                i, success = record[:2]
                self.tracker.push(i, int(success))
                self.completed.append(record)
                self.episodes[i] += 1
        return self._stack(obs), list(rewards), np.array(dones), list(infos)

    def pop_completed(self):
        done, self.completed = self.completed, []
        return done

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


def env_rollout(bottle, stage=1, steps=100, policy='random', out_dir=None,
                seed=0, config=None):
    """ Run a scripted rollout and dump a per-step state trace

    Parameters
    ----------
    policy: {'random', 'zero'}
    out_dir: str, optional
        when given, ``trace.txt`` is written there

    Returns
    -------
    rows: list of dict
        one dict per step with cap angle and velocity, bottle position,
        contact counts and reward terms
    """
    cfg = config or EnvConfig()
    if policy not in ('random', 'zero'):
        raise ConfigError("unknown rollout policy '%s'" % policy)
    rng = np.random.default_rng(seed)
    state = reset(bottle, stage, seed, cfg)
    rows = []
    for t in range(steps):
        if state.done:
            state = reset(bottle, stage, seed + t, cfg)
        if policy == 'random':
            action = rng.uniform(-1.0, 1.0, ACTION_DIM)
        else:
            action = np.zeros(ACTION_DIM)
        state, reward, done, info = step(state, action, cfg)
        row = {'step': t, 'stage': stage, 'cap_angle': state.cap_angle,
               'cap_vel': state.cap_vel, 'bottle_x': state.bottle_pos[0],
               'bottle_y': state.bottle_pos[1],
               'bottle_z': state.bottle_pos[2],
               'n_left': int(np.sum(state.contacts[:N_PROBES])),
               'n_right': int(np.sum(state.contacts[N_PROBES:])),
               'done': int(done)}
        row.update(reward.as_dict())
        rows.append(row)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_trace(os.path.join(out_dir, 'trace.txt'), rows,
                    {'bottle': bottle.name, 'policy': policy, 'seed': seed})
    return rows


def write_trace(filename, rows, header_params={}):
    """ write rows of dicts as whitespace separated columns """
    from . import __version__
    keys = list(rows[0]) if rows else []
    with open(filename, 'w') as fp:
        fp.write("# Generated by vtaobimanip {}\n".format(__version__))
        for key, val in header_params.items():
            fp.write("# {}: {}\n".format(key, val))
        fp.write(" ".join("{:>12s}".format(k) for k in keys) + "\n")
        for row in rows:
            fp.write(" ".join("{:>12.6g}".format(float(row[k]))
                              for k in keys) + "\n")
