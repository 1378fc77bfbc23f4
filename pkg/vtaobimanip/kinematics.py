"""
Hand kinematics
===============

Articulated hand models, batched forward kinematics and the wrist-relative
target vectors used by retargeting.

A hand model is a tree of joints listed in topological order. Joint ``k``
places link ``k`` at a fixed ``offset`` in its parent link frame and then
rotates it by the joint angle about ``axis``::

    pose_k = pose_parent(k) * T(offset_k) * R(axis_k, q_k)

Joint 0 is the wrist; its link frame is the reference frame of every pose
returned here. Fixed joints carry no degree of freedom.

Two models ship with the package, see ``hands/robot24.yaml`` and
``hands/human21.yaml``::

    import vtaobimanip as vb
    robot = vb.load_hand_model("robot24")
    v = vb.target_vectors(robot, numpy.zeros(robot.n_dof))   # (10, 3)

Version history
---------------

**2024.10**
- batched forward kinematics, analytic point Jacobians
- tendon couplings and per-finger joint groups

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
from collections import namedtuple

import numpy as np
import yaml

from .errors import StructuralError, ValidationError, DimensionError
from .transforms import axis_angle_matrices

logger = logging.getLogger(__name__)

HANDS_DIR = os.path.join(os.path.dirname(__file__), 'hands')
BUILTIN_HANDS = ('robot24', 'human21')

AXIS_TOL = 1e-9
N_FINGERS = 5

JointSpec = namedtuple('JointSpec', ['name', 'parent', 'type', 'axis',
                                     'offset', 'limits', 'finger',
                                     'couple'])
JointSpec.__doc__ = """ one joint of a HandModel

parent is the parent joint index (-1 for the wrist), type is 'revolute'
or 'fixed', limits is (lo, hi) in radians, couple is the name of the
driving joint for tendon-coupled joints or None.
"""


class HandModel(object):
    """ Validated articulated hand, see :func:`build_hand_model`

    Attributes
    ----------
    name: str
    joints: list of JointSpec
    fingertip_links, segment_keypoints: list of int
        five link indices each, finger order thumb to little finger
    n_dof: int
        number of revolute joints, i.e. the length of a JointAngles vector
    lower, upper: np.array
        joint limits, length n_dof
    palm_link: int
    probe_links: list of int
        tactile sensor host links (may be empty)
    """

    def __init__(self, name, joints, fingertip_links, segment_keypoints,
                 palm_link=0, probe_links=(), fingers=()):
        self.name = name
        self.joints = list(joints)
        self.fingertip_links = list(fingertip_links)
        self.segment_keypoints = list(segment_keypoints)
        self.palm_link = int(palm_link)
        self.probe_links = list(probe_links)
        self.fingers = list(fingers)

        self.n_joints = len(self.joints)
        self.parents = np.array([j.parent for j in self.joints], dtype=int)
        self.axes = np.array([j.axis for j in self.joints], dtype=float)
        self.offsets = np.array([j.offset for j in self.joints], dtype=float)
        #: joint index of every degree of freedom
        self.revolute = np.array([k for k, j in enumerate(self.joints)
                                  if j.type == 'revolute'], dtype=int)
        self.n_dof = len(self.revolute)
        self.joint_names = [j.name for j in self.joints]
        self.dof_names = [self.joints[k].name for k in self.revolute]
        limits = np.array([self.joints[k].limits for k in self.revolute],
                          dtype=float).reshape(-1, 2)
        self.lower = limits[:, 0]
        self.upper = limits[:, 1]

        # ancestors[k, j] is True when joint j is a strict ancestor of link k
        self.ancestors = np.zeros((self.n_joints, self.n_joints), dtype=bool)
        for k in range(self.n_joints):
            a = self.parents[k]
            while a >= 0:
                self.ancestors[k, a] = True
                a = self.parents[a]

        dof_of_name = dict((n, i) for i, n in enumerate(self.dof_names))
        #: coupled dof -> driver dof
        self.couplings = {}
        for i, k in enumerate(self.revolute):
            if self.joints[k].couple is not None:
                self.couplings[i] = dof_of_name[self.joints[k].couple]
        self.actuated = np.array([i for i in range(self.n_dof)
                                  if i not in self.couplings], dtype=int)

        finger_index = dict((f, i) for i, f in enumerate(self.fingers))
        self.finger_of_dof = np.array(
            [finger_index.get(self.joints[k].finger, 0)
             for k in self.revolute], dtype=int)

    @property
    def target_links(self):
        """ the 10 links whose wrist-relative origins form a VectorSet """
        return self.fingertip_links + self.segment_keypoints

    def finger_groups(self):
        """ dof indices of each finger, wrist joints count as thumb """
        n = max(len(self.fingers), 1)
        return [np.flatnonzero(self.finger_of_dof == f) for f in range(n)]

    def rest_pose(self):
        """ zero angles clamped into the limits """
        return np.clip(np.zeros(self.n_dof), self.lower, self.upper)

    def __repr__(self):
        return "HandModel(%r, n_dof=%d, links=%d)" % (self.name, self.n_dof,
                                                      self.n_joints)


def _resolve_parent(parent, k, index_of):
    if parent is None:
        return -1
    if isinstance(parent, str):
        if parent not in index_of:
            raise StructuralError(
                "joint %d: parent '%s' is not an earlier joint" % (k, parent))
        return index_of[parent]
    return int(parent)


def _resolve_links(names, index_of, what):
    out = []
    for n in names:
        if isinstance(n, str):
            if n not in index_of:
                raise StructuralError("unknown %s link '%s'" % (what, n))
            out.append(index_of[n])
        else:
            out.append(int(n))
    return out


def build_hand_model(spec):
    """ Build and validate a HandModel from a model-description record

    Parameters
    ----------
    spec: dict
        keys ``name``, ``joints`` (list of dicts with ``name``, ``parent``,
        ``type``, ``axis``, ``offset``, ``limits``, optional ``finger`` and
        ``couple``), ``fingertips``, ``keypoints`` and optionally
        ``palm``, ``probes`` and ``fingers``. Links may be referenced by
        name or index.

    Returns
    -------
    HandModel

    Raises
    ------
    StructuralError
        parents out of topological order, unknown names, wrong number of
        fingertips or keypoints
    ValidationError
        non-unit axis, inverted limits
    """
    joints_in = spec.get('joints') or []
    if not joints_in:
        raise StructuralError("hand model has no joints")
    joints = []
    index_of = {}
    for k, js in enumerate(joints_in):
        name = js.get('name', 'joint%d' % k)
        parent = _resolve_parent(js.get('parent'), k, index_of)
        if k == 0 and parent != -1:
            raise StructuralError("joint 0 must be the wrist (no parent)")
        if k > 0 and not 0 <= parent < k:
            raise StructuralError(
                "joint %d ('%s') has parent %d, parents must come first"
                % (k, name, parent))
        jtype = js.get('type', 'revolute')
        if jtype not in ('revolute', 'fixed'):
            raise StructuralError("joint %d: unknown type '%s'" % (k, jtype))
        if k == 0 and jtype != 'fixed':
            raise StructuralError("the wrist joint must be fixed")
        axis = np.asarray(js.get('axis', (0.0, 0.0, 1.0)), dtype=float)
        if axis.shape != (3,):
            raise ValidationError("joint %d: axis must be a 3-vector" % k)
        norm = np.linalg.norm(axis)
        if jtype == 'revolute' and not abs(norm - 1.0) <= AXIS_TOL:
            raise ValidationError("joint %d ('%s'): axis norm %.12g is not 1"
                                  % (k, name, norm))
        axis = axis / norm if norm > 0 else axis
        offset = np.asarray(js.get('offset', (0.0, 0.0, 0.0)), dtype=float)
        if offset.shape != (3,):
            raise ValidationError("joint %d: offset must be a 3-vector" % k)
        limits = tuple(float(v) for v in js.get('limits', (0.0, 0.0)))
        if len(limits) != 2 or limits[0] > limits[1]:
            raise ValidationError("joint %d ('%s'): limits %s need lo <= hi"
                                  % (k, name, limits))
        couple = js.get('couple')
        if couple is not None and couple not in index_of:
            raise StructuralError("joint %d: coupled to unknown joint '%s'"
                                  % (k, couple))
        index_of[name] = k
        joints.append(JointSpec(name, parent, jtype, tuple(axis),
                                tuple(offset), limits, js.get('finger'),
                                couple))

    tips = _resolve_links(spec.get('fingertips', []), index_of, 'fingertip')
    keys = _resolve_links(spec.get('keypoints', []), index_of, 'keypoint')
    if len(tips) != N_FINGERS or len(keys) != N_FINGERS:
        raise StructuralError("need exactly 5 fingertips and 5 keypoints, "
                              "got %d and %d" % (len(tips), len(keys)))
    for link in tips + keys:
        if not 0 <= link < len(joints):
            raise StructuralError("link index %d out of range" % link)
    palm = _resolve_links([spec.get('palm', 0)], index_of, 'palm')[0]
    probes = _resolve_links(spec.get('probes', []), index_of, 'probe')
    model = HandModel(spec.get('name', 'hand'), joints, tips, keys,
                      palm_link=palm, probe_links=probes,
                      fingers=spec.get('fingers', ()))
    logger.debug("built %r", model)
    return model


def load_hand_model(name_or_path):
    """ load a built-in hand ('robot24', 'human21') or a YAML spec file """
    path = name_or_path
    if name_or_path in BUILTIN_HANDS:
        path = os.path.join(HANDS_DIR, name_or_path + '.yaml')
    with open(path) as f:
        spec = yaml.safe_load(f)
    return build_hand_model(spec)


def scale_hand_model(model, factor, name=None):
    """ copy of ``model`` with every link offset multiplied by ``factor`` """
    joints = [j._replace(offset=tuple(np.asarray(j.offset) * factor))
              for j in model.joints]
    return HandModel(name or "%s_x%g" % (model.name, factor), joints,
                     model.fingertip_links, model.segment_keypoints,
                     palm_link=model.palm_link,
                     probe_links=model.probe_links, fingers=model.fingers)


def _check_q(model, q):
    q = np.asarray(q, dtype=float)
    if q.ndim == 0 or q.shape[-1] != model.n_dof:
        raise DimensionError("%s expects %d joint angles, got shape %s"
                             % (model.name, model.n_dof, q.shape))
    return q


def _fk(model, q):
    """ rotations (B, J, 3, 3) and positions (B, J, 3) """
    qb = q.reshape(-1, model.n_dof)
    B = qb.shape[0]
    angles = np.zeros((B, model.n_joints))
    angles[:, model.revolute] = qb
    rots = axis_angle_matrices(model.axes[None, :, :], angles)
    R = np.empty((B, model.n_joints, 3, 3))
    p = np.empty((B, model.n_joints, 3))
    R[:, 0] = np.eye(3)
    p[:, 0] = 0.0
    for k in range(1, model.n_joints):
        par = model.parents[k]
        p[:, k] = p[:, par] + R[:, par] @ model.offsets[k]
        R[:, k] = R[:, par] @ rots[:, k]
    return R, p


def forward_kinematics(model, q):
    """ Poses of all links in the wrist frame

    Parameters
    ----------
    model: HandModel
    q: np.array
        joint angles, shape (n_dof,) or (..., n_dof)

    Returns
    -------
    poses: np.array
        homogeneous matrices, shape (..., n_links, 4, 4); link 0 is identity

    Raises
    ------
    DimensionError
        when the last axis of q is not n_dof
    """
    q = _check_q(model, q)
    R, p = _fk(model, q)
    T = np.zeros(R.shape[:2] + (4, 4))
    T[..., :3, :3] = R
    T[..., :3, 3] = p
    T[..., 3, 3] = 1.0
    return T.reshape(q.shape[:-1] + (model.n_joints, 4, 4))


def link_positions(model, q):
    """ link origins in the wrist frame, shape (..., n_links, 3) """
    q = _check_q(model, q)
    _, p = _fk(model, q)
    return p.reshape(q.shape[:-1] + (model.n_joints, 3))


def target_vectors(model, q):
    """ the VectorSet: 5 wrist->fingertip and 5 wrist->keypoint vectors

    Returns
    -------
    np.array, shape (..., 10, 3)
    """
    return link_positions(model, q)[..., model.target_links, :]


def point_jacobian(model, q, links):
    """ analytic positional Jacobian of link origins

    Parameters
    ----------
    q: np.array, shape (n_dof,)
    links: list of int

    Returns
    -------
    np.array, shape (len(links), 3, n_dof)
    """
    q = _check_q(model, q)
    if q.ndim != 1:
        raise DimensionError("point_jacobian takes a single configuration")
    R, p = _fk(model, q)
    R, p = R[0], p[0]
    links = np.asarray(links, dtype=int)
    joints = model.revolute
    # world axes and origins of every dof
    w = np.einsum('dij,dj->di', R[joints], model.axes[joints])
    lever = p[links][:, None, :] - p[joints][None, :, :]
    cols = np.cross(w[None, :, :], lever)
    cols = cols * model.ancestors[np.ix_(links, joints)][..., None]
    return np.transpose(cols, (0, 2, 1))


def clamp_to_limits(model, q):
    """ elementwise projection of q into [lower, upper]

    Raises
    ------
    ValidationError
        on NaN input
    """
    q = _check_q(model, q)
    if np.any(np.isnan(q)):
        raise ValidationError("joint angles contain NaN")
    return np.clip(q, model.lower, model.upper)


def apply_coupling(model, q):
    """ copy driver angles onto tendon-coupled joints """
    q = np.array(_check_q(model, q), dtype=float)
    for coupled, driver in model.couplings.items():
        q[..., coupled] = q[..., driver]
    return q


def actuated_indices(model):
    """ indices of the driver joints, coupled joints excluded """
    return model.actuated.copy()


def expand_actuated(model, q_act):
    """ full joint vector from the actuated subset """
    q_act = np.asarray(q_act, dtype=float)
    if q_act.shape[-1] != len(model.actuated):
        raise DimensionError("%s has %d actuated joints, got %d"
                             % (model.name, len(model.actuated),
                                q_act.shape[-1]))
    q = np.zeros(q_act.shape[:-1] + (model.n_dof,))
    q[..., model.actuated] = q_act
    return apply_coupling(model, q)
