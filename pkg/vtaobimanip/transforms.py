"""
Rigid transforms
================

Quaternion and pose helpers. Quaternions are stored in (w, x, y, z) order
throughout the package; :class:`scipy.spatial.transform.Rotation` uses
(x, y, z, w), the conversion happens here and nowhere else.

A pose is a pair ``(position, quaternion)`` or a 4x4 homogeneous matrix.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ValidationError

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def _to_xyzw(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., 1:], q[..., :1]], axis=-1)


def _to_wxyz(q):
    return np.concatenate([q[..., 3:], q[..., :3]], axis=-1)


def check_unit(q, tol=1e-3, name="quaternion"):
    """ raise ValidationError when |q| deviates from one by more than tol """
    n = np.linalg.norm(np.asarray(q, dtype=float), axis=-1)
    if not np.all(np.isfinite(n)) or np.any(np.abs(n - 1.0) > tol):
        raise ValidationError("%s is not unit: norm %s" % (name, n))


def as_rotation(q):
    """ scipy Rotation from (w, x, y, z) quaternion(s) """
    return Rotation.from_quat(_to_xyzw(q))


def from_rotation(r):
    """ (w, x, y, z) quaternion(s) from a scipy Rotation """
    return _to_wxyz(r.as_quat())


def quat_multiply(a, b):
    """ Hamilton product a*b, both (w, x, y, z) """
    return from_rotation(as_rotation(a) * as_rotation(b))


def quat_inverse(q):
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out / np.sum(q * q, axis=-1, keepdims=True)


def quat_to_matrix(q):
    return as_rotation(q).as_matrix()


def matrix_to_quat(m):
    return from_rotation(Rotation.from_matrix(m))


def quat_from_rotvec(v):
    return from_rotation(Rotation.from_rotvec(v))


def canonical_quat(q):
    """ flip sign so that w >= 0 """
    q = np.asarray(q, dtype=float)
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def axis_angle_matrices(axes, angles):
    """ rotation matrices about unit ``axes`` (..., 3) by ``angles`` (...)

    Returns an array of shape (..., 3, 3).
    """
    axes = np.asarray(axes, dtype=float)
    angles = np.asarray(angles, dtype=float)
    rotvec = axes * angles[..., None]
    shape = rotvec.shape[:-1]
    mats = Rotation.from_rotvec(rotvec.reshape(-1, 3)).as_matrix()
    return mats.reshape(shape + (3, 3))


def pose_matrix(position, quat):
    """ 4x4 homogeneous matrix from position and (w, x, y, z) quaternion """
    T = np.eye(4)
    T[:3, :3] = quat_to_matrix(quat)
    T[:3, 3] = position
    return T


def pose_compose(a, b):
    """ a∘b for poses given as (position, quaternion) pairs """
    pa, qa = a
    pb, qb = b
    p = np.asarray(pa, dtype=float) + quat_to_matrix(qa) @ np.asarray(pb)
    return p, quat_multiply(qa, qb)


def pose_inverse(a):
    p, q = a
    qi = quat_inverse(q)
    return -(quat_to_matrix(qi) @ np.asarray(p, dtype=float)), qi


def transform_points(position, quat, points):
    """ apply pose to points (..., 3) """
    R = quat_to_matrix(quat)
    return np.asarray(points, dtype=float) @ R.T + np.asarray(position)


def inverse_transform_points(position, quat, points):
    """ express world points (..., 3) in the frame of the given pose """
    R = quat_to_matrix(quat)
    return (np.asarray(points, dtype=float) - np.asarray(position)) @ R


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """ camera orientation with z forward, x right and y down

    Returns the (w, x, y, z) quaternion of the camera frame in the world.
    """
    eye = np.asarray(eye, dtype=float)
    forward = np.asarray(target, dtype=float) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=float))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return matrix_to_quat(np.stack([right, down, forward], axis=1))
