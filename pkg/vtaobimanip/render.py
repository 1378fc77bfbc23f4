"""
Scene rasterizer
================

A small vectorised ray caster for the bottle scene: a table plane, the
bottle body and cap as capped cylinders and hand links as spheres, with
Lambert shading from a fixed light. Every pixel is one ray; all rays are
intersected with all primitives at once.

Besides the RGB image the renderer returns a label map, see ``LABELS``.
"""

from dataclasses import dataclass

import numpy as np

from .transforms import look_at, quat_to_matrix

LABELS = {'background': 0, 'table': 1, 'body': 2, 'cap': 3,
          'left_hand': 4, 'right_hand': 5}

COLORS = np.array([
    [0.08, 0.08, 0.10],     # background
    [0.55, 0.45, 0.35],     # table
    [0.20, 0.50, 0.90],     # body
    [0.90, 0.30, 0.20],     # cap
    [0.95, 0.80, 0.60],     # left hand
    [0.60, 0.85, 0.60],     # right hand
])

LIGHT = np.array([0.4, 0.3, 1.0]) / np.linalg.norm([0.4, 0.3, 1.0])
AMBIENT = 0.3


@dataclass
class Camera:
    """ pinhole camera, frame convention x right, y down, z forward """
    position: tuple = (0.30, 0.0, 0.32)
    target: tuple = (0.0, 0.0, 0.07)
    fov_deg: float = 60.0
    image_size: int = 224

    @property
    def quat(self):
        return look_at(self.position, self.target)

    def rays(self):
        """ world-frame unit directions, shape (H*W, 3), row-major """
        n = self.image_size
        f = 0.5 * n / np.tan(np.radians(self.fov_deg) / 2.0)
        c = (np.arange(n) + 0.5) - 0.5 * n
        u, v = np.meshgrid(c, c)
        d = np.stack([u.ravel(), v.ravel(), np.full(n * n, f)], axis=1)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d @ quat_to_matrix(self.quat).T


def _hit_plane(o, d):
    t = np.full(len(d), np.inf)
    down = d[:, 2] < -1e-12
    t[down] = -o[2] / d[down, 2]
    n = np.zeros_like(d)
    n[:, 2] = 1.0
    return t, n


def _hit_cylinder(o, d, radius, z0, z1):
    """ rays already expressed in the cylinder frame (axis z) """
    t = np.full(len(d), np.inf)
    n = np.zeros_like(d)
    a = d[:, 0]**2 + d[:, 1]**2
    b = 2.0 * (o[0] * d[:, 0] + o[1] * d[:, 1])
    c = o[0]**2 + o[1]**2 - radius**2
    disc = b * b - 4.0 * a * c
    ok = (disc >= 0) & (a > 1e-12)
    ts = np.full(len(d), np.inf)
    ts[ok] = (-b[ok] - np.sqrt(disc[ok])) / (2.0 * a[ok])
    z = o[2] + ts * d[:, 2]
    side = ok & (ts > 0) & (z >= z0) & (z <= z1)
    t[side] = ts[side]
    p = o + ts[side, None] * d[side]
    n[side, :2] = p[:, :2] / radius
    for zc, nz in ((z1, 1.0), (z0, -1.0)):
        with np.errstate(all='ignore'):
            tc = (zc - o[2]) / d[:, 2]
            p = o + tc[:, None] * d
            inside = (tc > 0) & (p[:, 0]**2 + p[:, 1]**2 <= radius**2)
        closer = inside & (tc < t)
        t[closer] = tc[closer]
        n[closer] = (0.0, 0.0, nz)
    return t, n


def _hit_spheres(o, d, centers, radius):
    """ nearest sphere hit per ray, returns (t, normal, sphere index) """
    if len(centers) == 0:
        return np.full(len(d), np.inf), np.zeros_like(d), None
    oc = o[None, :] - centers                       # (K, 3)
    b = d @ oc.T                                    # (N, K)
    c = np.sum(oc * oc, axis=1) - radius**2         # (K,)
    disc = b * b - c[None, :]
    with np.errstate(invalid='ignore'):
        ts = -b - np.sqrt(disc)
    ts = np.where((disc >= 0) & (ts > 0), ts, np.inf)
    k = np.argmin(ts, axis=1)
    t = ts[np.arange(len(d)), k]
    p = o + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    n = (p - centers[k]) / radius
    return t, n, k


def render_scene(camera, bottle_pos, bottle_quat, bottle, spheres=(),
                 sphere_radius=0.009):
    """ Render the bottle scene

    Parameters
    ----------
    camera: Camera
    bottle_pos, bottle_quat: np.array
        body-center pose of the bottle in the world
    bottle: BottleSpec
    spheres: sequence of (centers (K, 3), label) pairs
        hand links to draw, label is 'left_hand' or 'right_hand'
    sphere_radius: float

    Returns
    -------
    image: np.array, (H, W, 3) float in [0, 1]
    labels: np.array, (H, W) int8
    """
    o = np.asarray(camera.position, dtype=float)
    d = camera.rays()
    N = len(d)
    best_t = np.full(N, np.inf)
    best_n = np.zeros((N, 3))
    label = np.zeros(N, dtype=np.int8)

    def take(t, n, lab):
        closer = t < best_t
        best_t[closer] = t[closer]
        best_n[closer] = n[closer]
        label[closer] = lab[closer] if np.ndim(lab) else lab

    take(*_hit_plane(o, d), LABELS['table'])

    R = quat_to_matrix(bottle_quat)
    ob = R.T @ (o - np.asarray(bottle_pos, dtype=float))
    db = d @ R
    hb = 0.5 * bottle.body_height
    t, n = _hit_cylinder(ob, db, bottle.body_radius, -hb, hb)
    take(t, n @ R.T, LABELS['body'])
    t, n = _hit_cylinder(ob, db, bottle.cap_radius, hb,
                         hb + bottle.cap_height)
    take(t, n @ R.T, LABELS['cap'])

    centers, labs = [], []
    for pts, lab in spheres:
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        centers.append(pts)
        labs.append(np.full(len(pts), LABELS[lab], dtype=np.int8))
    if centers:
        centers = np.concatenate(centers)
        labs = np.concatenate(labs)
        t, n, k = _hit_spheres(o, d, centers, sphere_radius)
        take(t, n, labs[k])

    shade = AMBIENT + (1.0 - AMBIENT) * np.clip(best_n @ LIGHT, 0.0, 1.0)
    shade[label == LABELS['background']] = 1.0
    image = COLORS[label] * shade[:, None]
    size = camera.image_size
    return (np.clip(image, 0.0, 1.0).reshape(size, size, 3),
            label.reshape(size, size))
