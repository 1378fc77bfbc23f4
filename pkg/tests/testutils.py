"""
 Useful collection of functions for the vtaobimanip test-suite

 Everything here is written out longhand on purpose: the tests compare
 the package against these transcriptions, never against itself.
"""

import numpy


def hamilton(a, b):
    """ quaternion product a*b, (w, x, y, z) order """
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return numpy.array([w1*w2 - x1*x2 - y1*y2 - z1*z2,
                        w1*x2 + x1*w2 + y1*z2 - z1*y2,
                        w1*y2 - x1*z2 + y1*w2 + z1*x2,
                        w1*z2 + x1*y2 - y1*x2 + z1*w2])


def conjugate(q):
    return numpy.array([q[0], -q[1], -q[2], -q[3]])


def quat_matrix(q):
    """ rotation matrix of a unit quaternion (w, x, y, z) """
    w, x, y, z = q
    return numpy.array([
        [1 - 2*(y*y + z*z), 2*(x*y - w*z), 2*(x*z + w*y)],
        [2*(x*y + w*z), 1 - 2*(x*x + z*z), 2*(y*z - w*x)],
        [2*(x*z - w*y), 2*(y*z + w*x), 1 - 2*(x*x + y*y)]])


def random_quat(rng):
    q = rng.standard_normal(4)
    return q / numpy.linalg.norm(q)


def rodrigues(axis, angle):
    """ rotation matrix about a unit axis """
    k = numpy.asarray(axis, dtype=float)
    K = numpy.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return numpy.eye(3) + numpy.sin(angle)*K + (1 - numpy.cos(angle))*K @ K


def brute_force_fk(model, q):
    """ link origins by an explicit loop of 4x4 matrix products """
    angles = numpy.zeros(model.n_joints)
    angles[model.revolute] = q
    T = [None] * model.n_joints
    T[0] = numpy.eye(4)
    for k in range(1, model.n_joints):
        local = numpy.eye(4)
        local[:3, 3] = model.offsets[k]
        rot = numpy.eye(4)
        rot[:3, :3] = rodrigues(model.axes[k], angles[k])
        T[k] = T[model.parents[k]] @ local @ rot
    return numpy.array([t[:3, 3] for t in T])


def discounted_advantages(rewards, values, dones, last_value, gamma, lam):
    """ GAE as the explicit double sum over future TD errors """
    T, N = rewards.shape
    nxt = numpy.vstack([values[1:], last_value[None]])
    delta = rewards + gamma * nxt * (1 - dones) - values
    adv = numpy.zeros((T, N))
    for n in range(N):
        for t in range(T):
            total, weight = 0.0, 1.0
            for k in range(t, T):
                total += weight * delta[k, n]
                if dones[k, n]:
                    break
                weight *= gamma * lam
            adv[t, n] = total
    return adv


def read_columns(filename):
    """ header names and rows of a '# '-commented whitespace table """
    names, rows = None, []
    with open(filename) as f:
        for line in f:
            if line.startswith("#") or not line.strip():  # skip comments
                continue
            if names is None:
                names = line.split()
            else:
                rows.append([float(v) for v in line.split()])
    return names, numpy.array(rows)


def tiny_model_config(**kw):
    """ a ModelConfig small enough for CPU unit tests """
    from vtaobimanip.model import ModelConfig
    base = dict(image_size=32, patch_size=8, embed_dim=16, depth=1,
                num_heads=2, decoder_dim=16, decoder_depth=1,
                decoder_heads=2, mlp_ratio=2)
    base.update(kw)
    return ModelConfig(**base).validate()
