"""
Hand motion retargeting
=======================

Maps human-hand joint angles onto a robot hand by matching the ten
wrist-relative target vectors of both hands::

    q_R* = argmin_q  sum_i || v_i^R(q) - v_i^H(q_H) ||^2,   q in [lo, hi]

The solver is a projected descent method with an Armijo backtracking line
search. The descent direction is a damped Gauss-Newton step on the stacked
residual (default) or the plain negative gradient. Residual Jacobians come
from central finite differences over forward kinematics, or from the
analytic point Jacobians. Every accepted step satisfies the Armijo
condition, so the objective never increases.

Solving is deterministic: no randomness, fixed iteration schedule.

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
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kinematics
from .errors import SolverError, ValidationError, DimensionError, ConfigError

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """ retargeting solver settings """
    max_iter: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-8
    armijo_c: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-10
    direction: str = 'gauss_newton'     # or 'gradient'
    jacobian: str = 'central'           # or 'analytic'
    damping: float = 1e-6
    fd_step: float = 1e-7

    def validate(self):
        if self.direction not in ('gauss_newton', 'gradient'):
            raise ConfigError("unknown solver direction '%s'"
                              % self.direction)
        if self.jacobian not in ('central', 'analytic'):
            raise ConfigError("unknown jacobian method '%s'" % self.jacobian)
        if self.max_iter < 0 or not 0 < self.shrink < 1:
            raise ConfigError("max_iter must be >= 0 and 0 < shrink < 1")
        return self


SolveResult = namedtuple('SolveResult', ['q', 'objective', 'iterations',
                                         'grad_norm', 'reason'])


def _residual(robot, q_R, v_H):
    """ stacked residual, shape (..., 30) """
    v_R = kinematics.target_vectors(robot, q_R)
    return (v_R - v_H).reshape(v_R.shape[:-2] + (-1,))


def objective(robot, human, q_R, q_H):
    """ sum of squared differences of the two VectorSets

    Parameters
    ----------
    robot, human: HandModel
    q_R, q_H: np.array
        joint angles of the robot and the human hand

    Returns
    -------
    float >= 0
    """
    v_H = kinematics.target_vectors(human, q_H)
    r = _residual(robot, q_R, v_H)
    return float(np.dot(r, r))


def residual_jacobian(robot, q_R, method='central', h=1e-7):
    """ Jacobian of the stacked target vectors with respect to q_R

    Returns
    -------
    np.array, shape (30, n_dof)
    """
    q_R = np.asarray(q_R, dtype=float)
    if method == 'analytic':
        J = kinematics.point_jacobian(robot, q_R, robot.target_links)
        return J.reshape(-1, robot.n_dof)
    # all 2*n_dof perturbed configurations in one batched FK call
    eye = np.eye(robot.n_dof) * h
    q_pm = np.concatenate([q_R + eye, q_R - eye], axis=0)
    v = kinematics.target_vectors(robot, q_pm).reshape(2, robot.n_dof, -1)
    return ((v[0] - v[1]) / (2.0 * h)).T


def objective_gradient(robot, human, q_R, q_H, method='central', h=1e-7):
    """ gradient of :func:`objective` with respect to q_R

    ``method='central'`` differentiates the objective itself by central
    differences with step ``h``, ``'analytic'`` uses 2 J^T r.
    """
    q_R = np.asarray(q_R, dtype=float)
    v_H = kinematics.target_vectors(human, q_H)
    if method == 'analytic':
        r = _residual(robot, q_R, v_H)
        J = residual_jacobian(robot, q_R, 'analytic')
        return 2.0 * J.T @ r
    if method != 'central':
        raise ConfigError("unknown gradient method '%s'" % method)
    eye = np.eye(robot.n_dof) * h
    r = _residual(robot, np.concatenate([q_R + eye, q_R - eye]), v_H)
    f = np.sum(r * r, axis=-1).reshape(2, robot.n_dof)
    return (f[0] - f[1]) / (2.0 * h)


def _projected_grad(robot, q, g):
    at_lo = (q <= robot.lower) & (g > 0)
    at_hi = (q >= robot.upper) & (g < 0)
    return np.where(at_lo | at_hi, 0.0, g)


def _line_search(robot, q, f, g, d, v_H, cfg):
    """ backtracking on the projected path, returns (q_new, f_new) or None """
    t = 1.0
    while t >= cfg.min_step:
        q_new = np.clip(q + t * d, robot.lower, robot.upper)
        step = q_new - q
        r_new = _residual(robot, q_new, v_H)
        f_new = float(np.dot(r_new, r_new))
        if not np.isfinite(f_new):
            raise SolverError("objective became non-finite",
                              {'q': q_new, 'step_length': t,
                               'objective': f_new})
        decrease = np.dot(g, step)
        if decrease < 0 and f_new <= f + cfg.armijo_c * decrease:
            return q_new, f_new
        t *= cfg.shrink
    return None


def solve_frame(robot, human, q_H, q_init, config=None):
    """ Solve one frame, returning a SolveResult with diagnostics

    Parameters
    ----------
    robot, human: HandModel
    q_H: np.array
        human joint angles, length human.n_dof
    q_init: np.array
        starting point, within the robot limits
    config: SolverConfig, optional

    Returns
    -------
    SolveResult(q, objective, iterations, grad_norm, reason)
        reason is one of 'gradient', 'step', 'max_iter', 'line_search'

    Raises
    ------
    SolverError
        when the objective turns non-finite
    """
    cfg = (config or SolverConfig()).validate()
    q_H = np.asarray(q_H, dtype=float)
    if q_H.shape != (human.n_dof,):
        raise DimensionError("q_H must have %d entries" % human.n_dof)
    if not np.all(np.isfinite(q_H)):
        raise ValidationError("q_H is not finite")
    q = kinematics.clamp_to_limits(robot, q_init)
    v_H = kinematics.target_vectors(human, q_H)

    r = _residual(robot, q, v_H)
    f = float(np.dot(r, r))
    if not np.isfinite(f):
        raise SolverError("objective is non-finite at the initial point",
                          {'q': q, 'objective': f, 'iteration': 0})
    reason = 'max_iter'
    gnorm = np.inf
    it = 0
    for it in range(cfg.max_iter + 1):
        J = residual_jacobian(robot, q, cfg.jacobian, cfg.fd_step)
        g = 2.0 * J.T @ r
        gnorm = np.linalg.norm(_projected_grad(robot, q, g))
        if gnorm < cfg.grad_tol:
            reason = 'gradient'
            break
        if it == cfg.max_iter:
            break
        found = None
        if cfg.direction == 'gauss_newton':
            H = J.T @ J + cfg.damping * np.eye(robot.n_dof)
            d = -np.linalg.solve(H, J.T @ r)
            found = _line_search(robot, q, f, g, d, v_H, cfg)
        if found is None:
            found = _line_search(robot, q, f, g, -g, v_H, cfg)
        if found is None:
            reason = 'line_search'
            break
        q_new, f = found
        step = np.linalg.norm(q_new - q)
        q = q_new
        r = _residual(robot, q, v_H)
        logger.debug("iter %d objective %.3e step %.3e", it, f, step)
        if step < cfg.step_tol:
            reason = 'step'
            it += 1
            break
    if reason == 'max_iter':
        logger.warning("retargeting stopped at the iteration cap, "
                       "objective %.3e, |grad| %.3e", f, gnorm)
    return SolveResult(q, f, it, gnorm, reason)


def retarget_frame(robot, human, q_H, q_init, config=None):
    """ robot joint angles minimizing :func:`objective` for one frame

    The returned q lies within the robot limits and
    objective(q) <= objective(q_init).
    """
    return solve_frame(robot, human, q_H, q_init, config).q


def retarget_trajectory(robot, human, traj, config=None):
    """ Retarget a sequence of human joint angles

    Frame t starts from the solution of frame t-1, frame 0 from the robot
    rest pose.

    Parameters
    ----------
    traj: sequence of np.array or np.array of shape (T, human.n_dof)

    Returns
    -------
    np.array, shape (T, robot.n_dof)

    Raises
    ------
    ValidationError
        on an empty trajectory
    SolverError
        from the failing frame, with ``diagnostics['frame']`` set
    """
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2 or len(traj) == 0:
        raise ValidationError("trajectory must be a non-empty (T, n_dof) "
                              "array, got shape %s" % (traj.shape,))
    out = np.empty((len(traj), robot.n_dof))
    q = robot.rest_pose()
    for t, q_H in enumerate(traj):
        try:
            q = retarget_frame(robot, human, q_H, q, config)
        except SolverError as e:
            diag = dict(e.diagnostics, frame=t)
            raise SolverError("frame %d: %s" % (t, e), diag)
        out[t] = q
    logger.info("retargeted %d frames %s -> %s", len(traj), human.name,
                robot.name)
    return out


def retarget_batch(robot, human, trajectories, workers=4, config=None):
    """ retarget independent trajectories concurrently (thread pool) """
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(retarget_trajectory, robot, human, tr, config)
                   for tr in trajectories]
        return [f.result() for f in futures]
