"""
 Scripted cap-twisting routine used to check that the task is solvable

 Left hand: one push of the wrist towards the bottle on the first step,
 which brings the four PIP probes within contact range so the bottle
 attaches in stage 2. Nothing else moves on the left.

 Right hand: a ratchet on the four long fingers. With the knuckles
 unflexed the fingertips swing to full abduction (no contact), flex onto
 the cap side, sweep across it towards -y while touching (positive turn
 about +z), lift off and swing back.
"""

import numpy

from vtaobimanip import environment as env

FLEX = 0.094        # tips 21 mm from the cap axis
SWEEP = 0.34
FINGERS = ('FF', 'MF', 'RF', 'LF')
PUSH = 0.5          # wrist action, 5 mm towards the bottle
TOL = 1e-6


def _indices(model, dof_name):
    """ (action index within one hand, dof index) """
    dof = model.dof_names.index(dof_name)
    return int(numpy.flatnonzero(model.actuated == dof)[0]), dof


class OracleController(object):
    uses_pixels = False

    def __init__(self, scale=None):
        model = env.robot_hand()
        self.j3 = [_indices(model, f + 'J3') for f in FINGERS]
        self.j4 = [_indices(model, f + 'J4') for f in FINGERS]
        self.scale = scale or env.EnvConfig().finger_scale

    def targets(self, flex, abd):
        """ knuckle flexion and abduction targets for the current phase """
        if abd >= SWEEP - TOL:
            # end of the stroke: lift off, then swing back
            return 0.0, (SWEEP if flex > TOL else -SWEEP)
        if abd <= -SWEEP + TOL:
            # start of the stroke: press onto the cap, then sweep
            return FLEX, (SWEEP if flex >= FLEX - TOL else -SWEEP)
        if flex > TOL:
            return FLEX, SWEEP
        return 0.0, -SWEEP

    def action(self, state):
        a = numpy.zeros(env.ACTION_DIM)
        if state.steps == 0:
            a[41] = PUSH
        q = state.q[env.N_JOINTS:]
        # the four fingers move in lockstep, MF gives the phase
        flex_t, abd_t = self.targets(q[self.j3[1][1]], q[self.j4[1][1]])
        for (a3, d3), (a4, d4) in zip(self.j3, self.j4):
            a[env.N_ACTUATED + a3] = numpy.clip(
                (flex_t - q[d3]) / self.scale, -1.0, 1.0)
            a[env.N_ACTUATED + a4] = numpy.clip(
                (abd_t - q[d4]) / self.scale, -1.0, 1.0)
        return a

    def act(self, obs):
        states = obs.state if isinstance(obs.state, list) else [obs.state]
        return numpy.array([self.action(s) for s in states])
