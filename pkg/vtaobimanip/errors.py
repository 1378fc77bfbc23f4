"""
VTAO-BiManip exceptions
=======================

All errors raised by the package derive from :class:`VTAOError` and also
from the closest builtin exception, so callers may catch either.

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


class VTAOError(Exception):
    """ Base class for all package errors """


class StructuralError(VTAOError, ValueError):
    """ malformed joint tree (cycle, forward or unknown parent) """


class ValidationError(VTAOError, ValueError):
    """ a value violates a documented invariant (NaN, non-unit axis, ...) """


class DimensionError(VTAOError, ValueError):
    """ array length or shape does not match the model """


class CoverageError(VTAOError, ValueError):
    """ visual frames fall outside the coverage of a sensor stream

    ``frame_indices`` lists the offending visual frames.
    """
    def __init__(self, message, frame_indices=()):
        super(CoverageError, self).__init__(message)
        self.frame_indices = list(frame_indices)


class IntegrityError(VTAOError, IOError):
    """ on-disk dataset or checkpoint does not match its manifest """


class ConfigError(VTAOError, ValueError):
    """ unknown key, unknown baseline or out-of-range configuration value """


class SolverError(VTAOError, RuntimeError):
    """ retargeting solver failure, ``diagnostics`` holds solver state """
    def __init__(self, message, diagnostics=None):
        super(SolverError, self).__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TrainingError(VTAOError, RuntimeError):
    """ non-finite loss or gradient during pretraining or RL """
    def __init__(self, message, diagnostics=None):
        super(TrainingError, self).__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EnvironmentStateError(VTAOError, RuntimeError):
    """ invalid environment transition (stepping a finished episode, ...) """
