"""Non-overlapping Schwarz waveform relaxation for the 1D Schroedinger equation."""

from .drivers import (RunConfig, RunReport, RunResult, rel_l2_error, run, run_classical,
                      run_new, run_preconditioned, solve_monodomain)
from .errors import (Breakdown, GridMismatch, InnerNotConverged, InvalidOrder, NotConverged,
                     ParseError, SWRError, UnsupportedPotential, ZeroPivot)
from .transmission import TransmissionSpec

__version__ = "0.1.0"
