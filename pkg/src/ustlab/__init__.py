"""Uniform spanning tree samplers and random-walk estimators on finite networks."""
from .network import *  # noqa: F401,F403
from .walks import *  # noqa: F401,F403
from .ust import *  # noqa: F401,F403
from .interlacement import *  # noqa: F401,F403
from .harness import (ExperimentResult, ExperimentSpec, build_graph,  # noqa: F401
                      run_assumption_audit, run_experiment)
from .seeding import derive_seed  # noqa: F401

__version__ = "0.1.0"
