"""Cooperative multi-robot pose localisation on SE(3).

A deterministic second-order filter over the joint pose state and an exactly
equivalent decoupled form in which each robot tracks one column of the
inverse Hessian and exchanges small messages only when exteroceptive
measurements arrive.
"""

from .central import CentralFilter, CentralSigmaFilter
from .decoupled import (
    Network,
    PeerState,
    PropagationToken,
    RobotNode,
    UpdateBroadcast,
    make_nodes,
)
from .drivers import CentralDriver, DecoupledDriver
from .errors import (
    AngleNearPiError,
    ColocateError,
    ConfigError,
    EpochMismatchError,
    MissingTokenError,
    NonPositiveDefiniteError,
    SingularCoreError,
    WrongRobotError,
)
from .measurements import LandmarkMeasurement, RobotMeasurement, VelocityMeasurement
from .rng import CounterRng
from .simworld import (
    Scenario,
    builtin_scenario_path,
    load_scenario,
    parse_scenario,
    run_schedule,
)

__version__ = "0.1.0"
