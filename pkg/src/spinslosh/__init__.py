"""Equivalent-mechanical-model propellant slosh coupled to spacecraft rotational dynamics."""

from .calibration import Bounds, CalibrationResult, DEConfig, EMMCalibrator, calibrate, differential_evolution, trace_rmse
from .control import ControlSpec, ManeuverKind, ManeuverProfile, ReferenceMode, gain_from_spec, rate_controller, reference_profile
from .coupled import (
    DimensionlessSet, InitialConditions, Scenario, coupled_step, dimensionless, run_closed_loop, run_open_loop,
    scenario_dimensionless, settled_force,
)
from .exceptions import (
    CalibrationError, IntegrationDivergedError, ScenarioError, SingularConstraintError, SloshError,
    UndefinedNormalError, ValidationError,
)
from .rigid_body import BodyState, InertiaModel, StructureSpec, angular_accel, compose_inertia, propagate
from .scenario import bundled_path, load_bundled, parse_scenario
from .slosh import (
    BodyMotionInput, EMMConfig, Event, EventKind, FluidProperties, Mode, SloshParams, SloshState, SloshWrench,
    SurfaceParams, TankGeometry, emm_step, slosh_wrench,
)
from .trace import Trace, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
