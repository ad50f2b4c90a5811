"""Robot dynamic parameter identification with particle swarm optimization.

No linear regressor or base-parameter reduction is needed: every particle is a
full set of physical link parameters scored through inverse dynamics.
"""
from ._accel import BACKEND
from .dynamics import DHLink, DynamicParams, LinkDynamicParams, RobotModel, friction_torque, inverse_dynamics, link_transform
from .estimation import SampleSet, classify, cost, estimate, generate_samples, prediction_error, sensitivity_probe, verify
from .pso import PsoConfig, PsoResult, SearchBox, minimize
from .trajectory import FourierTrajectory, JointConstraints, build_qsam, check_constraints, eval_trajectory, excitation_objective, plan_trajectory

__version__ = "0.1.0"
