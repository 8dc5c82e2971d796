"""Hierarchical whole-body follower for legged robots on deformable terrain."""

from .follower import Follower, FollowerConfig, Mode
from .hqp_cascade import Task, solve_hierarchy
from .qp_solver import QpProblem, solve_qp
from .robot_model import RobotModel, load_bundled, load_model_file
from .simulator import Scenario, load_scenario, run_scenario

__version__ = "0.1.0"
