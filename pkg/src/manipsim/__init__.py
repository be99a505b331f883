"""Simulation toolkit for dynamic-feedback adaptive control of interacting robot arms.

Submodules:

- ``dynamics``        planar 2-DOF arm model (inertia, Coriolis, regressor)
- ``controllers``     damping / adaptive / networked / teleoperation control laws
- ``network``         directed graphs, switching schedules, delay channels
- ``ltv``             delayed linear time-varying simulator and stability probes
- ``sim``             closed-loop scenario runner and trace metrics
- ``manipulability``  point-mass benchmark and empirical L2-gain curves
- ``scenario_io``     scenario JSON schema, trace CSV and summary JSON formats
- ``cli``             the ``manipsim`` command-line entry point
"""

from .dynamics import ArmModel, DynParams, JointState, default_params

__all__ = ["ArmModel", "DynParams", "JointState", "default_params"]
__version__ = "0.1.0"
