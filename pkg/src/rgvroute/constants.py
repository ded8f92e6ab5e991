"""Numerical tolerances and physical defaults shared across modules."""

#: Time horizon used when a request carries no deadline.
HORIZON_MAX = 1.0e6

#: A binary is integral if it lies within this distance of 0 or 1.
INT_TOL = 1e-6
#: Primal row feasibility tolerance of the LP engine and the row evaluator.
FEAS_TOL = 1e-7
#: Reduced-cost (dual feasibility) tolerance of the LP engine.
DUAL_TOL = 1e-9
#: Smallest pivot magnitude accepted by the ratio tests.
PIVOT_TOL = 1e-9
#: Absolute optimality tolerance of the branch-and-bound searches.
OPT_TOL = 1e-6
#: Slack allowed when checking schedule times against deadlines.
TIME_TOL = 1e-9

DEFAULT_MU = 0.05
DEFAULT_G = 9.8
DEFAULT_W_RGV = 2.0
DEFAULT_ACCEL = 1.0
DEFAULT_CRUISE = 1.0
DEFAULT_SERVICE = 0.5
DEFAULT_UNIT_LENGTH = 1.0
DEFAULT_HORIZON = 8
#: Node-selection plunging period of the MILP branch and bound.
PLUNGE_EVERY = 10
