"""superlimb: mechanics and control of a wearable supernumerary limb.

Library for mapping muscle-activity estimates to task-space stiffness
commands, splitting coupled human-limb dynamics into joint torques and
contact support forces, certifying quasi-static stability of supported
postures, and running deterministic scenario simulations.
"""

__version__ = "0.1.0"
