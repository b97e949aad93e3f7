"""Quantum neural network force fields.

Statevector-simulated re-uploading circuits trained on molecular
configuration/energy/force data, with exact shift-rule differentiation,
internal-coordinate preprocessing, effective-dimension capacity analysis,
and a Velocity Verlet driver for the learned force field.
"""

__version__ = "0.1.0"
