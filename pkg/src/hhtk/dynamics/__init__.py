"""
Numerical dynamics: compiled vector fields, integrators, Poincare sections
and parameter sweeps.
"""
