"""
Henon-Heiles Toolkit - exact involution certificates and numerical dynamics
for the integrable Henon-Heiles family.
"""

__version__ = "1.0.0"
