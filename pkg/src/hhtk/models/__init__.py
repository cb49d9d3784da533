"""
Model catalog and symplectic realizations.
"""
