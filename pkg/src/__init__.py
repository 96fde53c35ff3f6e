"""
graph-crb: Laplacian-weighted estimation bounds, estimators and sensor placement
"""

__version__ = "0.1.0"
