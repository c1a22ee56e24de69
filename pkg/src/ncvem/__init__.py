"""Nonconforming virtual elements for the Laplace eigenvalue problem on polygonal meshes."""
__version__ = "0.1.0"
