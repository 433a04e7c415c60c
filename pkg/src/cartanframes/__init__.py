"""Exact-arithmetic toolkit for Lie pseudo-group equivalence problems.

Submodules: exact (rational/polynomial kernel and linear algebra), jets
(jet coordinates and total derivatives), pseudogroup (determining systems,
lift, prolonged action), exterior (wedge calculus and structure equations),
frames (moving-frame engine), involution (symbol modules and the Cartan
test), problem (the input language), cli (the cartan-frames pipeline).
"""

__version__ = "0.1.0"
