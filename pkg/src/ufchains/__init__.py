"""Exact window computations for bounded chains on coarse spaces.

Modules: space (presentations, windows, collars), chain (bounded chains and
the boundary operator), transport (divergence flow problems and cut
certificates), degree0 (class verdicts, semi-norm bounds, means), degree1
(prism rewriting on the line), rigidity (quasi-isometries, matchings,
averaging maps), twisted (shape re-indexing), scenario + cli (reproducible
runs).  Everything computes in exact rational arithmetic.
"""

__version__ = "0.1.0"
