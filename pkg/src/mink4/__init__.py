"""Marginally trapped surfaces in Minkowski space R^4_1.

Modules:

* ``lorentz``    vector algebra, causal classes, pseudo-orthonormal frames
* ``surface``    jets, fundamental forms, curvature invariants of spacelike surfaces
* ``invariants`` the geometric frame and the seven invariants of a marginally trapped surface
* ``meridian``   explicit marginally trapped meridian surfaces
* ``bonnet``     reconstruction of a surface from its seven invariants
* ``cli``        command-line entry point
"""

__version__ = "0.1.0"
