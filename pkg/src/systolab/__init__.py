"""systolab: numerical verification lab for boundary systole and
mean-curvature inequalities on B^2 x T^(n-2).

Subpackages map one-to-one onto the verification pipeline: ``comparison``
(the radial comparison ODE), ``surfaces`` (weighted warped and conformal
surfaces), ``levelset`` (distance function and the monotone level-set
quantity), ``stability`` (weighted free-boundary geodesics), ``systole``
(constrained lattice systoles), ``asymptotics`` (torus charge, mass
integral and boundary mean-curvature expansion) and ``cli`` (batch
campaigns).
"""

__version__ = "0.1.0"
