"""Matrix elements of functions of Wigner matrices.

Sampling, semicircle analytics, bounded-variation test functions, Pleijel
contour inversion, resolvent kernels and fluctuation statistics, plus a
Monte Carlo harness that checks the limiting laws of ``f(H)_11`` and
``f(H)_12``.
"""

__version__ = "0.1.0"
