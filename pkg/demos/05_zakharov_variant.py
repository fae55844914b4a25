"""A spectral-parameter Lax pair and its resonant line.

Here ``L = lam D1 + {omega, .}`` and ``A = lam D2 + {S, .}`` with
``D1 S = D2 omega``. The zero-curvature residual vanishes for every
``lam``. With ``D1 = d_x`` the shear ``cos y`` lies on the resonant line
``kx = 0``, where ``S`` cannot be solved for.
"""

import math

from laxeuler.dynamics import ResonanceError, ZakharovParams, initial_condition
from laxeuler.spectral import Grid
from laxeuler.verification import random_test_field, zakharov_residual

grid = Grid(64)
omega = random_test_field(grid, 6, seed=(1, 0))
phi = random_test_field(grid, 6, seed=(1, 1), real=False)
for lam in (0, 1 + 1j, 3j):
    params = ZakharovParams(1.0, math.sqrt(2), 0.0, 1.0, lam)
    print(f"lam={lam!s:>6}:", zakharov_residual(omega, phi, params).line())

shear = initial_condition("shear", grid=grid)
try:
    zakharov_residual(shear, phi, ZakharovParams(1.0, 0.0, 0.0, 1.0, 1j))
except ResonanceError as exc:
    print("\nresonance:", exc)

gauged = zakharov_residual(shear, phi, ZakharovParams(1.0, 0.0, 0.0, 1.0, 1j, resonance_policy="zero-gauge"))
print("zero-gauge instead:", gauged.line(), f"(constraint term {gauged.context['constraint_norm']:.2e})")
