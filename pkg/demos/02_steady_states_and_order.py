"""Steady flows stay put; a perturbed shear shows fourth-order convergence.

``cos y`` and ``2 cos x cos y`` are Laplacian eigenfunctions, so the stream
function is proportional to the vorticity and the advection term vanishes.
Adding ``0.1 cos 8x`` breaks that, and halving the step twice
exposes the RK4 order.
"""

import numpy as np

from laxeuler.dynamics import FlowState, TimeStepper, initial_condition, integrate
from laxeuler.spectral import Grid, transform_inverse
from laxeuler.verification import conservation_suite

grid = Grid(64)
stepper = TimeStepper(1e-2)
for name in ("shear", "taylor-green"):
    w0 = initial_condition(name, grid=grid)
    w1 = integrate(FlowState(0.0, w0), stepper, 100).omega
    change = np.max(np.abs(transform_inverse(w1).values - transform_inverse(w0).values))
    print(f"{name:>13}: max |w(1) - w(0)| = {change:.1e}")

print("\nperturbed shear, dt = 0.02, 0.01, 0.005 to T = 2:")
for check in conservation_suite("perturbed-shear", TimeStepper(0.02), 2.0, grid=grid):
    extra = check.context.get("order")
    print("  ", check.line(), "" if extra is None else f"(order {extra:.3f})")
