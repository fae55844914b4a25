"""Spectra of the truncated operator L.

For the shear ``cos y`` the operator couples each Fourier chain of fixed
``kx`` through ``sin y``, giving eigenvalues ``i kx cos(j pi / (2K+2))``.
Once the flow moves, the truncated spectrum is no longer invariant, but
its drift shrinks, relative to the operator's size, as the box grows.
"""

import numpy as np

from laxeuler.dynamics import TimeStepper, initial_condition
from laxeuler.lax import ModeBox, assemble_operator, eigenfunction_transport_check, eigenvalues, spectrum_along_flow
from laxeuler.spectral import Grid

K = 6
grid = Grid(32)
lam = eigenvalues(assemble_operator(initial_condition("shear", grid=grid), "L", ModeBox(K)))
top_chain = np.sort(lam[np.isclose(lam.real, 0)].imag)[-5:]
print("largest eigenvalues (imag):", np.round(top_chain, 6))
print("closed form K*cos(pi/14):   ", round(K * np.cos(np.pi / (2 * K + 2)), 6))

print("\neigenvector transported by the steady shear:")
for check in eigenfunction_transport_check(initial_condition("shear", grid=grid), K, None, TimeStepper(2e-3), 0.5):
    print("  ", check.line())

print("\nperturbed shear (m=4), drift between t=0 and t=0.3:")
w = initial_condition("perturbed-shear", {"m": 4}, Grid(64))
for K in (6, 9, 12):
    s = spectrum_along_flow(w, TimeStepper(1e-2), K, [0.0, 0.3])
    print(f"  K={K:>2}: Hausdorff drift {s.drift[0]:.3e}, relative {s.relative_drift[0]:.3e}")
