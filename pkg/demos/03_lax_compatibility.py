"""The commutator [L, A] reproduces the time derivative of L.

With ``L phi = {omega, phi}`` and ``A phi = {psi, phi}``, the residual
``{d_t omega, phi} - [L, A] phi`` vanishes because of the Jacobi identity,
as long as ``d_t omega = -{psi, omega}``. Nudging ``d_t omega`` by
``delta cos x`` makes the residual grow in proportion to ``delta``.
"""

from laxeuler.spectral import Grid, from_modes
from laxeuler.verification import compatibility_residual, random_test_field

grid = Grid(128)
omega = random_test_field(grid, 8, seed=(0, 0))
phi = random_test_field(grid, 8, seed=(0, 1), real=False)

print(compatibility_residual(omega, phi).line())

cos_x = from_modes(grid, {(1, 0): 0.5, (-1, 0): 0.5}, real=True)
for delta in (1e-2, 1e-3, 1e-4):
    r = compatibility_residual(omega, phi, perturbation=cos_x * delta)
    print(f"delta={delta:.0e}: relative residual {r.relative:.3e}  (ratio {r.relative / delta:.3f})")
