"""Numerical convergence studies for the kinetic solver and the operator limit.

Prints the observed RK4 order from a step-halving sequence and the slope of
the renormalized-minus-limit operator gap against epsilon.
"""
import numpy as np

from kawasaki_gf.geometry import Torus
from kawasaki_gf.gf import TestFunction, apply_operator
from kawasaki_gf.grid import DensityField, Grid
from kawasaki_gf.kernels import PairKernel
from kawasaki_gf.vlasov import integrate

L = 10.0
grid = Grid(Torus(1, L), 256)
a = PairKernel.gaussian(1.0, 0.5, L=L)
phi = PairKernel.gaussian(0.5, 0.5, L=L)
rho0 = DensityField.gaussian_bump(grid, 5.0, 1.0, 1.0, 0.5)


def rk4_order(t_end=1.0, steps=(0.064, 0.032, 0.016, 0.008)):
    ref = integrate(rho0, t_end, steps[-1] / 8, a, phi).fields[-1].values
    errs = [np.max(np.abs(integrate(rho0, t_end, h, a, phi).fields[-1].values - ref))
            for h in steps]
    return errs, np.polyfit(np.log(steps), np.log(errs), 1)[0]


def epsilon_slope(eps=(0.1, 0.05, 0.025, 0.0125)):
    theta = TestFunction("gaussian", 0.5, (4.0,), 1.0, 1, L)
    limit = apply_operator(rho0, theta, "vlasov", a, phi)
    gaps = [abs(apply_operator(rho0, theta, "eps_ren", a, phi, e) - limit) for e in eps]
    return gaps, np.polyfit(np.log(eps), np.log(gaps), 1)[0]


if __name__ == "__main__":
    errs, order = rk4_order()
    print("RK4 errors:", " ".join(f"{e:.3e}" for e in errs), f"-> order {order:.3f}")
    gaps, slope = epsilon_slope()
    print("operator gaps:", " ".join(f"{g:.3e}" for g in gaps), f"-> slope {slope:.3f}")
