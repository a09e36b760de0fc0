"""How well does a sum of Kronecker products describe a wideband channel?

We draw one channel from the default clustered profile, stack the 16
subcarrier matrices into the 64 x 64 matrix H, and measure how fast the
sequential Kronecker factorization drives the residual down for a few
division scenarios.
"""

import numpy as np

from salsa import FactorShape, default_profile, generate_channel
from salsa.kron_factor import residual_curve

h = generate_channel(default_profile(), n_sc=16, rng_seed=0).total
norm2 = np.linalg.norm(h) ** 2
print(f"H is {h.shape[0]} x {h.shape[1]}, ||H||^2 = {norm2:.1f}")

# Shapes are (i1, i2, j1, j2): H ~ sum_r C_r kron B_r with B_r i1 x j1 and C_r i2 x j2.
shapes = ["8,8,64,1", "8,8,16,4", "16,4,64,1", "4,16,64,1", "8,8,8,8"]
r_max = 8

print("\nrelative residual ||H - Hhat_R||^2 / ||H||^2")
print("shape        " + "".join(f"R={r:<8d}" for r in range(1, r_max + 1)))
for text in shapes:
    shape = FactorShape.parse(text)
    curve = residual_curve(h, shape, min(r_max, shape.max_terms)) / norm2
    print(f"{str(shape):12s} " + "".join(f"{v:<10.2e}" for v in curve))

# With shape (8, 8, 64, 1) at most eight terms exist, so R = 8 is exact.
# Balanced shapes like (8, 8, 8, 8) allow up to 64 terms and decay slowly.
