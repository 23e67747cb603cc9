# %% [markdown]
# Where do the zeros of a random polynomial live?
#
# Take P(z) = sum eta_j p_j(z) with complex Gaussian eta_j. For the
# monomials the zeros crowd the unit circle. For orthonormal polynomials
# they crowd the segment [-1, 1] instead. The density h_n says how many
# zeros to expect per unit area.

# %%
import numpy as np

from zerodensity import chebyshev, general_density, legendre, limit_density, monomial, oprl_density

# %% monomials: density along the positive real axis
r = np.array([0.0, 0.5, 0.9, 1.0, 1.1, 1.5, 3.0])
for n in (5, 20, 80):
    print(f"monomial n={n:3d}", np.array2string(general_density(monomial(), n, r), precision=3))

# %% [markdown]
# The peak at |z| = 1 sharpens as n grows: almost every zero sits in a
# thin annulus around the circle.

# %% orthonormal families: a slice straight up from z = 0.5
y = np.array([0.01, 0.05, 0.1, 0.3, 1.0])
z = 0.5 + 1j * y
for b in (legendre(), chebyshev()):
    for n in (10, 100):
        print(f"{b.name:9s} n={n:3d}", np.array2string(oprl_density(b, n, z), precision=4))

# %% [markdown]
# Away from [-1, 1] the two families approach the same curve, which does
# not depend on the weight.

# %%
z = np.array([1.5 + 0.5j, 0.4 + 0.8j, -1.2 + 0.3j])
print("limit          ", np.array2string(limit_density(z), precision=6))
for b in (legendre(), chebyshev()):
    print(f"{b.name:9s} n=200", np.array2string(oprl_density(b, 200, z), precision=6))
