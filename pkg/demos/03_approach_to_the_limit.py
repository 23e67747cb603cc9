# %% [markdown]
# How fast does h_n reach its large-degree limit?
#
# For Legendre the gap shrinks roughly like 1/n. For Chebyshev it is
# already at rounding level by n = 25, because p_n is an exact sum of
# two powers of the Joukowski variable xi.

# %%
import numpy as np

from zerodensity import asymptotic_pn, chebyshev, legendre, limit_density, oprl_density

z = 1.5 + 0.5j
h_inf = limit_density(z)
print(f"limit at {z}: {h_inf:.15f}")
for b in (legendre(), chebyshev()):
    gaps = [abs(oprl_density(b, n, z) - h_inf) for n in (25, 50, 100, 200)]
    print(f"{b.name:9s}", "  ".join(f"{g:.2e}" for g in gaps))

# %% [markdown]
# The polynomials themselves follow xi^n / (sqrt(2 pi) D(1/xi)), with D
# the Szego function of the weight.

# %%
for n in (10, 20, 40, 80):
    _, err = asymptotic_pn(legendre(), None, n, 1.2 + 0.3j)
    print(f"legendre n={n:3d} relative error {err:.2e}")
_, err = asymptotic_pn(chebyshev(), None, 20, 1.25)
print(f"chebyshev n=20 at z=1.25: {err:.4e} vs 2^-40 = {2.0 ** -40:.4e}")
