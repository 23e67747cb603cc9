# %% [markdown]
# Three independent answers to one question: how many zeros of a random
# degree-10 Legendre sum fall in the box [0.2, 0.8] x [0.1, 0.5]?
#
# 1. integrate the density over the box
# 2. integrate conj(K01)/K around its edge and divide by 2 pi i
# 3. draw coefficient vectors, find all roots, count

# %%
import time

from zerodensity import Region, area_expectation, contour_expectation, legendre, mc_expectation

box = Region.rect(0.2, 0.8, 0.1, 0.5)
basis = legendre()

t = time.perf_counter()
area = area_expectation(basis, 10, box)
print(f"area     {area.value:.12f}  (error bound {area.error:.1e}, {area.evaluations} density evaluations)")
contour = contour_expectation(basis, 10, box)
print(f"contour  {contour.value:.12f}  (imaginary residue {contour.imag:.1e})")
mc = mc_expectation(basis, 10, box, trials=20_000, seed=7)
print(f"sampled  {mc.mean:.4f} +- {mc.stderr:.4f}  ({mc.trials} trials)")
print(f"z-score  {(mc.mean - area.value) / mc.stderr:+.2f}, {time.perf_counter() - t:.1f}s total")

# %% [markdown]
# The same works for any simple polygon. Here is a triangle that crosses
# the real axis, where most of the zeros are.

# %%
tri = Region.poly([(-0.9, -0.3), (0.9, -0.3), (0.0, 0.6)])
print("triangle area/contour:",
      area_expectation(basis, 10, tri).value, contour_expectation(basis, 10, tri).value)
