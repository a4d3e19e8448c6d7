# %% [markdown]
# # Exact total variation for the spike
#
# For A = sqrt(n) (+) 0 the statistic is sqrt(n) times one coordinate of a
# uniform point on the sphere, whose density is explicit.  The distance
# to N(0, 1) decays like 1/n and stays well below 2 sqrt(3)/(n-1).

# %%
from haarstein.distance import normal_density, sphere_marginal_density, tv_quadrature
from haarstein.pairs import orth_bound

phi = normal_density()
for n in (3, 5, 10, 25, 50, 100):
    tv = tv_quadrature(sphere_marginal_density(n), phi).value
    print(f"n={n:3d}  TV {tv:.6f}  bound {orth_bound(n):.4f}  (n-1) TV {(n - 1) * tv:.4f}")
