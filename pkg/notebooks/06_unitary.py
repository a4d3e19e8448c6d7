# %% [markdown]
# # The unitary group
#
# Re W is close to N(0, 1/2) at rate 1/n, and the distance does not
# depend on the direction of projection.  (Re W, Im W) approaches a
# standard complex normal.

# %%
import math

import numpy as np

from haarstein.distance import ks_distance, normal_density
from haarstein.linear import preset, project_theta, sample_statistic_batch
from haarstein.pairs import unit_e_bound, unitary_constant
from haarstein.rng import RngStream

target = normal_density(0.5).cdf
for n in (4, 8, 16):
    w = sample_statistic_batch(preset("identity", n, "unitary"), 40_000, RngStream(n)).values
    ks = [ks_distance(project_theta(w, k * math.pi / 6), target).value for k in range(7)]
    print(f"n={n:2d}  KS over theta {np.round(ks, 4)}  c(n) = {unitary_constant(n):.3f}")

# %%
e = unit_e_bound(preset("identity", 16, "unitary"), 40_000, RngStream(9))
print("n E|E| =", round(e["value"], 4), "bound", round(e["bound"], 4))
print("cov(Re W, Im W) =", np.round(np.cov(e["w"].real, e["w"].imag), 4))
