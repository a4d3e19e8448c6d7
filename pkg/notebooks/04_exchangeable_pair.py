# %% [markdown]
# # The exchangeable pair
#
# M_eps = H A_eps H* M rotates M by a small random rotation.  The three
# conditions are checked from one batch of pairs: the conditional drift is
# linear with lambda = 1/n, the conditional square matches the closed
# form, and the cubic term vanishes linearly in eps.

# %%
from haarstein.linear import preset
from haarstein.pairs import check_conditions
from haarstein.rng import RngStream

for group in ("orthogonal", "unitary"):
    r = check_conditions(preset("identity", 12, group), samples=40_000, rng=RngStream(6))
    c = r.checks()
    print(group)
    print("  n * lambda_hat   ", round(c["lambda"]["n_lambda_hat"], 4))
    print("  quadratic z      ", round(c["quadratic_global"]["z"], 2), "max bin z", round(c["quadratic_bins"]["max_abs_z"], 2))
    print("  third moment     ", [round(x, 3) for x in c["third_moment"]["ratios"]])
