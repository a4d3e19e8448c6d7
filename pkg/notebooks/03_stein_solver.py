# %% [markdown]
# # Solving the Stein equation
#
# f' - x f = g - E g(Z).  The solution stays bounded, with
# |f| <= sqrt(pi/2)|g - Eg|, |f'| <= 2|g - Eg| and |f''| <= 2|g'|.

# %%
from haarstein.stein import TestFunction, stein_transform, test_family, verify_stein_bounds

for g in test_family():
    r = verify_stein_bounds(g)
    print(f"{g.name:13s} residual {r.max_residual:.1e}  margins {[round(m, 3) for m in r.margins]}")

# %% [markdown]
# g(x) = x^2 has the explicit solution f(t) = -t.

# %%
sol = stein_transform(TestFunction.from_callable(lambda x: x**2))
x = sol.f.grid
print("max |f + t| =", abs(sol.f.values + x).max())
