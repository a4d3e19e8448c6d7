# %% [markdown]
# # The linear statistic W = tr(AM)
#
# With tr(AA*) = n, W has variance 1 and approaches a standard Gaussian.
# Only the singular values of A matter, which is why the pair machinery
# works with a diagonal A.

# %%
import numpy as np
from scipy import stats

from haarstein.linear import normalize_coefficients, preset, reduce_to_diagonal, sample_statistic_batch
from haarstein.rng import RngStream

A = normalize_coefficients(np.random.default_rng(2).standard_normal((6, 6)), "orthogonal")
D = reduce_to_diagonal(A)
print("singular values", np.round(np.diag(D.A), 4))

w_full = sample_statistic_batch(A, 40_000, RngStream(3)).values
w_diag = sample_statistic_batch(D, 40_000, RngStream(4)).values
print("two-sample KS p-value", stats.ks_2samp(w_full, w_diag).pvalue)

# %%
for name in ("identity", "spike", "random-diag"):
    w = sample_statistic_batch(preset(name, 20, "orthogonal"), 40_000, RngStream(5)).values
    print(f"{name:12s} var {w.var():.4f}  kurtosis {stats.kurtosis(w):+.4f}")
