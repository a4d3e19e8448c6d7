# %% [markdown]
# # Sampling Haar matrices
#
# QR of a Gaussian matrix gives a Haar matrix once the diagonal of R is
# forced positive.  Without that sign fix the law is not invariant.

# %%
import numpy as np

from haarstein.haar import group_residual, haar_from_gaussian, sample_gaussian_matrix, sample_haar
from haarstein.rng import RngStream

M = sample_haar(4, "orthogonal", RngStream(0), size=50_000)
print("max residual", group_residual(M).max())

# %% [markdown]
# Second moments: E m_11^2 = 1/n and distinct entries are uncorrelated.

# %%
print("E m11^2 =", (M[:, 0, 0] ** 2).mean(), "(1/4 expected)")
print("E m11 m22 =", (M[:, 0, 0] * M[:, 1, 1]).mean())

# %% [markdown]
# Plain numpy QR without the sign fix: the diagonal of Q is biased.

# %%
G = sample_gaussian_matrix(4, "real", RngStream(1), size=50_000)
Q_raw = np.linalg.qr(G)[0]
Q_fix = haar_from_gaussian(G)
print("raw  E q11 =", Q_raw[:, 0, 0].mean())
print("fixed E q11 =", Q_fix[:, 0, 0].mean())
