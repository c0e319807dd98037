# %% [markdown]
# # Finite-range twisting on a ring
# Each spin couples to its K nearest neighbours on each side.

# %%
import math

from twistuntwist import closed_forms as cf
from twistuntwist import finite_range as fr

# %% the closed form agrees with a 2^N state-vector run
n, k, a1, a2 = 14, 2, -0.4, 0.5
brute = fr.error_brute(fr.coupling_knn(n, k), a1, a2).error
print(f"closed {cf.finite_range_error(n, k, a1, a2):.12g}, brute {brute:.12g}")

# %% optimal strength and error against the range
for k in (1, 2, 3, 10):
    chi = cf.finite_range_critical_chi_t(k)
    print(f"K={k:>2}: chi* = {chi:.5f} = atan(1/sqrt(2K-1)) = {math.atan((2 * k - 1) ** -0.5):.5f}")

# %% with K a fixed fraction of N the error keeps Heisenberg scaling
r = 0.25
for k in (50, 200, 500):
    n = 4 * k + 2
    _, err = cf.finite_range_critical(n, k)
    print(f"K={k}, N={n}: N^2 error = {n**2 * err:.4f}  (e/(2r) = {math.e / (2 * r):.4f})")
