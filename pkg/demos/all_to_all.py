# %% [markdown]
# # Twist-untwist with all-to-all interactions
# The moment error of ``exp(i chi Jz^2) exp(-i phi Jy) exp(-i chi Jz^2)|+>`` at its
# optimal twist strength, and the gap to the quantum Cramer-Rao bound.

# %%
import math

import numpy as np

from twistuntwist import closed_forms as cf
from twistuntwist import protocols
from twistuntwist.protocols import ProtocolSpec

# %% closed form against the exact Dicke-space simulation
n, chi = 12, 0.3
closed = float(cf.two_param_error(n, -chi, chi))
exact = protocols.moment_error_numeric(ProtocolSpec.two_param(n, -chi, chi)).error
print(f"N={n} chi_t={chi}: closed {closed:.12g}, simulated {exact:.12g}")

# %% N^2 times the minimal error approaches e
for n in (10**2, 10**4, 10**6):
    chi, err = cf.critical_params(n)
    print(f"N={n:>8}: chi* = {chi:.3e}, N^2 error = {n**2 * err:.5f}")
print(f"e = {math.e:.5f}")

# %% the f-curve: inverse Fisher information over the moment error
n = 1000
chis = np.geomspace(1e-4, 0.2, 9)
for c, f in zip(chis, cf.f_ratio(n, chis)):
    print(f"chi_t={c:.2e}  f={f:.4f}")
print(f"f at chi* = {float(cf.f_ratio(n, cf.critical_chi_t(n))):.5f}")
