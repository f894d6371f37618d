"""
Sample entropy of regular and irregular series
===============================================

"""

# sample entropy counts template pairs that stay within a tolerance r
import numpy as np

from gaitse.entropy import SeParams, default_tolerance, sample_entropy, sample_entropy_naive

rng = np.random.default_rng(0)
t = np.arange(300)
sine = np.sin(2 * np.pi * t / 30)
noise = rng.normal(size=300)

# the usual tolerance is a fifth of the sample standard deviation
for name, x in (("sine", sine), ("noise", noise)):
    out = sample_entropy(x, SeParams(m=2, r=default_tolerance(x), tau=1))
    print(f"{name:6s} SE = {out.value:.3f}  (B = {out.match_count_m}, A = {out.match_count_m1})")

# the fast path and the direct double loop agree on every count
x = rng.normal(size=200).cumsum()
p = SeParams(2, default_tolerance(x), 1)
assert sample_entropy(x, p) == sample_entropy_naive(x, p)

# no matching templates leaves the value undefined rather than capped
short = sample_entropy(np.arange(8.0), SeParams(2, 0.5, 1))
print("strictly increasing series:", short.value, "defined:", short.defined)
