"""
Iterative inference against random sampling
===========================================

On randomly generated subjects with known guards we compare three things:
the iterative loop, one pass over a uniform sample of the same size, and
the exhaustive reference. The budget of the sample is the number of
configurations the iterative loop used on that subject.
"""

# %%
import random
import statistics

import numpy as np

from cfginfer import InferenceParams, SyntheticOracle, exhaustive_infer, f_score, random_baseline, random_subject, run
from cfginfer.evaluation import convergence_trajectory
from cfginfer.formula import render_formula

N = 60
subjects = [random_subject(random.Random(i), min_options=4) for i in range(N)]
first = subjects[0]
for loc, guard in first.locations[:3]:
    print(loc, render_formula(guard, first.space))

# %%
rows = []
for i, spec in enumerate(subjects):
    exact = exhaustive_infer(SyntheticOracle(spec), spec.space)
    it = run(SyntheticOracle(spec), spec.space, InferenceParams(seed=i))
    rb = random_baseline(SyntheticOracle(spec), spec.space, it.configs_used, seed=i)
    rows.append((spec.space.size, it.configs_used, f_score(it, exact).f_score, f_score(rb, exact).f_score))
sizes, used, ours, theirs = map(np.array, zip(*rows))
print("median share of the space used:", float(np.median(used / sizes)))
print("median f iterative:", statistics.median(ours), " random:", statistics.median(theirs))
print("iterative better / worse / tied:", int((ours > theirs).sum()), int((ours < theirs).sum()), int((ours == theirs).sum()))

# %% [markdown]
# How quickly does the loop get close? We replay each run's per-iteration
# candidates, score them against the reference and look at the fraction of
# iterations needed to reach f >= 0.8.

# %%
reach = []
for i, spec in enumerate(subjects[:20]):
    exact = exhaustive_infer(SyntheticOracle(spec), spec.space)
    it = run(SyntheticOracle(spec), spec.space, InferenceParams(seed=i))
    points = convergence_trajectory(it, exact)
    reach.append(next((x for _, x, f in points if f >= 0.8), 1.0))
print("median normalized iteration reaching 0.8:", statistics.median(reach))
