"""
Posterior recursions against brute force
========================================

Each agent tracks a posterior over the hidden state and the other agents'
unshared history.  Anyone can also compute two posteriors from the shared
block alone.  Here every recursion is compared with direct conditioning
on the full joint law.
"""

# %%
import numpy as np

from decpomdp_pbp import dp, oracle
from decpomdp_pbp.beliefs import pi_forward, private_init, theta_from_shared
from decpomdp_pbp.info import StrategyProfile
from decpomdp_pbp.model import build_paper_example

spec = build_paper_example()
profile = StrategyProfile.random(spec, seed=1)

# %%
# Agent 1 sees o2 first.  The posterior on s1 drops from 0.7 to 7/34.
xi = private_init(spec, 0, 1)
print("P(s1 | o2) =", xi.state_marginal()[0], "vs", 7 / 34)

# %%
# Private posteriors: recursion vs exhaustive Bayes over every realization
# some own-action choice can reach.
for k in range(2):
    tree = dp.build_agent_tree(spec, k, profile)
    worst = 0.0
    for t in range(1, spec.horizon + 1):
        for info, (_, post) in oracle.exhaustive_posteriors(spec, k, profile, t).items():
            worst = max(worst, np.abs(tree.nodes(t)[info].posterior.probs - post).max())
    print(f"agent {k + 1}: worst private-posterior error {worst:.1e}")

# %%
# The delayed-state posterior needs no strategies at all.
for shared, post in oracle.exhaustive_theta(spec, profile, 3).items():
    print(shared, np.round(post, 4), np.abs(theta_from_shared(spec, shared) - post).max())

# %%
# The shared posterior over the current state and all private blocks does
# depend on the strategies.
layers = pi_forward(spec, profile)
worst = max(np.abs(layers[2][s][1].probs - p).max()
            for s, p in oracle.exhaustive_pi(spec, profile, 3).items())
print(f"shared posterior, stage 3: worst error {worst:.1e}")
