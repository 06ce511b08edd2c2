"""
Equilibrium vs team optimum
===========================

An equilibrium only rules out one-agent deviations.  On a small instance
we can afford the global minimum, first by enumerating every joint
strategy and then by a coordinator that only sees the shared block.
"""

# %%
from decpomdp_pbp import dp, oracle
from decpomdp_pbp.model import build_random_example

for seed in range(5):
    spec = build_random_example(seed, horizon=2, delay=1)
    _, team = oracle.enumerate_team_optimal(spec)
    _, coordinator = oracle.common_info_dp(spec)
    pbp = dp.pbp_iterate(spec).payoff
    print(f"seed {seed}: enumeration {team:.6f}  coordinator {coordinator:.6f}  "
          f"equilibrium {pbp:.6f}")

# %%
# The three-stage two-agent example is already too large to enumerate.
from decpomdp_pbp.model import build_paper_example

try:
    oracle.enumerate_team_optimal(build_paper_example())
except oracle.SizeGuardError as exc:
    print("skipped:", exc)
