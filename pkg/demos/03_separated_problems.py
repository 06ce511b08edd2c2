"""
Two independent problems
========================

Two agents each control their own POMDP and the costs add up.  Letting
each agent run its own optimal policy gives the team optimum, the sum of
the two single-agent optima.  The iteration does not always land there.
"""

# %%
from decpomdp_pbp import dp, oracle
from decpomdp_pbp.model import build_separated_example, separated_factors

for seed in (None, 7, 21):
    factors = separated_factors(seed)
    solved = [oracle.centralized_pomdp_solve(f) for f in factors]
    total = sum(v for _, v in solved)
    joint = build_separated_example(factors, delay=2)
    report = dp.pbp_iterate(joint)
    print(f"seed {seed}: sum of optima {total:.6f}, iteration reaches {report.payoff:.6f}, "
          f"gaps {max(report.gaps):.1e}")

# %%
# Seed 21 stops at a worse equilibrium.  Agent 1's strategy reads agent 2's
# shared history, so agent 2 switching to its own optimum alone makes
# agent 1 respond badly and the total goes up.
factors = separated_factors(21)
joint = build_separated_example(factors, delay=2)
stuck = dp.pbp_iterate(joint).profile
policies = [p for p, _ in (oracle.centralized_pomdp_solve(f) for f in factors)]
lifted = oracle.lift_factor_policies(joint, factors, policies)
print("stuck profile", oracle.exact_payoff(joint, stuck))
print("agent 2 alone switches", oracle.exact_payoff(joint, stuck.with_agent(1, lifted.agent_tables(1))))
print("both switch", oracle.exact_payoff(joint, lifted),
      "equilibrium", dp.verify_equilibrium(joint, lifted)["equilibrium"])
