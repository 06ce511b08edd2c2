"""
Delay extremes
==============

With a delay equal to the horizon nothing is ever shared.  With a delay of
one, each stage reveals the previous stage's observations and actions,
and a revealed action must match what the other agent's strategy says.
"""

# %%
from decpomdp_pbp import dp
from decpomdp_pbp.info import enumerate_info
from decpomdp_pbp.model import build_paper_example, replace_problem

base = build_paper_example()
for delay in (1, 2, 3):
    spec = replace_problem(base, delay=delay)
    report = dp.pbp_iterate(spec)
    check = dp.verify_equilibrium(spec, report.profile)
    sizes = [len(enumerate_info(spec, t, 0)) for t in range(1, spec.horizon + 1)]
    print(f"delay {delay}: payoff {report.payoff:.6f}, equilibrium {check['equilibrium']}, "
          f"realizations per stage {sizes}")

# %%
# Without sharing the realizations carry no shared block, and the terminal
# values group by the private posterior alone.
spec = replace_problem(base, delay=3)
report = dp.compression_report(spec, dp.pbp_iterate(spec).profile)
print({k: (e["terminal_groups"], e["terminal_consistent"])
       for k, e in report.items() if "terminal_groups" in e})
