"""
Reproducing the eps-h tables
============================

Runs the sweep on the seven tabulated eps rows and prints the est2/est3
tables in eps-row by h-column layout. Table 3a is P2/problem 1 est3, Table 3b is
P1/problem 2 est2. Takes about 20 seconds on one core at the default
mesh caps (P1 n <= 128, P2 n <= 64).
"""
from penstokes.harness import SweepConfig, TableSelection, default_eps, records_to_markdown, run_sweep

cfg = SweepConfig(eps=default_eps()[::4], eps_stride=1)
records = run_sweep(cfg, progress=lambda r: print(".", end="", flush=True))
print()

print(records_to_markdown(records, TableSelection(eps_stride=1)))
