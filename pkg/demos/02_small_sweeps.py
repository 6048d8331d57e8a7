# %% [markdown]
# # Small Monte Carlo sweeps
#
# A reduced version of the benchmark: a few channel draws per point, so it
# finishes in about a minute. Use the `irsbeam bench` command for full runs.

# %%
from irsbeam.harness import BenchConfig, run_bench

base = dict(snapshots=3, realizations_per_snapshot=2, master_seed=0, record_timing=False)

# %% [markdown]
# Rate against transmit power, joint design against both baselines.

# %%
res = run_bench(BenchConfig(sweeps={"P_T_dbm": [-5.0, 0.0, 5.0]},
                            feasible_sets=("continuous", "discrete:4"), **base))
for row in res.rows:
    print(f"P_T {row.point['P_T_dbm']:>5g} dBm  {row.method:<13}{row.feasible_set:<12}"
          f"{row.mean_rate:8.3f} +/- {row.stderr:.3f}")

# %% [markdown]
# Rate against the number of elements and against the IRS position. Moving
# the surface toward either end of the road helps; the middle is the worst
# place for it.

# %%
for key, values in (("N", [5, 10, 20]), ("L_I", [50.0, 100.0, 200.0])):
    res = run_bench(BenchConfig(sweeps={key: values}, feasible_sets=("continuous",),
                                baselines=(), **base))
    print(key, [round(r.mean_rate, 3) for r in res.rows])
