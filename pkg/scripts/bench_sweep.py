"""Iteration counts of the pivoting solver over a grid of random
instance sizes."""

# %%
# Imports, etc.
import pandas as pd
import plotly.express as px

from mixed_manna import harness

# %%
# Sweep agents, items and segments; all-bads and mixed instances
frames = []
for mode in harness.BenchMode:
    for n, m, segments in [(2, 2, 1), (3, 3, 2), (4, 4, 2), (5, 5, 3), (6, 6, 3)]:
        config = harness.BenchConfig(
            n=n, m=m, segments=segments, trials=20, seed=0, mode=mode
        )
        stats, frame = harness.run_benchmark(config)
        print(mode.value, stats)
        frames.append(frame.assign(mode=mode.value))
results = pd.concat(frames, ignore_index=True)

# %%
# Worst case iterations against total segments
points = pd.concat(
    [
        harness.plot_data(results[results["mode"] == mode.value]).assign(
            mode=mode.value
        )
        for mode in harness.BenchMode
    ],
    ignore_index=True,
)
fig = px.line(
    points,
    x="total_segments",
    y="max_iters",
    color="mode",
    markers=True,
    title="Pivots to reach an equilibrium",
)
fig.show()
