"""Basic demonstration of logging to wandb."""

# %%
# Imports, etc.
from mixed_manna import harness, logging

# %%
# Run a benchmark cell, with logging enabled
config = harness.BenchConfig(n=3, m=3, segments=2, trials=10)
stats, frame = harness.run_benchmark(
    config, log={"tags": ["demo"], "notes": "benchmark logging demo"}
)
print(stats)

# %%
# Retrieve the logged return value from the run
logged_stats, logged_frame = logging.get_objects_from_run(
    logging.last_run_info["path"]
)["run_benchmark"]
print(logged_stats)
print(logged_frame)
