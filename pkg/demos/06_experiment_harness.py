"""The Monte-Carlo harness behind the CLI, at toy scale.

Same config and seed give byte-identical CSV output, whatever the number
of worker processes.
"""
from bdris import ExperimentConfig, format_config, run_experiment

cfg = ExperimentConfig(mode="single-user", N=(16, 32), N_G=(2, 4), rho=(0.8,),
                       training_size=50, eval_realizations=40, seed=3)
print(format_config(cfg))

res = run_experiment(cfg)
print(res.to_csv())

gains = res.select(metric="power_gain", N=32)
for r in gains:
    print(f"N=32 {r.architecture:9s} N_G={r.N_G:2d} gain {r.mean:.3f} +- {r.stderr:.3f}")

again = run_experiment(cfg).to_csv()
print("deterministic:", again == res.to_csv())
