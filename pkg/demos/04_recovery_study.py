"""A small reference-order recovery study.

For each (K, N) cell, simulate several datasets from random true
parameters, fit each one and count how often the posterior mode is the
true reference order. The CLI runs the larger presets:
``eplbayes recovery --preset desk --out results/``.
"""
from eplbayes import ChainConfig, recovery_experiment

reports = recovery_experiment([(5, 50), (5, 200)], replications=5,
                              config=ChainConfig(iterations=3000, burn_in=1000), seed=1)
for r in reports:
    print(r.line())
    for rec in r.records:
        print(f"   rep {rec.replication}: true {rec.true_rho} est {rec.estimated_rho} "
              f"mass {rec.mode_mass:.3f}")
