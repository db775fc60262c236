"""Estimate the fidelity of a lossy single photon with heterodyne samples.

A prover is asked for |1> but sends the output of a channel with
transmissivity 0.9, whose fidelity with |1> is exactly 0.9. We plan the
number of shots, look at the estimator constants, and compare the
Monte-Carlo estimate with the exact value at a few sample sizes.

Run with ``python demos/fidelity_estimation.py``.
"""

import numpy as np

from hetverify.estimators import constants_for
from hetverify.protocols import PlanRequest, default_config, protocol1_estimate, protocol1_plan
from hetverify.sampler import ProverModel, sample_prover
from hetverify.states import CoreState, FockDensityMatrix, TargetSpec, apply_loss, fidelity_pure

core = CoreState.fock(1)
eps, delta, tau = 0.1, 0.1, 0.9

# %% the exact fidelity of the lossy state
rho = apply_loss(FockDensityMatrix.fock(1, 2), tau)
print(f"exact fidelity with |1>: {fidelity_pure(core, rho):.6f}")

# %% planning: the order p trades bias against range
for p in (1, 2, 3):
    cfg = default_config(core, p, eps)
    plan = protocol1_plan(PlanRequest(eps, delta, core, cfg))
    k = constants_for(core, cfg, eps)
    print(f"p={p}: eta_max={cfg.eta:.4f}  K={k.k_big:10.1f}  N={plan.shots_required:>12,d}")

# %% estimates from far fewer shots than planned; the spread shrinks as 1/sqrt(N)
cfg = default_config(core, 2, eps)
model = ProverModel.lossy(TargetSpec.product([core]), tau)
for shots in (10**4, 10**5, 10**6):
    est = [protocol1_estimate(sample_prover(model, shots, seed).data[:, 0], core, cfg) for seed in range(10)]
    print(f"N={shots:>8,d}: mean {np.mean(est):.4f}, spread {np.std(est):.4f} over 10 runs")
