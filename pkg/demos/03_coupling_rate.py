#!/usr/bin/env python3
# Couple narrow networks to a wide reference by subsampling its neurons, train
# all of them on the same data and watch the trajectory distance shrink with n.

import numpy as np

from mfrnn.coupling import CouplingPlan, rate_sweep
from mfrnn.data import MapSpec, label_with_teacher, sample_batch
from mfrnn.model import NetConfig
from mfrnn.trainer import TrainConfig, init_weights, student_law, teacher_law

N_ref, L = 120, 4
probe = init_weights(NetConfig(n=N_ref, L=L), student_law(N_ref), seed=0)
R = 1.05 * float(np.max(np.abs(probe.W_hh)))  # some entries start inside the band
net = NetConfig(n=N_ref, L=L, R=R)
teacher = init_weights(net.with_width(15), teacher_law(15), seed=7)
data = label_with_teacher(sample_batch(MapSpec(), 256, L, seed=1), teacher)

plan = CouplingPlan.build(init_weights(net, student_law(N_ref), seed=0), [10, 20, 40, 80, 120], seed=3)
cfg = TrainConfig(beta=3e-3, steps=300, scaling="meanfield", snapshot_every=25, R=R)
run = rate_sweep(plan, data, cfg)

for n, tau, d in run.dtau_table:
    print(f"n={n:4d}  D_tau={d:.3e}  loss gap={run.loss_gaps[n]:.3e}")
print(f"log-log slope {run.slope:.3f} (r2 {run.r2:.3f}); n = N_ref is excluded from the fit")
