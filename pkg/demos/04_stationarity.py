#!/usr/bin/env python3
# Stationarity functionals along a training run, each snapshot measured
# against the last one.

import numpy as np

from mfrnn.data import MapSpec, label_with_teacher, sample_batch
from mfrnn.diagnostics import report_header, report_ladder
from mfrnn.model import NetConfig
from mfrnn.trainer import TrainConfig, init_weights, student_law, teacher_law, train

n, L = 60, 3
net = NetConfig(n=n, L=L)
teacher = init_weights(net.with_width(15), teacher_law(15), seed=7)
data = label_with_teacher(sample_batch(MapSpec(), 256, L, seed=1), teacher)
w0 = init_weights(net, student_law(n), seed=0)

traj = train(w0, data, TrainConfig(beta=3e-3, steps=3000, scaling="meanfield", snapshot_every=500),
             keep_weights=True)
reports = report_ladder(list(traj.weights.values()), data)

print("  ".join(f"{h:>9s}" for h in report_header(L)))
for r in reports:
    print("  ".join(f"{v:9.3e}" for v in r.row()))

# q1 is the size of the readout gradient, so it should drop as the fit improves
print("q1 final / q1 start:", reports[-1].q1 / reports[0].q1)
