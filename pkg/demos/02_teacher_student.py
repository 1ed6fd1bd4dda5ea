#!/usr/bin/env python3
# Teacher-student training at reduced scale, plain versus meanfield steps.
#
# With plain scaling the per-weight gradient shrinks like 1/n (1/n^2 for the
# hidden block), so at a fixed step the wide student hardly moves.  Meanfield
# scaling undoes those factors.

from pathlib import Path

import numpy as np

from mfrnn.data import MapSpec, label_with_teacher, sample_batch
from mfrnn.model import NetConfig
from mfrnn.svg import line_chart
from mfrnn.trainer import TrainConfig, init_weights, student_law, teacher_law, train

n, L, m = 60, 5, 256
net = NetConfig(n=n, L=L)
teacher = init_weights(net.with_width(15), teacher_law(15), seed=7)
data = label_with_teacher(sample_batch(MapSpec(), m, L, seed=1), teacher)
w0 = init_weights(net, student_law(n), seed=0)

series = []
for scaling in ("plain", "meanfield"):
    traj = train(w0, data, TrainConfig(beta=3e-3, steps=2000, scaling=scaling))
    mse = traj.column("loss_x2")
    print(f"{scaling:9s} MSE {mse[0]:.3e} -> {mse[-1]:.3e}  (x{mse[-1] / mse[0]:.3f})")
    series.append((scaling, traj.steps + 1, mse))

out = Path("demo_output")
out.mkdir(exist_ok=True)
(out / "teacher_student.svg").write_text(
    line_chart(series, title="teacher-student MSE", xlabel="step + 1", ylabel="MSE", logx=True, logy=True))
print("chart written to", out / "teacher_student.svg")
