#!/usr/bin/env python3
# Forward pass, adjoint gradients and a finite-difference check on a tiny net.

import numpy as np

from mfrnn.data import MapSpec, label_with_teacher, sample_batch
from mfrnn.grad import backward, chain_oracle, gradient, value_and_gradient
from mfrnn.model import NetConfig, WeightSet, forward
from mfrnn.trainer import init_weights, student_law, teacher_law

# a two-neuron network fed x_{-1} = 1, x_0 = 0
w = WeightSet([[1.0], [1.0]], np.ones((2, 2)), [1.0, 1.0], NetConfig(n=2, L=1))
print("F =", forward(w, [1.0, 0.0]).output, " tanh(tanh(1)) =", np.tanh(np.tanh(1.0)))

# teacher-labelled data from the rotation x -> x + 1 on the circle
net = NetConfig(n=6, L=3)
teacher = init_weights(net.with_width(4), teacher_law(4), seed=7)
batch = label_with_teacher(sample_batch(MapSpec(), 16, 3, seed=1), teacher)
student = init_weights(net, student_law(6), seed=0)

risk, g = value_and_gradient(student, batch, "plain")
print("risk", risk, " |g_hy|, |g_hh|_F, |g_xh|_F =", g.norms())

# central differences on one hidden weight
h = 1e-5
W = student.W_hh.copy()
W[2, 4] += h
up = value_and_gradient(student.replace(W_hh=W), batch, "plain")[0]
W[2, 4] -= 2 * h
down = value_and_gradient(student.replace(W_hh=W), batch, "plain")[0]
print("dR/dW_hh[2,4]: adjoint", g.g_hh[2, 4], " finite diff", (up - down) / (2 * h))

# meanfield scaling only rescales the blocks: n for W_xh and W_hy, n^2 for W_hh
mf = gradient(student, batch, "meanfield")
print("ratio hh:", mf.g_hh[0, 1] / g.g_hh[0, 1], " ratio hy:", mf.g_hy[0] / g.g_hy[0])

# the adjoint at lag 2 agrees with summing every index chain explicitly
x = batch.sequences[0]
G = backward(student, forward(student, x), 0.0).G
print("max |adjoint - chain sum| at lag 2:", np.max(np.abs(G[2] - chain_oracle(student, x, 2))))
