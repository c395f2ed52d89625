"""Pure numpy training kernels (fallback when the compiled extension is absent)."""

from __future__ import annotations

import numpy as np

NAME = "pure"


def batch_backward(weights, biases, x, labels, grad_w, grad_b):
    """Gradients of the mean softmax cross-entropy over one minibatch.

    Writes parameter gradients into ``grad_w``/``grad_b`` and returns the
    summed (not mean) per-sample loss. ReLU between affine layers, linear
    final layer, max-subtraction stabilization in the softmax.
    """
    n = x.shape[0]
    last = len(weights) - 1
    zs = []
    acts = [x]
    a = x
    for l in range(last + 1):
        z = a @ weights[l]
        z += biases[l]
        zs.append(z)
        if l < last:
            a = np.maximum(z, 0.0)
            acts.append(a)
    logits = zs[last]
    mx = logits.max(axis=1)
    ez = np.exp(logits - mx[:, None])
    se = ez.sum(axis=1)
    rows = np.arange(n)
    loss_sum = float(np.sum(np.log(se) + mx - logits[rows, labels]))
    dz = ez / se[:, None]
    dz[rows, labels] -= 1.0
    dz /= n
    for l in range(last, -1, -1):
        np.matmul(acts[l].T, dz, out=grad_w[l])
        np.sum(dz, axis=0, out=grad_b[l])
        if l > 0:
            da = dz @ weights[l].T
            dz = da * (zs[l - 1] > 0.0)
    return loss_sum


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """In-place Adam step with bias correction; ``t`` counts completed steps."""
    d1 = 1.0 - beta1**t
    d2 = 1.0 - beta2**t
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= (lr * (m / d1)) / (np.sqrt(v / d2) + eps)
