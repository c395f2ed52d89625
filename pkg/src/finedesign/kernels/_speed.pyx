# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels: batched MLP backward pass and Adam updates.

Semantics mirror ``finedesign.kernels.pure``; only the execution strategy
differs (tight C loops instead of vectorized numpy calls).
"""

from libc.math cimport exp, log, sqrt, pow

import numpy as np

NAME = "compiled"


cdef void _affine(const double[:, ::1] a, const double[:, ::1] w,
                  const double[::1] b, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t din = w.shape[0]
    cdef Py_ssize_t dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(dout):
            acc = b[j]
            for k in range(din):
                acc += a[i, k] * w[k, j]
            out[i, j] = acc


cdef void _relu(const double[:, ::1] z, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            out[i, j] = z[i, j] if z[i, j] > 0.0 else 0.0


cdef double _softmax_grad(const double[:, ::1] logits, const int[::1] labels,
                          double[:, ::1] dz) noexcept nogil:
    # dz <- (softmax(logits) - onehot(labels)) / n; returns the summed loss.
    cdef Py_ssize_t n = logits.shape[0]
    cdef Py_ssize_t k = logits.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, se
    cdef double loss = 0.0
    cdef double nn = <double> n
    for i in range(n):
        mx = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > mx:
                mx = logits[i, j]
        se = 0.0
        for j in range(k):
            dz[i, j] = exp(logits[i, j] - mx)
            se += dz[i, j]
        loss += log(se) + mx - logits[i, labels[i]]
        for j in range(k):
            dz[i, j] /= se
        dz[i, labels[i]] -= 1.0
        for j in range(k):
            dz[i, j] /= nn
    return loss


cdef void _grad_w(const double[:, ::1] a, const double[:, ::1] dz,
                  double[:, ::1] gw) noexcept nogil:
    # gw <- a.T @ dz
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t din = a.shape[1]
    cdef Py_ssize_t dout = dz.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(din):
        for j in range(dout):
            acc = 0.0
            for k in range(n):
                acc += a[k, i] * dz[k, j]
            gw[i, j] = acc


cdef void _grad_b(const double[:, ::1] dz, double[::1] gb) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for j in range(dz.shape[1]):
        acc = 0.0
        for i in range(dz.shape[0]):
            acc += dz[i, j]
        gb[j] = acc


cdef void _backprop_da(const double[:, ::1] dz, const double[:, ::1] w,
                       const double[:, ::1] z_prev, double[:, ::1] out) noexcept nogil:
    # out <- (dz @ w.T) masked by the ReLU derivative at z_prev.
    cdef Py_ssize_t n = dz.shape[0]
    cdef Py_ssize_t din = w.shape[0]
    cdef Py_ssize_t dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(din):
            if z_prev[i, j] > 0.0:
                acc = 0.0
                for k in range(dout):
                    acc += dz[i, k] * w[j, k]
                out[i, j] = acc
            else:
                out[i, j] = 0.0


def batch_backward(list weights, list biases, object x, object labels,
                   list grad_w, list grad_b):
    """Gradients of the mean softmax cross-entropy over one minibatch.

    Writes parameter gradients into ``grad_w``/``grad_b`` and returns the
    summed (not mean) per-sample loss.
    """
    cdef Py_ssize_t depth = len(weights)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t l
    xs = np.ascontiguousarray(x, dtype=np.float64)
    ys = np.ascontiguousarray(labels, dtype=np.int32)
    acts = [xs]
    zs = []
    cur = xs
    for l in range(depth):
        w = weights[l]
        z = np.empty((n, w.shape[1]), dtype=np.float64)
        _affine(cur, w, biases[l], z)
        zs.append(z)
        if l < depth - 1:
            a = np.empty_like(z)
            _relu(z, a)
            acts.append(a)
            cur = a
    dz = np.empty_like(zs[depth - 1])
    cdef double loss = _softmax_grad(zs[depth - 1], ys, dz)
    for l in range(depth - 1, -1, -1):
        _grad_w(acts[l], dz, grad_w[l])
        _grad_b(dz, grad_b[l])
        if l > 0:
            da = np.empty_like(zs[l - 1])
            _backprop_da(dz, weights[l], zs[l - 1], da)
            dz = da
    return loss


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    """In-place Adam step with bias correction; ``t`` counts completed steps."""
    cdef Py_ssize_t i
    cdef Py_ssize_t n = p.shape[0]
    cdef double d1 = 1.0 - pow(beta1, <double> t)
    cdef double d2 = 1.0 - pow(beta2, <double> t)
    with nogil:
        for i in range(n):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            p[i] = p[i] - (lr * (m[i] / d1)) / (sqrt(v[i] / d2) + eps)
