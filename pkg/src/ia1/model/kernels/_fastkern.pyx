# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: fused row-wise ops for the tiny transformer.

Mirrors kernels/reference.py exactly (signatures and semantics). All inner
accumulation happens in double precision regardless of the array dtype.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expf, log, sqrt

cnp.import_array()

BACKEND = "cython"

ctypedef fused floating:
    float
    double


cdef inline double _exp(floating x) nogil:
    if floating is float:
        return <double> expf(x)
    else:
        return exp(x)


def layer_norm_forward(floating[:, ::1] x, floating[::1] gamma, floating[::1] beta, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    dtype = np.float32 if floating is float else np.float64
    y_arr = np.empty((n, d), dtype=dtype)
    mean_arr = np.empty(n, dtype=dtype)
    rstd_arr = np.empty(n, dtype=dtype)
    cdef floating[:, ::1] y = y_arr
    cdef floating[::1] mean = mean_arr
    cdef floating[::1] rstd = rstd_arr
    cdef Py_ssize_t i, j
    cdef double acc, mu, var, rs
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += x[i, j]
            mu = acc / d
            acc = 0.0
            for j in range(d):
                acc += (x[i, j] - mu) * (x[i, j] - mu)
            var = acc / d
            rs = 1.0 / sqrt(var + eps)
            mean[i] = <floating> mu
            rstd[i] = <floating> rs
            for j in range(d):
                y[i, j] = <floating> (((x[i, j] - mu) * rs) * gamma[j] + beta[j])
    return y_arr, mean_arr, rstd_arr


def layer_norm_backward(floating[:, ::1] dy, floating[:, ::1] x, floating[::1] gamma,
                        floating[::1] mean, floating[::1] rstd):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    dtype = np.float32 if floating is float else np.float64
    dx_arr = np.empty((n, d), dtype=dtype)
    dgamma_arr = np.zeros(d, dtype=dtype)
    dbeta_arr = np.zeros(d, dtype=dtype)
    cdef floating[:, ::1] dx = dx_arr
    cdef floating[::1] dgamma = dgamma_arr
    cdef floating[::1] dbeta = dbeta_arr
    cdef Py_ssize_t i, j
    cdef double mu, rs, xh, dyg, s1, s2
    with nogil:
        for i in range(n):
            mu = mean[i]
            rs = rstd[i]
            s1 = 0.0
            s2 = 0.0
            for j in range(d):
                xh = (x[i, j] - mu) * rs
                dyg = dy[i, j] * gamma[j]
                s1 += dyg
                s2 += dyg * xh
                dgamma[j] += <floating> (dy[i, j] * xh)
                dbeta[j] += dy[i, j]
            s1 /= d
            s2 /= d
            for j in range(d):
                xh = (x[i, j] - mu) * rs
                dyg = dy[i, j] * gamma[j]
                dx[i, j] = <floating> (rs * (dyg - s1 - xh * s2))
    return dx_arr, dgamma_arr, dbeta_arr


def causal_softmax_forward(floating[:, :, ::1] scores):
    cdef Py_ssize_t r = scores.shape[0], t = scores.shape[1]
    assert scores.shape[2] == t, "scores must be square in the last two dims"
    dtype = np.float32 if floating is float else np.float64
    probs_arr = np.zeros((r, t, t), dtype=dtype)
    cdef floating[:, :, ::1] probs = probs_arr
    cdef Py_ssize_t b, i, j
    cdef double m, z, e
    with nogil:
        for b in range(r):
            for i in range(t):
                m = scores[b, i, 0]
                for j in range(1, i + 1):
                    if scores[b, i, j] > m:
                        m = scores[b, i, j]
                z = 0.0
                for j in range(i + 1):
                    e = exp(scores[b, i, j] - m)
                    probs[b, i, j] = <floating> e
                    z += e
                for j in range(i + 1):
                    probs[b, i, j] = <floating> (probs[b, i, j] / z)
    return probs_arr


def causal_softmax_backward(floating[:, :, ::1] dprobs, floating[:, :, ::1] probs):
    cdef Py_ssize_t r = probs.shape[0], t = probs.shape[1]
    dtype = np.float32 if floating is float else np.float64
    ds_arr = np.zeros((r, t, t), dtype=dtype)
    cdef floating[:, :, ::1] ds = ds_arr
    cdef Py_ssize_t b, i, j
    cdef double inner
    with nogil:
        for b in range(r):
            for i in range(t):
                inner = 0.0
                for j in range(i + 1):
                    inner += dprobs[b, i, j] * probs[b, i, j]
                for j in range(i + 1):
                    ds[b, i, j] = <floating> (probs[b, i, j] * (dprobs[b, i, j] - inner))
    return ds_arr


def nll_rows(floating[:, ::1] logits, cnp.int64_t[::1] targets):
    cdef Py_ssize_t n = logits.shape[0], v = logits.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, z
    with nogil:
        for i in range(n):
            m = logits[i, 0]
            for j in range(1, v):
                if logits[i, j] > m:
                    m = logits[i, j]
            z = 0.0
            for j in range(v):
                z += exp(logits[i, j] - m)
            out[i] = log(z) + m - logits[i, targets[i]]
    return out_arr


def cross_entropy_forward_backward(floating[:, ::1] logits, cnp.int64_t[::1] targets,
                                   double[::1] weights):
    cdef Py_ssize_t n = logits.shape[0], v = logits.shape[1]
    dtype = np.float32 if floating is float else np.float64
    dlogits_arr = np.zeros((n, v), dtype=dtype)
    cdef floating[:, ::1] dlogits = dlogits_arr
    cdef Py_ssize_t i, j
    cdef double m, z, w, loss = 0.0
    with nogil:
        for i in range(n):
            w = weights[i]
            if w == 0.0:
                continue
            m = logits[i, 0]
            for j in range(1, v):
                if logits[i, j] > m:
                    m = logits[i, j]
            z = 0.0
            for j in range(v):
                z += exp(logits[i, j] - m)
            loss += w * (log(z) + m - logits[i, targets[i]])
            for j in range(v):
                dlogits[i, j] = <floating> (w * exp(logits[i, j] - m) / z)
            dlogits[i, targets[i]] -= <floating> w
    return loss, dlogits_arr


def embedding_scatter_add(floating[:, ::1] out, cnp.int64_t[::1] ids, floating[:, ::1] grads):
    cdef Py_ssize_t n = ids.shape[0], d = out.shape[1]
    cdef Py_ssize_t i, j, row
    with nogil:
        for i in range(n):
            row = ids[i]
            for j in range(d):
                out[row, j] += grads[i, j]
    return None
