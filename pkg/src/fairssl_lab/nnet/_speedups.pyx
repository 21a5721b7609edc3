# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""BLAS-backed kernels for the minibatch hot path.

All matmuls route through dgemm on row-major buffers via the operand swap
(row-major C = A @ B is column-major C^T = B^T @ A^T); elementwise passes
and the Adam update run as single fused C loops to avoid numpy temporaries.
Contract mirrors _np_kernels.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "compiled"


cdef void _dgemm_rm(char ta, char tb, int m, int n, int k,
                    double* a, int lda, double* b, int ldb,
                    double* c, int ldc) noexcept nogil:
    # column-major call computing the transposed row-major product
    cdef double one = 1.0, zero = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &one, a, &lda, b, &ldb, &zero, c, &ldc)


def matmul_nn(double[:, ::1] a, double[:, ::1] b):
    """(m,k) @ (k,n) -> (m,n)"""
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    if b.shape[0] != k:
        raise ValueError("matmul_nn: inner dims disagree")
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    if m and n and k:
        with nogil:
            _dgemm_rm(b'N', b'N', n, m, k, &b[0, 0], n, &a[0, 0], k, &c[0, 0], n)
    elif m and n:
        out[:] = 0.0
    return out


def matmul_tn(double[:, ::1] a, double[:, ::1] b):
    """(m,k).T @ (m,n) -> (k,n)"""
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    if b.shape[0] != m:
        raise ValueError("matmul_tn: leading dims disagree")
    out = np.empty((k, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    if m and n and k:
        with nogil:
            _dgemm_rm(b'N', b'T', n, k, m, &b[0, 0], n, &a[0, 0], k, &c[0, 0], n)
    elif k and n:
        out[:] = 0.0
    return out


def matmul_nt(double[:, ::1] a, double[:, ::1] b):
    """(m,n) @ (k,n).T -> (m,k)"""
    cdef int m = a.shape[0], n = a.shape[1], k = b.shape[0]
    if b.shape[1] != n:
        raise ValueError("matmul_nt: trailing dims disagree")
    out = np.empty((m, k), dtype=np.float64)
    cdef double[:, ::1] c = out
    if m and n and k:
        with nogil:
            _dgemm_rm(b'T', b'N', k, m, n, &b[0, 0], n, &a[0, 0], n, &c[0, 0], k)
    elif m and k:
        out[:] = 0.0
    return out


def relu(z):
    zc = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(zc)
    cdef double[::1] flat_z = zc.reshape(-1)
    cdef double[::1] flat_o = out.reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(flat_z.shape[0]):
            flat_o[i] = flat_z[i] if flat_z[i] > 0.0 else 0.0
    return out


def relu_grad_inplace(dz, z):
    if not dz.flags["C_CONTIGUOUS"]:
        raise ValueError("relu_grad_inplace needs a contiguous gradient buffer")
    cdef double[::1] flat_dz = dz.reshape(-1)
    cdef double[::1] flat_z = np.ascontiguousarray(z, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(flat_dz.shape[0]):
            if flat_z[i] <= 0.0:
                flat_dz[i] = 0.0


def add_bias_inplace(double[:, ::1] z, double[::1] bias):
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(z.shape[0]):
            for j in range(z.shape[1]):
                z[i, j] += bias[j]


def adam_step_inplace(double[::1] theta, double[::1] grad,
                      double[::1] m, double[::1] v,
                      double lr, double beta1, double beta2, double eps,
                      double bias_c1, double bias_c2):
    cdef Py_ssize_t i
    cdef double g, mh, vh
    with nogil:
        for i in range(theta.shape[0]):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
            mh = m[i] / bias_c1
            vh = v[i] / bias_c2
            theta[i] -= lr * mh / (sqrt(vh) + eps)
