# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled propagation kernels.

Same four entry points and semantics as ``_fallback``: piecewise-constant
stepping with per-step Hermitian eigendecomposition (LAPACK ``zheev``)
for kets and Pade-13 scaling-and-squaring (BLAS ``zgemm`` + LAPACK
``zgesv``) for the non-normal GKLS generator, plus the sequential-update
forward passes of the optimizer.  All dense algebra is done column-major
in preallocated scratch buffers reused across steps.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, cos, log2, sin
from scipy.linalg.cython_blas cimport zgemm, zgemv
from scipy.linalg.cython_lapack cimport zgesv, zheev

cnp.import_array()

ctypedef double complex zc

BACKEND = "compiled"

cdef double _THETA13 = 5.371920351148152

cdef double[14] _PADE_B
_PADE_B[0] = 64764752532480000.0
_PADE_B[1] = 32382376266240000.0
_PADE_B[2] = 7771770303897600.0
_PADE_B[3] = 1187353796428800.0
_PADE_B[4] = 129060195264000.0
_PADE_B[5] = 10559470521600.0
_PADE_B[6] = 670442572800.0
_PADE_B[7] = 33522128640.0
_PADE_B[8] = 1323241920.0
_PADE_B[9] = 40840800.0
_PADE_B[10] = 960960.0
_PADE_B[11] = 16380.0
_PADE_B[12] = 182.0
_PADE_B[13] = 1.0


cdef inline void _assemble_col(zc* out, const zc* base, const zc* parts,
                               const double* amps, int n, int m) noexcept:
    """out (col-major) = base + sum_j amps[j] * parts[j] (both row-major)."""
    cdef int i, j, c
    cdef zc a
    for i in range(n):
        for j in range(n):
            out[i + j * n] = base[i * n + j]
    for c in range(m):
        a = amps[c]
        if a == 0.0:
            continue
        for i in range(n):
            for j in range(n):
                out[i + j * n] = out[i + j * n] + a * parts[c * n * n
                                                           + i * n + j]


cdef inline void _matvec_rowmajor(const zc* mat, const zc* x, zc* y,
                                  int n) noexcept:
    """y = M x for row-major M (zgemv on the transposed interpretation)."""
    cdef char trans = b'T'
    cdef int inc = 1
    cdef zc one = 1.0, zero = 0.0
    zgemv(&trans, &n, &n, &one, <zc*> mat, &n, <zc*> x, &inc, &zero, y, &inc)


cdef int _herm_step(zc* a, double* w, zc* work, int lwork, double* rwork,
                    zc* vecs, int n_vec, int ldv, double dt,
                    zc* scratch, int n) except -1:
    """Apply exp(-1j*dt*H) to ``n_vec`` vectors (rows of ``vecs``).

    ``a`` holds H column-major on entry and is destroyed (eigenvectors).
    """
    cdef char jobz = b'V', uplo = b'L'
    cdef int info = 0, i, v
    cdef char ctrans = b'C', ntrans = b'N'
    cdef int inc = 1
    cdef zc one = 1.0, zero = 0.0
    cdef double ang
    zheev(&jobz, &uplo, &n, a, &n, w, work, &lwork, rwork, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zheev failed with info={info}")
    for v in range(n_vec):
        zgemv(&ctrans, &n, &n, &one, a, &n, vecs + v * ldv, &inc, &zero,
              scratch, &inc)
        for i in range(n):
            ang = -dt * w[i]
            scratch[i] = scratch[i] * (cos(ang) + 1j * sin(ang))
        zgemv(&ntrans, &n, &n, &one, a, &n, scratch, &inc, &zero,
              vecs + v * ldv, &inc)
    return 0


cdef int _expm_pade13(zc* a, zc* a2, zc* a4, zc* a6, zc* u, zc* v,
                      zc* t1, zc* t2, int* ipiv, int n) except -1:
    """In place: a <- expm(a).  Column-major throughout."""
    cdef int i, j, s, info = 0, nsq = n * n
    cdef double norm1 = 0.0, colsum
    cdef double scale
    cdef char ntrans = b'N'
    cdef zc one = 1.0, zero = 0.0
    cdef zc b13, b11, b9, b7, b5, b3, b1
    cdef zc c12, c10, c8, c6, c4, c2, c0

    for j in range(n):
        colsum = 0.0
        for i in range(n):
            colsum += abs(a[i + j * n])
        if colsum > norm1:
            norm1 = colsum
    s = 0
    if norm1 > _THETA13:
        s = <int> ceil(log2(norm1 / _THETA13))
        scale = 2.0 ** (-s)
        for i in range(nsq):
            a[i] = a[i] * scale

    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a, &n, a, &n, &zero, a2, &n)
    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a2, &n, a2, &n, &zero, a4, &n)
    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a2, &n, a4, &n, &zero, a6, &n)

    b13 = _PADE_B[13]; b11 = _PADE_B[11]; b9 = _PADE_B[9]
    b7 = _PADE_B[7]; b5 = _PADE_B[5]; b3 = _PADE_B[3]; b1 = _PADE_B[1]
    # t1 = b13 A6 + b11 A4 + b9 A2
    for i in range(nsq):
        t1[i] = b13 * a6[i] + b11 * a4[i] + b9 * a2[i]
    # t2 = A6 t1
    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a6, &n, t1, &n, &zero, t2, &n)
    for i in range(nsq):
        t2[i] = t2[i] + b7 * a6[i] + b5 * a4[i] + b3 * a2[i]
    for i in range(n):
        t2[i + i * n] = t2[i + i * n] + b1
    # u = A t2
    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a, &n, t2, &n, &zero, u, &n)

    c12 = _PADE_B[12]; c10 = _PADE_B[10]; c8 = _PADE_B[8]
    c6 = _PADE_B[6]; c4 = _PADE_B[4]; c2 = _PADE_B[2]; c0 = _PADE_B[0]
    for i in range(nsq):
        t1[i] = c12 * a6[i] + c10 * a4[i] + c8 * a2[i]
    zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a6, &n, t1, &n, &zero, v, &n)
    for i in range(nsq):
        v[i] = v[i] + c6 * a6[i] + c4 * a4[i] + c2 * a2[i]
    for i in range(n):
        v[i + i * n] = v[i + i * n] + c0

    # solve (V - U) X = (V + U); t1 <- V - U, t2 <- V + U, X in t2
    for i in range(nsq):
        t1[i] = v[i] - u[i]
        t2[i] = v[i] + u[i]
    zgesv(&n, &n, t1, &n, ipiv, t2, &n, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgesv failed with info={info}")

    # squaring phase: a <- t2^(2^s)
    for i in range(nsq):
        a[i] = t2[i]
    for j in range(s):
        zgemm(&ntrans, &ntrans, &n, &n, &n, &one, a, &n, a, &n, &zero,
              t1, &n)
        for i in range(nsq):
            a[i] = t1[i]
    return 0


def propagate_pwc_ket(cnp.ndarray[zc, ndim=2, mode="c"] drift,
                      cnp.ndarray[zc, ndim=3, mode="c"] coups,
                      cnp.ndarray[double, ndim=2, mode="c"] amps,
                      double dt,
                      cnp.ndarray[zc, ndim=1] psi0,
                      int direction):
    cdef int n = drift.shape[0]
    cdef int m = coups.shape[0]
    cdef int n_steps = amps.shape[0]
    cdef cnp.ndarray[zc, ndim=2] out = np.empty((n_steps + 1, n),
                                                dtype=complex)
    cdef cnp.ndarray[zc, ndim=1] abuf = np.empty(n * n, dtype=complex)
    cdef cnp.ndarray[double, ndim=1] w = np.empty(n)
    cdef int lwork = 4 * n
    cdef cnp.ndarray[zc, ndim=1] work = np.empty(lwork, dtype=complex)
    cdef cnp.ndarray[double, ndim=1] rwork = np.empty(3 * n)
    cdef cnp.ndarray[zc, ndim=1] scratch = np.empty(n, dtype=complex)
    cdef int k, i
    cdef zc* drift_p = <zc*> drift.data
    cdef zc* coups_p = <zc*> coups.data if m > 0 else NULL
    cdef zc* out_p = <zc*> out.data

    if direction > 0:
        for i in range(n):
            out_p[i] = psi0[i]
        for k in range(n_steps):
            for i in range(n):
                out_p[(k + 1) * n + i] = out_p[k * n + i]
            _assemble_col(<zc*> abuf.data, drift_p, coups_p,
                          &amps[k, 0] if m > 0 else NULL, n, m)
            _herm_step(<zc*> abuf.data, <double*> w.data, <zc*> work.data,
                       lwork, <double*> rwork.data, out_p + (k + 1) * n, 1,
                       n, dt, <zc*> scratch.data, n)
    else:
        for i in range(n):
            out_p[n_steps * n + i] = psi0[i]
        for k in range(n_steps - 1, -1, -1):
            for i in range(n):
                out_p[k * n + i] = out_p[(k + 1) * n + i]
            _assemble_col(<zc*> abuf.data, drift_p, coups_p,
                          &amps[k, 0] if m > 0 else NULL, n, m)
            _herm_step(<zc*> abuf.data, <double*> w.data, <zc*> work.data,
                       lwork, <double*> rwork.data, out_p + k * n, 1,
                       n, dt, <zc*> scratch.data, n)
    return out


def propagate_pwc_dm(cnp.ndarray[zc, ndim=2, mode="c"] gen0,
                     cnp.ndarray[zc, ndim=3, mode="c"] gens,
                     cnp.ndarray[double, ndim=2, mode="c"] amps,
                     double dt,
                     cnp.ndarray[zc, ndim=1] rho0_vec,
                     int direction):
    cdef int n = gen0.shape[0]
    cdef int m = gens.shape[0]
    cdef int n_steps = amps.shape[0]
    cdef cnp.ndarray[zc, ndim=2] out = np.empty((n_steps + 1, n),
                                                dtype=complex)
    cdef cnp.ndarray[zc, ndim=2] bufs = np.empty((8, n * n), dtype=complex)
    cdef cnp.ndarray[int, ndim=1] ipiv = np.empty(n, dtype=np.intc)
    cdef int k, i, j
    cdef zc* gen0_p = <zc*> gen0.data
    cdef zc* gens_p = <zc*> gens.data if m > 0 else NULL
    cdef zc* out_p = <zc*> out.data
    cdef zc* a = <zc*> bufs.data
    cdef int nsq = n * n
    cdef char ntrans = b'N'
    cdef int inc = 1
    cdef zc one = 1.0, zero = 0.0

    if direction > 0:
        for i in range(n):
            out_p[i] = rho0_vec[i]
    else:
        for i in range(n):
            out_p[n_steps * n + i] = rho0_vec[i]

    for k in range(n_steps) if direction > 0 else range(n_steps - 1, -1, -1):
        _assemble_col(a, gen0_p, gens_p, &amps[k, 0] if m > 0 else NULL,
                      n, m)
        for i in range(nsq):
            a[i] = a[i] * dt
        _expm_pade13(a, a + nsq, a + 2 * nsq, a + 3 * nsq, a + 4 * nsq,
                     a + 5 * nsq, a + 6 * nsq, a + 7 * nsq,
                     <int*> ipiv.data, n)
        if direction > 0:
            zgemv(&ntrans, &n, &n, &one, a, &n, out_p + k * n, &inc, &zero,
                  out_p + (k + 1) * n, &inc)
        else:
            zgemv(&ntrans, &n, &n, &one, a, &n, out_p + (k + 1) * n, &inc,
                  &zero, out_p + k * n, &inc)
    return out


def krotov_forward_ket(cnp.ndarray[zc, ndim=2, mode="c"] drift,
                       cnp.ndarray[zc, ndim=3, mode="c"] coups,
                       cnp.ndarray[double, ndim=2, mode="c"] amps,
                       cnp.ndarray[zc, ndim=3, mode="c"] chi,
                       cnp.ndarray[zc, ndim=2, mode="c"] psi0,
                       double dt,
                       cnp.ndarray[double, ndim=1] gain):
    cdef int n = drift.shape[0]
    cdef int m = coups.shape[0]
    cdef int n_steps = amps.shape[0]
    cdef int n_ens = psi0.shape[0]
    cdef cnp.ndarray[zc, ndim=3] out = np.empty((n_steps + 1, n_ens, n),
                                                dtype=complex)
    cdef cnp.ndarray[zc, ndim=1] abuf = np.empty(n * n, dtype=complex)
    cdef cnp.ndarray[double, ndim=1] w = np.empty(n)
    cdef int lwork = 4 * n
    cdef cnp.ndarray[zc, ndim=1] work = np.empty(lwork, dtype=complex)
    cdef cnp.ndarray[double, ndim=1] rwork = np.empty(3 * n)
    cdef cnp.ndarray[zc, ndim=1] scratch = np.empty(n, dtype=complex)
    cdef cnp.ndarray[zc, ndim=1] mx = np.empty(n, dtype=complex)
    cdef int k, i, j, v
    cdef double upd
    cdef zc acc
    cdef zc* out_p = <zc*> out.data
    cdef zc* chi_p = <zc*> chi.data
    cdef zc* coups_p = <zc*> coups.data if m > 0 else NULL
    cdef zc* mx_p = <zc*> mx.data

    for v in range(n_ens):
        for i in range(n):
            out_p[v * n + i] = psi0[v, i]
    for k in range(n_steps):
        for j in range(m):
            upd = 0.0
            for v in range(n_ens):
                _matvec_rowmajor(coups_p + j * n * n,
                                 out_p + (k * n_ens + v) * n, mx_p, n)
                acc = 0.0
                for i in range(n):
                    acc = acc + chi_p[(k * n_ens + v) * n + i].conjugate() \
                        * mx_p[i]
                upd += acc.imag
            amps[k, j] += gain[k] * upd / n_ens
        for v in range(n_ens):
            for i in range(n):
                out_p[((k + 1) * n_ens + v) * n + i] = \
                    out_p[(k * n_ens + v) * n + i]
        _assemble_col(<zc*> abuf.data, <zc*> drift.data, coups_p,
                      &amps[k, 0] if m > 0 else NULL, n, m)
        _herm_step(<zc*> abuf.data, <double*> w.data, <zc*> work.data,
                   lwork, <double*> rwork.data,
                   out_p + (k + 1) * n_ens * n, n_ens, n, dt,
                   <zc*> scratch.data, n)
    return out


def krotov_forward_dm(cnp.ndarray[zc, ndim=2, mode="c"] gen0,
                      cnp.ndarray[zc, ndim=3, mode="c"] gens,
                      cnp.ndarray[zc, ndim=3, mode="c"] comms,
                      cnp.ndarray[double, ndim=2, mode="c"] amps,
                      cnp.ndarray[zc, ndim=3, mode="c"] chi,
                      cnp.ndarray[zc, ndim=2, mode="c"] rho0_vec,
                      double dt,
                      cnp.ndarray[double, ndim=1] gain):
    cdef int n = gen0.shape[0]
    cdef int m = gens.shape[0]
    cdef int n_steps = amps.shape[0]
    cdef int n_ens = rho0_vec.shape[0]
    cdef cnp.ndarray[zc, ndim=3] out = np.empty((n_steps + 1, n_ens, n),
                                                dtype=complex)
    cdef cnp.ndarray[zc, ndim=2] bufs = np.empty((8, n * n), dtype=complex)
    cdef cnp.ndarray[int, ndim=1] ipiv = np.empty(n, dtype=np.intc)
    cdef cnp.ndarray[zc, ndim=1] mx = np.empty(n, dtype=complex)
    cdef int k, i, j, v, nsq = n * n
    cdef double upd
    cdef zc acc
    cdef zc* out_p = <zc*> out.data
    cdef zc* chi_p = <zc*> chi.data
    cdef zc* comms_p = <zc*> comms.data if m > 0 else NULL
    cdef zc* gens_p = <zc*> gens.data if m > 0 else NULL
    cdef zc* a = <zc*> bufs.data
    cdef zc* mx_p = <zc*> mx.data
    cdef char ntrans = b'N'
    cdef int inc = 1
    cdef zc one = 1.0, zero = 0.0

    for v in range(n_ens):
        for i in range(n):
            out_p[v * n + i] = rho0_vec[v, i]
    for k in range(n_steps):
        for j in range(m):
            upd = 0.0
            for v in range(n_ens):
                _matvec_rowmajor(comms_p + j * nsq,
                                 out_p + (k * n_ens + v) * n, mx_p, n)
                acc = 0.0
                for i in range(n):
                    acc = acc + chi_p[(k * n_ens + v) * n + i].conjugate() \
                        * mx_p[i]
                upd += acc.imag
            amps[k, j] += gain[k] * upd / n_ens
        _assemble_col(a, <zc*> gen0.data, gens_p,
                      &amps[k, 0] if m > 0 else NULL, n, m)
        for i in range(nsq):
            a[i] = a[i] * dt
        _expm_pade13(a, a + nsq, a + 2 * nsq, a + 3 * nsq, a + 4 * nsq,
                     a + 5 * nsq, a + 6 * nsq, a + 7 * nsq,
                     <int*> ipiv.data, n)
        for v in range(n_ens):
            zgemv(&ntrans, &n, &n, &one, a, &n, out_p + (k * n_ens + v) * n,
                  &inc, &zero, out_p + ((k + 1) * n_ens + v) * n, &inc)
    return out
