# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the discrete div/grad pair and fused PDHG iterations.

Same call signatures and operation order as ``buot._pykernels``.
"""

import numpy as np

from libc.math cimport sqrt, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

NAME = "cython"

DEF MAXDIM = 16


cdef int _layout(tuple shape, tuple spacings, Py_ssize_t* shp, Py_ssize_t* strd,
                 double* hs) except -1:
    cdef int d = len(shape)
    cdef int i
    cdef Py_ssize_t s = 1
    if d < 1 or d > MAXDIM:
        raise ValueError(f"unsupported dimension {d}")
    if len(spacings) != d:
        raise ValueError("spacings/shape length mismatch")
    for i in range(d - 1, -1, -1):
        shp[i] = shape[i]
        if shp[i] < 2:
            raise ValueError("each axis needs at least two points")
        strd[i] = s
        s *= shp[i]
        hs[i] = spacings[i]
    return d


cdef void _div(const double* m, double* out, Py_ssize_t n, int d,
               const Py_ssize_t* shp, const Py_ssize_t* strd, const double* hs) noexcept nogil:
    cdef int i
    cdef Py_ssize_t o, c, r, ni, inner, outer, base, off
    cdef double h
    cdef const double* mi
    memset(out, 0, n * sizeof(double))
    for i in range(d):
        ni = shp[i]
        inner = strd[i]
        outer = n // (ni * inner)
        h = hs[i]
        mi = m + i * n
        for o in range(outer):
            base = o * ni * inner
            for r in range(inner):
                out[base + r] += mi[base + r] / h
            for c in range(1, ni - 1):
                off = base + c * inner
                for r in range(inner):
                    out[off + r] += (mi[off + r] - mi[off - inner + r]) / h
            off = base + (ni - 1) * inner
            for r in range(inner):
                out[off + r] += (-mi[off - inner + r]) / h


cdef void _grad(const double* u, double* g, Py_ssize_t n, int d,
                const Py_ssize_t* shp, const Py_ssize_t* strd, const double* hs) noexcept nogil:
    cdef int i
    cdef Py_ssize_t o, c, r, ni, inner, outer, base, off
    cdef double h
    cdef double* gi
    for i in range(d):
        ni = shp[i]
        inner = strd[i]
        outer = n // (ni * inner)
        h = hs[i]
        gi = g + i * n
        for o in range(outer):
            base = o * ni * inner
            for c in range(ni - 1):
                off = base + c * inner
                for r in range(inner):
                    gi[off + r] = (u[off + inner + r] - u[off + r]) / h
            off = base + (ni - 1) * inner
            for r in range(inner):
                gi[off + r] = 0.0


cdef inline double _shrink(double v, double lam) noexcept nogil:
    if v > lam:
        return v - lam
    if v < -lam:
        return v + lam
    return 0.0


def divergence(double[:, ::1] m, tuple shape, tuple spacings, out=None):
    cdef Py_ssize_t shp[MAXDIM]
    cdef Py_ssize_t strd[MAXDIM]
    cdef double hs[MAXDIM]
    cdef int d = _layout(shape, spacings, shp, strd, hs)
    cdef Py_ssize_t n = m.shape[1]
    if m.shape[0] != d:
        raise ValueError("flux component count does not match grid dimension")
    if out is None:
        out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        _div(&m[0, 0], &o[0], n, d, shp, strd, hs)
    return out


def gradient(double[::1] u, tuple shape, tuple spacings, out=None):
    cdef Py_ssize_t shp[MAXDIM]
    cdef Py_ssize_t strd[MAXDIM]
    cdef double hs[MAXDIM]
    cdef int d = _layout(shape, spacings, shp, strd, hs)
    cdef Py_ssize_t n = u.shape[0]
    if out is None:
        out = np.empty((d, n))
    cdef double[:, ::1] g = out
    with nogil:
        _grad(&u[0], &g[0, 0], n, d, shp, strd, hs)
    return out


def pdhg_run(double[:, ::1] m, eta, double[::1] phi, double[:, ::1] m_bar, eta_bar,
             double[::1] rho, tuple shape, tuple spacings, double mu, double tau,
             double alpha, int p, Py_ssize_t max_steps, double tol, double[::1] gaps):
    """Advance the iteration in place; return the number of steps taken."""
    cdef Py_ssize_t shp[MAXDIM]
    cdef Py_ssize_t strd[MAXDIM]
    cdef double hs[MAXDIM]
    cdef int d = _layout(shape, spacings, shp, strd, hs)
    cdef Py_ssize_t n = phi.shape[0]
    cdef Py_ssize_t dn = d * n
    cdef bint balanced = not isfinite(alpha)
    cdef double[::1] e, eb
    cdef double* ep = NULL
    cdef double* ebp = NULL
    if not balanced:
        e = eta
        eb = eta_bar
        ep = &e[0]
        ebp = &eb[0]
    if gaps.shape[0] < max_steps:
        raise ValueError("gaps buffer shorter than max_steps")

    cdef double w = 1.0
    cdef int i
    for i in range(d):
        w *= hs[i]
    cdef double thresh = alpha * mu

    cdef double* g = <double*> malloc(dn * sizeof(double))
    cdef double* mn = <double*> malloc(dn * sizeof(double))
    cdef double* dm = <double*> malloc(dn * sizeof(double))
    cdef double* divb = <double*> malloc(n * sizeof(double))
    cdef double* ddiv = <double*> malloc(n * sizeof(double))
    cdef double* en = <double*> malloc(n * sizeof(double))
    cdef double* pn = <double*> malloc(n * sizeof(double))
    if not (g and mn and dm and divb and ddiv and en and pn):
        free(g); free(mn); free(dm); free(divb); free(ddiv); free(en); free(pn)
        raise MemoryError()

    cdef double* mp = &m[0, 0]
    cdef double* mbp = &m_bar[0, 0]
    cdef double* php = &phi[0]
    cdef const double* rp = &rho[0]
    cdef Py_ssize_t k, j, x, steps = max_steps
    cdef double v, s, nrm, scale, sdm, sde, sdp, cross, dp, de, r

    with nogil:
        for k in range(max_steps):
            _grad(php, g, n, d, shp, strd, hs)
            if p == 1:
                for j in range(dn):
                    mn[j] = _shrink(mp[j] + mu * g[j], mu)
            else:
                for x in range(n):
                    s = 0.0
                    for i in range(d):
                        v = mp[i * n + x] + mu * g[i * n + x]
                        s = s + v * v
                    nrm = sqrt(s)
                    scale = 0.0
                    if nrm > mu:
                        scale = 1.0 - mu / nrm
                    for i in range(d):
                        v = mp[i * n + x] + mu * g[i * n + x]
                        mn[i * n + x] = v * scale
            sdm = 0.0
            for j in range(dn):
                mbp[j] = 2.0 * mn[j] - mp[j]
                dm[j] = mn[j] - mp[j]
                sdm = sdm + dm[j] * dm[j]
            _div(mbp, divb, n, d, shp, strd, hs)
            _div(dm, ddiv, n, d, shp, strd, hs)
            sdp = 0.0
            cross = 0.0
            if balanced:
                for x in range(n):
                    pn[x] = php[x] + tau * (divb[x] - rp[x])
                    dp = pn[x] - php[x]
                    sdp = sdp + dp * dp
                    cross = cross + dp * ddiv[x]
                r = w * sdm / mu + w * sdp / tau - 2.0 * w * cross
            else:
                sde = 0.0
                for x in range(n):
                    en[x] = _shrink(ep[x] + mu * php[x], thresh)
                    ebp[x] = 2.0 * en[x] - ep[x]
                    de = en[x] - ep[x]
                    sde = sde + de * de
                    pn[x] = php[x] + tau * ((divb[x] - ebp[x]) - rp[x])
                    dp = pn[x] - php[x]
                    sdp = sdp + dp * dp
                    cross = cross + dp * (ddiv[x] - de)
                r = w * (sdm + sde) / mu + w * sdp / tau - 2.0 * w * cross
                memcpy(ep, en, n * sizeof(double))
            memcpy(mp, mn, dn * sizeof(double))
            memcpy(php, pn, n * sizeof(double))
            gaps[k] = r
            if r <= tol:
                steps = k + 1
                break

    free(g); free(mn); free(dm); free(divb); free(ddiv); free(en); free(pn)
    return steps
