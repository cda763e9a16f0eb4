"""Pure numpy kernels; the fallback when the compiled extension is missing.

Arithmetic is written in the same order as ``_ckernels.pyx`` so both backends
agree to rounding, and within one backend the OT and UOT iterations share
every floating-point operation on the flux and dual variables.
"""

import numpy as np

NAME = "python"


def _axis_view(a, shape, axis):
    # (outer, n_axis, inner) view of a flat row-major array
    outer = int(np.prod(shape[:axis], dtype=np.int64))
    inner = int(np.prod(shape[axis + 1:], dtype=np.int64))
    return a.reshape(outer, shape[axis], inner)


def divergence(m, shape, spacings, out=None):
    n = m.shape[1]
    if out is None:
        out = np.zeros(n)
    else:
        out[:] = 0.0
    for i, h in enumerate(spacings):
        mi = _axis_view(m[i], shape, i)
        o = _axis_view(out, shape, i)
        o[:, 0, :] += mi[:, 0, :] / h
        o[:, 1:-1, :] += (mi[:, 1:-1, :] - mi[:, :-2, :]) / h
        o[:, -1, :] += (-mi[:, -2, :]) / h
    return out


def gradient(u, shape, spacings, out=None):
    d = len(shape)
    if out is None:
        out = np.empty((d, u.size))
    for i, h in enumerate(spacings):
        ui = _axis_view(u, shape, i)
        gi = _axis_view(out[i], shape, i)
        gi[:, :-1, :] = (ui[:, 1:, :] - ui[:, :-1, :]) / h
        gi[:, -1, :] = 0.0
    return out


def shrink(v, lam):
    """Soft threshold with an exact ``+0.0`` in the dead zone."""
    a = np.abs(v)
    out = np.where(v > 0, v - lam, v + lam)
    out[a <= lam] = 0.0
    return out


def shrink_flux(v, lam, p):
    if p == 1:
        return shrink(v, lam)
    norm = np.sqrt((v * v).sum(axis=0))
    scale = np.zeros_like(norm)
    live = norm > lam
    scale[live] = 1.0 - lam / norm[live]
    return v * scale


def pdhg_run(m, eta, phi, m_bar, eta_bar, rho, shape, spacings,
             mu, tau, alpha, p, max_steps, tol, gaps):
    """Advance the iteration in place; return the number of steps taken.

    ``alpha`` is ``inf`` for the balanced problem (``eta``/``eta_bar`` unused).
    ``gaps[k]`` receives the stopping gap of step ``k``; the loop stops after
    the first step whose gap is ``<= tol``.
    """
    w = float(np.prod(spacings))
    balanced = not np.isfinite(alpha)
    thresh = alpha * mu
    for k in range(max_steps):
        g = gradient(phi, shape, spacings)
        m_new = shrink_flux(m + mu * g, mu, p)
        m_bar[:] = 2.0 * m_new - m
        dm = m_new - m
        divb = divergence(m_bar, shape, spacings)
        ddiv = divergence(dm, shape, spacings)
        if balanced:
            phi_new = phi + tau * (divb - rho)
            dphi = phi_new - phi
            r = (w * float((dm * dm).sum()) / mu
                 + w * float((dphi * dphi).sum()) / tau
                 - 2.0 * w * float((dphi * ddiv).sum()))
        else:
            eta_new = shrink(eta + mu * phi, thresh)
            eta_bar[:] = 2.0 * eta_new - eta
            deta = eta_new - eta
            phi_new = phi + tau * ((divb - eta_bar) - rho)
            dphi = phi_new - phi
            r = (w * (float((dm * dm).sum()) + float((deta * deta).sum())) / mu
                 + w * float((dphi * dphi).sum()) / tau
                 - 2.0 * w * float((dphi * (ddiv - deta)).sum()))
            eta[:] = eta_new
        m[:] = m_new
        phi[:] = phi_new
        gaps[k] = r
        if r <= tol:
            return k + 1
    return max_steps
