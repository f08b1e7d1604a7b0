"""Compiled RK4 kernels for the harvester equations.

Every integration in the package goes through one of the kernels below, and
all of them spell out the identical right-hand side and stage arithmetic in
IEEE order (``fastmath`` stays off).  That buys two guarantees worth more
than the ~20% speed a relaxed-FP build gives:

* a parameter row produces bit-identical states whether it is run alone,
  inside a batch, or inside the band kernel, so cross-checks between the
  trajectory path and the batch path are exact;
* in the chaotic regime a single reassociated rounding difference grows to
  O(1) by the end of the window, which would make "same config, same seed,
  same bytes" impossible to promise.

The forcing cosine is advanced with a half-angle rotation recurrence
(two rotations per step give the half-stage and full-stage phases) instead
of calling ``cos`` four times per step; the accumulated phase drift after
``n`` steps is O(n*eps), far below the RK4 truncation error.

Parameter rows are ``float64[9]`` laid out as

    (xi, chi, lam, kappa, f, omega, beta, delta, psin)

where ``psin = p*sin(phi)`` -- the equations only see that product.

The batch kernels walk the sample set in blocks of ``_BLOCK`` lanes so LLVM
can vectorise the lane loop; the block width changes nothing numerically
(each lane is an independent strict-IEEE stream), it is purely a speed knob.
"""

import numpy as np
from numba import njit

_BLOCK = 32


@njit(cache=True)
def run_states(pv, x0, xd0, v0, dt, n_steps):
    """Integrate one parameter row, recording every state.

    Returns ``(xs, xds, vs, n_bad)`` where the arrays have length
    ``n_steps + 1`` and ``n_bad`` is the index of the first non-finite
    state (``-1`` when the whole run stayed finite).  Integration stops at
    the first non-finite state; later entries are left as NaN.
    """
    xi = pv[0]
    chi = pv[1]
    lam = pv[2]
    kap = pv[3]
    f = pv[4]
    om = pv[5]
    beta = pv[6]
    delta = pv[7]
    psin = pv[8]

    xs = np.full(n_steps + 1, np.nan)
    xds = np.full(n_steps + 1, np.nan)
    vs = np.full(n_steps + 1, np.nan)

    x = x0
    xd = xd0
    v = v0
    xs[0] = x
    xds[0] = xd
    vs[0] = v
    if not (np.isfinite(x) and np.isfinite(xd) and np.isfinite(v)):
        return xs, xds, vs, 0

    ca = np.cos(0.5 * om * dt)
    sa = np.sin(0.5 * om * dt)
    c0 = 1.0
    s0 = 0.0

    for i in range(n_steps):
        ch = c0 * ca - s0 * sa
        sh = s0 * ca + c0 * sa
        c1 = ch * ca - sh * sa
        s1 = sh * ca + ch * sa

        cpl = (1.0 + beta * abs(x)) * chi
        k1x = xd
        k1xd = -2.0 * xi * xd + 0.5 * x * (1.0 + 2.0 * delta * x - x * x) \
            + cpl * v + f * c0 + psin
        k1v = -lam * v - (1.0 + beta * abs(x)) * kap * xd

        xb = x + 0.5 * dt * k1x
        xdb = xd + 0.5 * dt * k1xd
        vb = v + 0.5 * dt * k1v
        cpl = (1.0 + beta * abs(xb)) * chi
        k2x = xdb
        k2xd = -2.0 * xi * xdb + 0.5 * xb * (1.0 + 2.0 * delta * xb - xb * xb) \
            + cpl * vb + f * ch + psin
        k2v = -lam * vb - (1.0 + beta * abs(xb)) * kap * xdb

        xb = x + 0.5 * dt * k2x
        xdb = xd + 0.5 * dt * k2xd
        vb = v + 0.5 * dt * k2v
        cpl = (1.0 + beta * abs(xb)) * chi
        k3x = xdb
        k3xd = -2.0 * xi * xdb + 0.5 * xb * (1.0 + 2.0 * delta * xb - xb * xb) \
            + cpl * vb + f * ch + psin
        k3v = -lam * vb - (1.0 + beta * abs(xb)) * kap * xdb

        xb = x + dt * k3x
        xdb = xd + dt * k3xd
        vb = v + dt * k3v
        cpl = (1.0 + beta * abs(xb)) * chi
        k4x = xdb
        k4xd = -2.0 * xi * xdb + 0.5 * xb * (1.0 + 2.0 * delta * xb - xb * xb) \
            + cpl * vb + f * c1 + psin
        k4v = -lam * vb - (1.0 + beta * abs(xb)) * kap * xdb

        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        xd = xd + dt / 6.0 * (k1xd + 2.0 * k2xd + 2.0 * k3xd + k4xd)
        v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        c0 = c1
        s0 = s1

        if not (np.isfinite(x) and np.isfinite(xd) and np.isfinite(v)):
            return xs, xds, vs, i + 1
        xs[i + 1] = x
        xds[i + 1] = xd
        vs[i + 1] = v

    return xs, xds, vs, -1


@njit(cache=True)
def _mean_power_block(P, x0, xd0, v0, dt, n_steps, i_cut, out):
    """Time-averaged power for a block of parameter rows.

    ``out[j]`` gets the trapezoid average of ``lam*v**2`` over steps
    ``i_cut..n_steps``.  Non-finite lanes propagate NaN into ``out``.
    """
    nb = P.shape[0]
    xi = np.empty(nb)
    chi = np.empty(nb)
    lam = np.empty(nb)
    kap = np.empty(nb)
    f = np.empty(nb)
    om = np.empty(nb)
    beta = np.empty(nb)
    delta = np.empty(nb)
    psin = np.empty(nb)
    for j in range(nb):
        xi[j] = P[j, 0]
        chi[j] = P[j, 1]
        lam[j] = P[j, 2]
        kap[j] = P[j, 3]
        f[j] = P[j, 4]
        om[j] = P[j, 5]
        beta[j] = P[j, 6]
        delta[j] = P[j, 7]
        psin[j] = P[j, 8]

    x = np.full(nb, x0)
    xd = np.full(nb, xd0)
    v = np.full(nb, v0)
    ca = np.cos(0.5 * om * dt)
    sa = np.sin(0.5 * om * dt)
    c0 = np.ones(nb)
    s0 = np.zeros(nb)
    acc = np.zeros(nb)
    pprev = np.empty(nb)
    for j in range(nb):
        pprev[j] = lam[j] * v[j] * v[j]

    for i in range(n_steps):
        for j in range(nb):
            ch = c0[j] * ca[j] - s0[j] * sa[j]
            sh = s0[j] * ca[j] + c0[j] * sa[j]
            c1 = ch * ca[j] - sh * sa[j]
            s1 = sh * ca[j] + ch * sa[j]

            xj = x[j]
            xdj = xd[j]
            vj = v[j]

            cpl = (1.0 + beta[j] * abs(xj)) * chi[j]
            k1x = xdj
            k1xd = -2.0 * xi[j] * xdj \
                + 0.5 * xj * (1.0 + 2.0 * delta[j] * xj - xj * xj) \
                + cpl * vj + f[j] * c0[j] + psin[j]
            k1v = -lam[j] * vj - (1.0 + beta[j] * abs(xj)) * kap[j] * xdj

            xb = xj + 0.5 * dt * k1x
            xdb = xdj + 0.5 * dt * k1xd
            vb = vj + 0.5 * dt * k1v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k2x = xdb
            k2xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * ch + psin[j]
            k2v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xb = xj + 0.5 * dt * k2x
            xdb = xdj + 0.5 * dt * k2xd
            vb = vj + 0.5 * dt * k2v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k3x = xdb
            k3xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * ch + psin[j]
            k3v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xb = xj + dt * k3x
            xdb = xdj + dt * k3xd
            vb = vj + dt * k3v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k4x = xdb
            k4xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * c1 + psin[j]
            k4v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xj = xj + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            xdj = xdj + dt / 6.0 * (k1xd + 2.0 * k2xd + 2.0 * k3xd + k4xd)
            vj = vj + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

            x[j] = xj
            xd[j] = xdj
            v[j] = vj
            c0[j] = c1
            s0[j] = s1

            pcur = lam[j] * vj * vj
            if i + 1 > i_cut:
                acc[j] += 0.5 * (pprev[j] + pcur) * dt
            pprev[j] = pcur

    span = (n_steps - i_cut) * dt
    for j in range(nb):
        out[j] = acc[j] / span


@njit(cache=True)
def batch_mean_power(P, x0, xd0, v0, dt, n_steps, i_cut):
    """Time-averaged power for every row of ``P`` (shape ``(n, 9)``)."""
    n = P.shape[0]
    out = np.empty(n)
    for a in range(0, n, _BLOCK):
        b = min(a + _BLOCK, n)
        _mean_power_block(P[a:b], x0, xd0, v0, dt, n_steps, i_cut, out[a:b])
    return out


@njit(cache=True)
def _power_series_block(P, x0, xd0, v0, dt, n_steps, stride, out):
    """Instantaneous power ``lam*v**2`` sampled every ``stride`` steps.

    ``out`` has shape ``(nb, n_steps//stride + 1)``; column ``k`` holds the
    power at step ``k*stride``.
    """
    nb = P.shape[0]
    xi = np.empty(nb)
    chi = np.empty(nb)
    lam = np.empty(nb)
    kap = np.empty(nb)
    f = np.empty(nb)
    om = np.empty(nb)
    beta = np.empty(nb)
    delta = np.empty(nb)
    psin = np.empty(nb)
    for j in range(nb):
        xi[j] = P[j, 0]
        chi[j] = P[j, 1]
        lam[j] = P[j, 2]
        kap[j] = P[j, 3]
        f[j] = P[j, 4]
        om[j] = P[j, 5]
        beta[j] = P[j, 6]
        delta[j] = P[j, 7]
        psin[j] = P[j, 8]

    x = np.full(nb, x0)
    xd = np.full(nb, xd0)
    v = np.full(nb, v0)
    ca = np.cos(0.5 * om * dt)
    sa = np.sin(0.5 * om * dt)
    c0 = np.ones(nb)
    s0 = np.zeros(nb)

    for j in range(nb):
        out[j, 0] = lam[j] * v[j] * v[j]

    countdown = stride
    col = 1
    for i in range(n_steps):
        for j in range(nb):
            ch = c0[j] * ca[j] - s0[j] * sa[j]
            sh = s0[j] * ca[j] + c0[j] * sa[j]
            c1 = ch * ca[j] - sh * sa[j]
            s1 = sh * ca[j] + ch * sa[j]

            xj = x[j]
            xdj = xd[j]
            vj = v[j]

            cpl = (1.0 + beta[j] * abs(xj)) * chi[j]
            k1x = xdj
            k1xd = -2.0 * xi[j] * xdj \
                + 0.5 * xj * (1.0 + 2.0 * delta[j] * xj - xj * xj) \
                + cpl * vj + f[j] * c0[j] + psin[j]
            k1v = -lam[j] * vj - (1.0 + beta[j] * abs(xj)) * kap[j] * xdj

            xb = xj + 0.5 * dt * k1x
            xdb = xdj + 0.5 * dt * k1xd
            vb = vj + 0.5 * dt * k1v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k2x = xdb
            k2xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * ch + psin[j]
            k2v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xb = xj + 0.5 * dt * k2x
            xdb = xdj + 0.5 * dt * k2xd
            vb = vj + 0.5 * dt * k2v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k3x = xdb
            k3xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * ch + psin[j]
            k3v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xb = xj + dt * k3x
            xdb = xdj + dt * k3xd
            vb = vj + dt * k3v
            cpl = (1.0 + beta[j] * abs(xb)) * chi[j]
            k4x = xdb
            k4xd = -2.0 * xi[j] * xdb \
                + 0.5 * xb * (1.0 + 2.0 * delta[j] * xb - xb * xb) \
                + cpl * vb + f[j] * c1 + psin[j]
            k4v = -lam[j] * vb - (1.0 + beta[j] * abs(xb)) * kap[j] * xdb

            xj = xj + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            xdj = xdj + dt / 6.0 * (k1xd + 2.0 * k2xd + 2.0 * k3xd + k4xd)
            vj = vj + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

            x[j] = xj
            xd[j] = xdj
            v[j] = vj
            c0[j] = c1
            s0[j] = s1

        countdown -= 1
        if countdown == 0:
            for j in range(nb):
                out[j, col] = lam[j] * v[j] * v[j]
            col += 1
            countdown = stride


@njit(cache=True)
def batch_power_series(P, x0, xd0, v0, dt, n_steps, stride):
    """Strided power histories for every row of ``P``.

    Returns shape ``(n, n_steps//stride + 1)``; column ``k`` is the power at
    time ``k*stride*dt``.
    """
    n = P.shape[0]
    ncol = n_steps // stride + 1
    out = np.empty((n, ncol))
    for a in range(0, n, _BLOCK):
        b = min(a + _BLOCK, n)
        _power_series_block(P[a:b], x0, xd0, v0, dt, n_steps, stride,
                            out[a:b])
    return out
