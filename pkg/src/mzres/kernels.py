"""Hot loops of the edge-based discretisation and the implicit sweeps.

The pointwise flux formulas below use plain arithmetic only, so one source
serves three purposes: numba compiles them for scalar loops, the numpy
fallback calls them on whole edge arrays, and both evaluate them with
complex arguments to obtain exact first-order Jacobians by complex step.

Parameter vector ``par``: gamma, R, p_inf, entropy-fix, mu, conductivity,
alpha.
"""
from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA, default_backend, jit_group

FREESTREAM, SLIP_WALL, NO_SLIP_WALL, OUTFLOW = 0, 1, 2, 3
LIM_NONE, LIM_LIVE, LIM_FROZEN = 0, 1, 2
CSTEP = 1e-30


# --- pointwise formulas ---------------------------------------------------

def absc(x):
    # |x| that keeps the complex-step derivative
    return x * (1.0 - 2.0 * (x.real < 0.0))


def posc(x):
    return x * (x.real > 0.0)


def euler_flux(pg, u, v, T, nx, ny, gam, rgas, pinf):
    """Projected Euler flux; momentum rows carry gauge pressure only.

    The p_inf part integrates to zero over every closed dual volume.
    """
    rho = (pinf + pg) / (rgas * T)
    un = u * nx + v * ny
    h = gam / (gam - 1.0) * rgas * T + 0.5 * (u * u + v * v)
    m = rho * un
    return m, m * u + pg * nx, m * v + pg * ny, m * h


def roe_flux(pgL, uL, vL, TL, pgR, uR, vR, TR, nx, ny, gam, rgas, pinf, efix):
    area = np.sqrt(nx * nx + ny * ny)
    safe = area + (area == 0.0)
    ex = nx / safe
    ey = ny / safe

    rhoL = (pinf + pgL) / (rgas * TL)
    rhoR = (pinf + pgR) / (rgas * TR)
    cpt = gam / (gam - 1.0) * rgas
    HL = cpt * TL + 0.5 * (uL * uL + vL * vL)
    HR = cpt * TR + 0.5 * (uR * uR + vR * vR)
    qnL = uL * ex + vL * ey
    qnR = uR * ex + vR * ey

    rt = np.sqrt(rhoR / rhoL)
    rho = rt * rhoL
    den = 1.0 + rt
    u = (uL + rt * uR) / den
    v = (vL + rt * vR) / den
    H = (HL + rt * HR) / den
    q2 = u * u + v * v
    a2 = (gam - 1.0) * (H - 0.5 * q2)
    a = np.sqrt(a2)
    qn = u * ex + v * ey

    drho = rhoR - rhoL
    dp = pgR - pgL
    du = uR - uL
    dv = vR - vL
    dqn = qnR - qnL

    delta = efix * a
    l1 = absc(qn - a)
    l2 = absc(qn)
    l3 = absc(qn + a)
    t1 = posc(delta - l1)
    t3 = posc(delta - l3)
    l1 = l1 + t1 * t1 / (2.0 * delta + 1e-300)
    l3 = l3 + t3 * t3 / (2.0 * delta + 1e-300)

    s1 = l1 * (dp - rho * a * dqn) / (2.0 * a2)
    s2 = l2 * (drho - dp / a2)
    s3 = l3 * (dp + rho * a * dqn) / (2.0 * a2)
    s4 = l2 * rho

    d1 = s1 + s2 + s3
    d2 = s1 * (u - a * ex) + s2 * u + s3 * (u + a * ex) + s4 * (du - dqn * ex)
    d3 = s1 * (v - a * ey) + s2 * v + s3 * (v + a * ey) + s4 * (dv - dqn * ey)
    d4 = (s1 * (H - a * qn) + s2 * 0.5 * q2 + s3 * (H + a * qn)
          + s4 * (u * du + v * dv - qn * dqn))

    mL = rhoL * qnL
    mR = rhoR * qnR
    f1 = 0.5 * (mL + mR - d1) * area
    f2 = 0.5 * (mL * uL + pgL * ex + mR * uR + pgR * ex - d2) * area
    f3 = 0.5 * (mL * vL + pgL * ey + mR * vR + pgR * ey - d3) * area
    f4 = 0.5 * (mL * HL + mR * HR - d4) * area
    return f1, f2, f3, f4


def visc_flux(uj, vj, Tj, uk, vk, Tk,
              uxj, uyj, vxj, vyj, Txj, Tyj,
              uxk, uyk, vxk, vyk, Txk, Tyk,
              ex, ey, nx, ny, mu, kc, alpha):
    """Viscous flux F_v . n with alpha-damped face gradients."""
    elen = np.sqrt(ex * ex + ey * ey)
    hx = ex / elen
    hy = ey / elen
    c = alpha / (2.0 * elen)

    gx = 0.5 * (uxj + uxk)
    gy = 0.5 * (uyj + uyk)
    jmp = c * ((uk - uj) - (gx * ex + gy * ey))
    ux = gx + jmp * hx
    uy = gy + jmp * hy

    gx = 0.5 * (vxj + vxk)
    gy = 0.5 * (vyj + vyk)
    jmp = c * ((vk - vj) - (gx * ex + gy * ey))
    vx = gx + jmp * hx
    vy = gy + jmp * hy

    gx = 0.5 * (Txj + Txk)
    gy = 0.5 * (Tyj + Tyk)
    jmp = c * ((Tk - Tj) - (gx * ex + gy * ey))
    Tx = gx + jmp * hx
    Ty = gy + jmp * hy

    div = (2.0 / 3.0) * (ux + vy)
    txx = mu * (2.0 * ux - div)
    tyy = mu * (2.0 * vy - div)
    txy = mu * (uy + vx)
    um = 0.5 * (uj + uk)
    vm = 0.5 * (vj + vk)
    f2 = txx * nx + txy * ny
    f3 = txy * nx + tyy * ny
    f4 = um * f2 + vm * f3 + kc * (Tx * nx + Ty * ny)
    return 0.0 * f2, f2, f3, f4


def bc_flux(tag, pg, u, v, T, nx, ny, gam, rgas, pinf, efix, wi0, wi1, wi2, wi3):
    """Boundary half-face flux for the scalar (numba) loops."""
    if tag == FREESTREAM:
        return roe_flux(pg, u, v, T, wi0, wi1, wi2, wi3, nx, ny, gam, rgas, pinf, efix)
    if tag == OUTFLOW:
        return euler_flux(0.0 * pg, u, v, T, nx, ny, gam, rgas, pinf)
    # slip and no-slip walls: pressure only; no-slip momentum rows are
    # replaced by Dirichlet conditions after assembly
    z = 0.0 * pg
    return z, pg * nx, pg * ny, z


def van_albada(a, b, c):
    num = 2.0 * a * b + c
    return posc(num / (a * a + b * b + c))


# --- numba loops --------------------------------------------------------------

def nb_gradients(x, edges, lsq_inv, w, grad):
    n = w.shape[0]
    grad[:] = 0.0
    for e in range(edges.shape[0]):
        j = edges[e, 0]
        k = edges[e, 1]
        ex = x[k, 0] - x[j, 0]
        ey = x[k, 1] - x[j, 1]
        for m in range(4):
            d = w[k, m] - w[j, m]
            grad[j, m, 0] += ex * d
            grad[j, m, 1] += ey * d
            grad[k, m, 0] += ex * d
            grad[k, m, 1] += ey * d
    for j in range(n):
        for m in range(4):
            bx = grad[j, m, 0]
            by = grad[j, m, 1]
            grad[j, m, 0] = lsq_inv[j, 0, 0] * bx + lsq_inv[j, 0, 1] * by
            grad[j, m, 1] = lsq_inv[j, 1, 0] * bx + lsq_inv[j, 1, 1] * by


def nb_residual(x, edges, enorm, bnode, bnorm, btag, dnode, w, grad, recon, limiter,
                viscous, phi, limc, par, winf, res, counter):
    gam = par[0]
    rgas = par[1]
    pinf = par[2]
    efix = par[3]
    mu = par[4]
    kc = par[5]
    alpha = par[6]
    res[:] = 0.0
    qL = np.empty(4)
    qR = np.empty(4)
    nfall = 0
    for e in range(edges.shape[0]):
        j = edges[e, 0]
        k = edges[e, 1]
        ex = x[k, 0] - x[j, 0]
        ey = x[k, 1] - x[j, 1]
        nx = enorm[e, 0]
        ny = enorm[e, 1]
        for m in range(4):
            qL[m] = w[j, m]
            qR[m] = w[k, m]
        if recon:
            for m in range(4):
                aL = grad[j, m, 0] * ex + grad[j, m, 1] * ey
                aR = grad[k, m, 0] * ex + grad[k, m, 1] * ey
                if limiter == LIM_LIVE:
                    d = w[k, m] - w[j, m]
                    phi[e, 0, m] = van_albada(aL, d, limc[m])
                    phi[e, 1, m] = van_albada(aR, d, limc[m])
                if limiter != LIM_NONE:
                    aL = phi[e, 0, m] * aL
                    aR = phi[e, 1, m] * aR
                qL[m] = w[j, m] + 0.5 * aL
                qR[m] = w[k, m] - 0.5 * aR
            if (qL[3] <= 0.0 or qR[3] <= 0.0 or pinf + qL[0] <= 0.0
                    or pinf + qR[0] <= 0.0):
                nfall += 1
                for m in range(4):
                    qL[m] = w[j, m]
                    qR[m] = w[k, m]
        f1, f2, f3, f4 = roe_flux(qL[0], qL[1], qL[2], qL[3], qR[0], qR[1], qR[2], qR[3],
                                  nx, ny, gam, rgas, pinf, efix)
        if viscous:
            g1, g2, g3, g4 = visc_flux(
                w[j, 1], w[j, 2], w[j, 3], w[k, 1], w[k, 2], w[k, 3],
                grad[j, 1, 0], grad[j, 1, 1], grad[j, 2, 0], grad[j, 2, 1],
                grad[j, 3, 0], grad[j, 3, 1],
                grad[k, 1, 0], grad[k, 1, 1], grad[k, 2, 0], grad[k, 2, 1],
                grad[k, 3, 0], grad[k, 3, 1],
                ex, ey, nx, ny, mu, kc, alpha)
            f2 = f2 - g2
            f3 = f3 - g3
            f4 = f4 - g4
        res[j, 0] += f1
        res[k, 0] -= f1
        res[j, 1] += f2
        res[k, 1] -= f2
        res[j, 2] += f3
        res[k, 2] -= f3
        res[j, 3] += f4
        res[k, 3] -= f4
    for b in range(bnode.shape[0]):
        j = bnode[b]
        f1, f2, f3, f4 = bc_flux(btag[b], w[j, 0], w[j, 1], w[j, 2], w[j, 3],
                                 bnorm[b, 0], bnorm[b, 1], gam, rgas, pinf, efix,
                                 winf[0], winf[1], winf[2], winf[3])
        res[j, 0] += f1
        res[j, 1] += f2
        res[j, 2] += f3
        res[j, 3] += f4
    for b in range(dnode.shape[0]):
        res[dnode[b], 1] = 0.0
        res[dnode[b], 2] = 0.0
    counter[0] = nfall


def nb_jacobian(x, edges, enorm, bnode, bnorm, btag, w, grad, viscous, par, winf,
                diag, offd):
    """First-order Jacobian blocks by complex step.

    ``offd[e, 0]`` is the block (row j, column k), ``offd[e, 1]`` is (row k,
    column j); ``diag`` accumulates the node blocks.
    """
    gam = par[0]
    rgas = par[1]
    pinf = par[2]
    efix = par[3]
    mu = par[4]
    kc = par[5]
    alpha = par[6]
    diag[:] = 0.0
    zL = np.empty(4, dtype=np.complex128)
    zR = np.empty(4, dtype=np.complex128)
    col = np.empty(4)
    for e in range(edges.shape[0]):
        j = edges[e, 0]
        k = edges[e, 1]
        ex = x[k, 0] - x[j, 0]
        ey = x[k, 1] - x[j, 1]
        nx = enorm[e, 0]
        ny = enorm[e, 1]
        for side in range(2):
            for m in range(4):
                for i in range(4):
                    zL[i] = w[j, i]
                    zR[i] = w[k, i]
                if side == 0:
                    zL[m] += 1j * CSTEP
                else:
                    zR[m] += 1j * CSTEP
                f1, f2, f3, f4 = roe_flux(zL[0], zL[1], zL[2], zL[3], zR[0], zR[1], zR[2],
                                          zR[3], nx, ny, gam, rgas, pinf, efix)
                col[0] = f1.imag
                col[1] = f2.imag
                col[2] = f3.imag
                col[3] = f4.imag
                if viscous:
                    g1, g2, g3, g4 = visc_flux(
                        zL[1], zL[2], zL[3], zR[1], zR[2], zR[3],
                        grad[j, 1, 0], grad[j, 1, 1], grad[j, 2, 0], grad[j, 2, 1],
                        grad[j, 3, 0], grad[j, 3, 1],
                        grad[k, 1, 0], grad[k, 1, 1], grad[k, 2, 0], grad[k, 2, 1],
                        grad[k, 3, 0], grad[k, 3, 1],
                        ex, ey, nx, ny, mu, kc, alpha)
                    col[1] -= g2.imag
                    col[2] -= g3.imag
                    col[3] -= g4.imag
                for i in range(4):
                    d = col[i] / CSTEP
                    if side == 0:
                        diag[j, i, m] += d
                        offd[e, 1, i, m] = -d
                    else:
                        offd[e, 0, i, m] = d
                        diag[k, i, m] -= d
    for b in range(bnode.shape[0]):
        j = bnode[b]
        for m in range(4):
            for i in range(4):
                zL[i] = w[j, i]
            zL[m] += 1j * CSTEP
            f1, f2, f3, f4 = bc_flux(btag[b], zL[0], zL[1], zL[2], zL[3],
                                     bnorm[b, 0], bnorm[b, 1], gam, rgas, pinf,
                                     efix, winf[0], winf[1], winf[2], winf[3])
            diag[j, 0, m] += f1.imag / CSTEP
            diag[j, 1, m] += f2.imag / CSTEP
            diag[j, 2, m] += f3.imag / CSTEP
            diag[j, 3, m] += f4.imag / CSTEP


def nb_sgs(dinv, offd, adj_ptr, adj_nbr, adj_edge, adj_side, rhs, dx, nsweeps):
    """Symmetric block Gauss-Seidel on the node-ordered system."""
    n = rhs.shape[0]
    r = np.empty(4)
    for s in range(nsweeps):
        for phase in range(2):
            for jj in range(n):
                j = jj if phase == 0 else n - 1 - jj
                for i in range(4):
                    r[i] = rhs[j, i]
                for p in range(adj_ptr[j], adj_ptr[j + 1]):
                    nb = adj_nbr[p]
                    blk = offd[adj_edge[p], adj_side[p]]
                    for i in range(4):
                        acc = 0.0
                        for m in range(4):
                            acc += blk[i, m] * dx[nb, m]
                        r[i] -= acc
                for i in range(4):
                    acc = 0.0
                    for m in range(4):
                        acc += dinv[j, i, m] * r[m]
                    dx[j, i] = acc


_POINTWISE = (absc, posc, euler_flux, roe_flux, visc_flux, bc_flux, van_albada)
_LOOPS = (nb_gradients, nb_residual, nb_jacobian, nb_sgs)
_numba_ns = None


def numba_kernels():
    global _numba_ns
    if _numba_ns is None:
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not available")
        _numba_ns = jit_group(_POINTWISE + _LOOPS, globals())
    return _numba_ns


# --- numpy fallback -----------------------------------------------------------

def _scatter(n, j, k, f, bnode, fb):
    """+f at j and -f at k edge by edge, then boundary terms, in loop order."""
    ne = j.size
    idx = np.empty(2 * ne + bnode.size, dtype=np.int64)
    idx[0:2 * ne:2] = j
    idx[1:2 * ne:2] = k
    idx[2 * ne:] = bnode
    val = np.empty(idx.size)
    val[0:2 * ne:2] = f
    val[1:2 * ne:2] = -f
    val[2 * ne:] = fb
    return np.bincount(idx, weights=val, minlength=n)


def np_gradients(x, edges, lsq_inv, w, grad):
    n = w.shape[0]
    j, k = edges[:, 0], edges[:, 1]
    ex = x[k, 0] - x[j, 0]
    ey = x[k, 1] - x[j, 1]
    d = w[k] - w[j]
    idx = np.empty(2 * j.size, dtype=np.int64)
    idx[0::2] = j
    idx[1::2] = k
    for m in range(4):
        for c, e in ((0, ex), (1, ey)):
            val = np.repeat(e * d[:, m], 2)
            grad[:, m, c] = np.bincount(idx, weights=val, minlength=n)
    bx = grad[:, :, 0].copy()
    by = grad[:, :, 1].copy()
    grad[:, :, 0] = lsq_inv[:, 0, 0, None] * bx + lsq_inv[:, 0, 1, None] * by
    grad[:, :, 1] = lsq_inv[:, 1, 0, None] * bx + lsq_inv[:, 1, 1, None] * by


def _np_bc(tag, wb, nb, par, winf):
    gam, rgas, pinf, efix = par[:4]
    pg, u, v, T = (wb[:, i] for i in range(4))
    nx, ny = nb[:, 0], nb[:, 1]
    dtype = np.result_type(wb.dtype, float)
    out = np.zeros((wb.shape[0], 4), dtype=dtype)
    sel = tag == FREESTREAM
    if sel.any():
        wi = [np.full(sel.sum(), c) for c in winf]
        out[sel] = np.stack(roe_flux(pg[sel], u[sel], v[sel], T[sel], *wi, nx[sel], ny[sel],
                                     gam, rgas, pinf, efix), axis=1)
    sel = tag == OUTFLOW
    if sel.any():
        out[sel] = np.stack(euler_flux(0.0 * pg[sel], u[sel], v[sel], T[sel], nx[sel], ny[sel],
                                       gam, rgas, pinf), axis=1)
    sel = (tag == SLIP_WALL) | (tag == NO_SLIP_WALL)
    out[sel, 1] = pg[sel] * nx[sel]
    out[sel, 2] = pg[sel] * ny[sel]
    return out


def _visc_args(w, grad, j, k):
    return (w[j, 1], w[j, 2], w[j, 3], w[k, 1], w[k, 2], w[k, 3],
            grad[j, 1, 0], grad[j, 1, 1], grad[j, 2, 0], grad[j, 2, 1],
            grad[j, 3, 0], grad[j, 3, 1],
            grad[k, 1, 0], grad[k, 1, 1], grad[k, 2, 0], grad[k, 2, 1],
            grad[k, 3, 0], grad[k, 3, 1])


def np_residual(x, edges, enorm, bnode, bnorm, btag, dnode, w, grad, recon, limiter,
                viscous, phi, limc, par, winf, res, counter):
    gam, rgas, pinf, efix, mu, kc, alpha = par[:7]
    n = w.shape[0]
    j, k = edges[:, 0], edges[:, 1]
    ex = x[k, 0] - x[j, 0]
    ey = x[k, 1] - x[j, 1]
    nx, ny = enorm[:, 0], enorm[:, 1]
    qL = w[j].copy()
    qR = w[k].copy()
    nfall = 0
    if recon:
        aL = grad[j, :, 0] * ex[:, None] + grad[j, :, 1] * ey[:, None]
        aR = grad[k, :, 0] * ex[:, None] + grad[k, :, 1] * ey[:, None]
        if limiter == LIM_LIVE:
            d = w[k] - w[j]
            phi[:, 0, :] = van_albada(aL, d, limc[None, :])
            phi[:, 1, :] = van_albada(aR, d, limc[None, :])
        if limiter != LIM_NONE:
            aL = phi[:, 0, :] * aL
            aR = phi[:, 1, :] * aR
        qL = w[j] + 0.5 * aL
        qR = w[k] - 0.5 * aR
        bad = ((qL[:, 3] <= 0.0) | (qR[:, 3] <= 0.0) | (pinf + qL[:, 0] <= 0.0)
               | (pinf + qR[:, 0] <= 0.0))
        nfall = int(bad.sum())
        qL[bad] = w[j[bad]]
        qR[bad] = w[k[bad]]
    f = list(roe_flux(*qL.T, *qR.T, nx, ny, gam, rgas, pinf, efix))
    if viscous:
        g = visc_flux(*_visc_args(w, grad, j, k), ex, ey, nx, ny, mu, kc, alpha)
        for m in (1, 2, 3):
            f[m] = f[m] - g[m]
    fb = _np_bc(btag, w[bnode], bnorm, par, winf)
    for m in range(4):
        res[:, m] = _scatter(n, j, k, f[m], bnode, fb[:, m])
    res[dnode, 1:3] = 0.0
    counter[0] = nfall


def np_jacobian(x, edges, enorm, bnode, bnorm, btag, w, grad, viscous, par, winf,
                diag, offd):
    gam, rgas, pinf, efix, mu, kc, alpha = par[:7]
    n = w.shape[0]
    j, k = edges[:, 0], edges[:, 1]
    ex = x[k, 0] - x[j, 0]
    ey = x[k, 1] - x[j, 1]
    nx, ny = enorm[:, 0], enorm[:, 1]
    diag[:] = 0.0
    for side in range(2):
        for m in range(4):
            zL = w[j].astype(complex)
            zR = w[k].astype(complex)
            (zL if side == 0 else zR)[:, m] += 1j * CSTEP
            col = np.stack(roe_flux(*zL.T, *zR.T, nx, ny, gam, rgas, pinf, efix), axis=1).imag
            if viscous:
                g = visc_flux(zL[:, 1], zL[:, 2], zL[:, 3], zR[:, 1], zR[:, 2], zR[:, 3],
                              *_visc_args(w, grad, j, k)[6:], ex, ey, nx, ny, mu, kc, alpha)
                for i in (1, 2, 3):
                    col[:, i] -= np.imag(g[i])
            d = col / CSTEP
            if side == 0:
                offd[:, 1, :, m] = -d
                for i in range(4):
                    diag[:, i, m] += np.bincount(j, weights=d[:, i], minlength=n)
            else:
                offd[:, 0, :, m] = d
                for i in range(4):
                    diag[:, i, m] -= np.bincount(k, weights=d[:, i], minlength=n)
    for m in range(4):
        zb = w[bnode].astype(complex)
        zb[:, m] += 1j * CSTEP
        d = _np_bc(btag, zb, bnorm, par, winf).imag / CSTEP
        for i in range(4):
            diag[:, i, m] += np.bincount(bnode, weights=d[:, i], minlength=n)


def np_sgs(dinv, offd, adj_ptr, adj_nbr, adj_edge, adj_side, rhs, dx, nsweeps):
    """Symmetric block Gauss-Seidel via sparse triangular solves.

    Scaling each block row by the inverse diagonal block makes the block
    lower and upper parts unit-triangular in scalar terms.
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve_triangular

    n = rhs.shape[0]
    rows = np.repeat(np.arange(n), np.diff(adj_ptr))
    blocks = offd[adj_edge, adj_side]  # (nnz, 4, 4)
    scaled = np.einsum("pim,pmk->pik", dinv[rows], blocks)
    lower = adj_nbr < rows
    ii = (4 * rows[:, None, None] + np.arange(4)[None, :, None]).repeat(4, axis=2)
    jj = (4 * adj_nbr[:, None, None] + np.arange(4)[None, None, :]).repeat(4, axis=1)
    shape = (4 * n, 4 * n)
    L = sp.csr_matrix((scaled[lower].ravel(), (ii[lower].ravel(), jj[lower].ravel())), shape)
    U = sp.csr_matrix((scaled[~lower].ravel(), (ii[~lower].ravel(), jj[~lower].ravel())), shape)
    eye = sp.identity(4 * n, format="csr")
    IL = (eye + L).tocsr()
    IU = (eye + U).tocsr()
    b = np.einsum("jim,jm->ji", dinv, rhs).ravel()
    x = dx.ravel().copy()
    for _ in range(nsweeps):
        x = spsolve_triangular(IL, b - U @ x, lower=True, unit_diagonal=True)
        x = spsolve_triangular(IU, b - L @ x, lower=False, unit_diagonal=True)
    dx[:] = x.reshape(n, 4)


class NumpyKernels:
    gradients = staticmethod(np_gradients)
    residual = staticmethod(np_residual)
    jacobian = staticmethod(np_jacobian)
    sgs = staticmethod(np_sgs)


class NumbaKernels:
    def __init__(self):
        ns = numba_kernels()
        self.gradients = ns.nb_gradients
        self.residual = ns.nb_residual
        self.jacobian = ns.nb_jacobian
        self.sgs = ns.nb_sgs


_cache = {}


def get_kernels(backend: str | None = None):
    backend = backend or default_backend()
    if backend not in _cache:
        _cache[backend] = NumbaKernels() if backend == "numba" else NumpyKernels()
    return _cache[backend]
