"""Numba kernels for stage residual assembly.

Parallelization is over elements (volume terms) and over sub-faces (face
terms). Face contributions are written to per-face slots and gathered in a
second element-parallel pass in a fixed per-element order, so results are
bitwise identical for any thread count.
"""

import numpy as np
from numba import njit, prange

# boundary condition codes
BC_WALL = 0
BC_SUPER_INFLOW = 1
BC_SUPER_OUTFLOW = 2
BC_NONREFLECTING = 3
BC_SUB_INFLOW = 4
BC_SUB_OUTFLOW = 5

PRESSURE_TUMOLO = 0
PRESSURE_ORLANDO = 1

_OPTS = dict(parallel=True, cache=True, fastmath=False)


@njit(**_OPTS)
def volume_residuals(zeta, qx, qy, conc, V, Dxi, Deta, jinv, detjw, zb,
                     g, manning_n, nu_c, react, has_tracer,
                     F, Gx, Gy, Lx, Ly, R, hmin):
    ne, nn = zeta.shape
    nq = V.shape[0]
    for e in prange(ne):
        hm = 1.0e300
        for q in range(nq):
            zq = 0.0
            qxq = 0.0
            qyq = 0.0
            dzdxi = 0.0
            dzdeta = 0.0
            cq = 0.0
            dcdxi = 0.0
            dcdeta = 0.0
            a = jinv[e, q, 0]
            b = jinv[e, q, 1]
            cc = jinv[e, q, 2]
            d = jinv[e, q, 3]
            # contract reference derivatives first: constant fields then give
            # bitwise-zero gradients (the D tables have exact zero row sums)
            for i in range(nn):
                v = V[q, i]
                zq += v * zeta[e, i]
                qxq += v * qx[e, i]
                qyq += v * qy[e, i]
                dzdxi += Dxi[q, i] * zeta[e, i]
                dzdeta += Deta[q, i] * zeta[e, i]
                if has_tracer:
                    cq += v * conc[e, i]
                    dcdxi += Dxi[q, i] * conc[e, i]
                    dcdeta += Deta[q, i] * conc[e, i]
            dzdx = a * dzdxi + cc * dzdeta
            dzdy = b * dzdxi + d * dzdeta
            dcdx = a * dcdxi + cc * dcdeta
            dcdy = b * dcdxi + d * dcdeta
            h = zq + zb[e, q]
            if h < hm:
                hm = h
            if h <= 0.0:
                continue
            w = detjw[e, q]
            ux = qxq / h
            uy = qyq / h
            qn = np.sqrt(qxq * qxq + qyq * qyq)
            gam = g * manning_n * manning_n * qn / h ** (7.0 / 3.0)
            for i in range(nn):
                v = V[q, i]
                gx = a * Dxi[q, i] + cc * Deta[q, i]
                gy = b * Dxi[q, i] + d * Deta[q, i]
                F[e, i] += w * (qxq * gx + qyq * gy)
                Gx[e, i] += w * (qxq * (ux * gx + uy * gy) - g * h * dzdx * v)
                Gy[e, i] += w * (qyq * (ux * gx + uy * gy) - g * h * dzdy * v)
                Lx[e, i] -= w * gam * qxq * v
                Ly[e, i] -= w * gam * qyq * v
                if has_tracer:
                    R[e, i] += w * (cq * (qxq * gx + qyq * gy)
                                    - nu_c * h * (dcdx * gx + dcdy * gy)
                                    + h * react[e, q] * v)
        hmin[e] = hm


@njit(**_OPTS)
def face_residuals(zeta, qx, qy, conc, Etab,
                   f_e0, f_ei0, f_e1, f_ei1, bc_type, bc_has_c,
                   bc_zeta, bc_qx, bc_qy, bc_c,
                   f_norm, f_jw, f_zb,
                   g, pressure_form, has_tracer,
                   fc0, fc1, gx0, gx1, gy0, gy1, r0, r1,
                   lam_face, hmin_face):
    nf = f_e0.shape[0]
    nfq, nn = Etab.shape[1], Etab.shape[2]
    for f in prange(nf):
        e0 = f_e0[f]
        e1 = f_e1[f]
        i0 = f_ei0[f]
        i1 = f_ei1[f]
        nx_ = f_norm[f, 0]
        ny_ = f_norm[f, 1]
        boundary = e1 < 0
        btype = bc_type[f]
        lmax = 0.0
        hmn = 1.0e300
        for i in range(nn):
            fc0[f, i] = 0.0
            gx0[f, i] = 0.0
            gy0[f, i] = 0.0
            if has_tracer:
                r0[f, i] = 0.0
            if not boundary:
                fc1[f, i] = 0.0
                gx1[f, i] = 0.0
                gy1[f, i] = 0.0
                if has_tracer:
                    r1[f, i] = 0.0
        for k in range(nfq):
            z0 = 0.0
            qx_0 = 0.0
            qy_0 = 0.0
            c0 = 0.0
            for i in range(nn):
                v = Etab[i0, k, i]
                z0 += v * zeta[e0, i]
                qx_0 += v * qx[e0, i]
                qy_0 += v * qy[e0, i]
                if has_tracer:
                    c0 += v * conc[e0, i]
            if boundary:
                if btype == BC_WALL:
                    z1 = z0
                    un0 = qx_0 * nx_ + qy_0 * ny_
                    qx_1 = qx_0 - 2.0 * un0 * nx_
                    qy_1 = qy_0 - 2.0 * un0 * ny_
                    c1 = c0
                elif btype == BC_SUPER_OUTFLOW:
                    z1 = z0
                    qx_1 = qx_0
                    qy_1 = qy_0
                    c1 = c0
                elif btype == BC_SUPER_INFLOW or btype == BC_NONREFLECTING:
                    z1 = bc_zeta[f, k]
                    qx_1 = bc_qx[f, k]
                    qy_1 = bc_qy[f, k]
                    c1 = c0
                elif btype == BC_SUB_INFLOW:
                    z1 = z0
                    qx_1 = bc_qx[f, k]
                    qy_1 = bc_qy[f, k]
                    c1 = c0
                else:  # BC_SUB_OUTFLOW
                    z1 = bc_zeta[f, k]
                    qx_1 = qx_0
                    qy_1 = qy_0
                    c1 = c0
                if has_tracer and bc_has_c[f]:
                    # upwind: prescribed tracer only where flow enters
                    if 0.5 * ((qx_0 + qx_1) * nx_ + (qy_0 + qy_1) * ny_) < 0.0:
                        c1 = bc_c[f, k]
            else:
                z1 = 0.0
                qx_1 = 0.0
                qy_1 = 0.0
                c1 = 0.0
                for i in range(nn):
                    v = Etab[i1, k, i]
                    z1 += v * zeta[e1, i]
                    qx_1 += v * qx[e1, i]
                    qy_1 += v * qy[e1, i]
                    if has_tracer:
                        c1 += v * conc[e1, i]
            zb_ = f_zb[f, k]
            h0 = z0 + zb_
            h1 = z1 + zb_
            if h0 < hmn:
                hmn = h0
            if h1 < hmn:
                hmn = h1
            if h0 <= 0.0 or h1 <= 0.0:
                continue
            un0 = (qx_0 * nx_ + qy_0 * ny_) / h0
            un1 = (qx_1 * nx_ + qy_1 * ny_) / h1
            lam0 = abs(un0) + np.sqrt(g * h0)
            lam1 = abs(un1) + np.sqrt(g * h1)
            lam = lam0 if lam0 > lam1 else lam1
            if lam > lmax:
                lmax = lam
            w = f_jw[f, k]
            dz = z0 - z1
            havg = 0.5 * (h0 + h1)
            # continuity: {q}.n + lam/2 (zeta0 - zeta1)  (upwind from side 0)
            flux_c = 0.5 * (qx_0 * nx_ + qy_0 * ny_ + qx_1 * nx_ + qy_1 * ny_) \
                + 0.5 * lam * dz
            # advection: ({q u.n}) + lam/2 (q0 - q1)
            adv_x = 0.5 * (qx_0 * un0 + qx_1 * un1) + 0.5 * lam * (qx_0 - qx_1)
            adv_y = 0.5 * (qy_0 * un0 + qy_1 * un1) + 0.5 * lam * (qy_0 - qy_1)
            # pressure face terms
            tw0 = 1.0 if boundary else 0.5   # {phi} weight on side 0
            p0 = g * havg * tw0 * dz
            p1 = g * havg * 0.5 * dz
            if pressure_form == PRESSURE_ORLANDO:
                dh = h0 - h1
                p0 -= 0.25 * g * dh * dz
                p1 += 0.25 * g * dh * dz
            if has_tracer:
                flux_t = 0.5 * ((qx_0 * c0 + qx_1 * c1) * nx_
                                + (qy_0 * c0 + qy_1 * c1) * ny_) \
                    + 0.5 * lam * (z0 * c0 - z1 * c1)
            else:
                flux_t = 0.0
            for i in range(nn):
                v0 = Etab[i0, k, i]
                fc0[f, i] -= w * flux_c * v0
                gx0[f, i] += w * (-adv_x * v0 + p0 * v0 * nx_)
                gy0[f, i] += w * (-adv_y * v0 + p0 * v0 * ny_)
                if has_tracer:
                    r0[f, i] -= w * flux_t * v0
            if not boundary:
                for i in range(nn):
                    v1 = Etab[i1, k, i]
                    fc1[f, i] += w * flux_c * v1
                    gx1[f, i] += w * (adv_x * v1 + p1 * v1 * nx_)
                    gy1[f, i] += w * (adv_y * v1 + p1 * v1 * ny_)
                    if has_tracer:
                        r1[f, i] += w * flux_t * v1
        lam_face[f] = lmax
        hmin_face[f] = hmn


@njit(**_OPTS)
def scatter_faces(res, c0, c1, sc_ptr, sc_face, sc_slot):
    ne = res.shape[0]
    nn = res.shape[1]
    for e in prange(ne):
        for p in range(sc_ptr[e], sc_ptr[e + 1]):
            f = sc_face[p]
            if sc_slot[p] == 0:
                for i in range(nn):
                    res[e, i] += c0[f, i]
            else:
                for i in range(nn):
                    res[e, i] += c1[f, i]
