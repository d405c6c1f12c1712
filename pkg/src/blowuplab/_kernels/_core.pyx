# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled indicator-moment reduction kernel.

Mirrors `_pure.row_reductions`: per prefix row, integrate the last outer
angle over one quarter period with case-based substitutions (plain / sinh
layer / sin root-inside / cosh root-outside) that keep the reduced
integrand analytic, resolving the innermost angle of the indicator in
closed form via the sin-power recurrence.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport (acosh, asin, asinh, atan, cos, cosh, fabs, sin,
                        sinh, sqrt)

cnp.import_array()

cdef double SNAP_EPS = 1e-11
cdef double HALF_T = 0.7071067811865476


cdef inline void _node(double t, double wt, double q, bint left_piece,
                       int ndim, double* acc) noexcept nogil:
    cdef double t2, one_m, w_theta, s2, c2, u, st, ct, j_even, j_odd
    cdef double j_lo, j_hi, st_pow, base, ss
    cdef int m, m0, jac_pow, i
    if q <= 0.0:
        return
    t2 = t * t
    one_m = 1.0 - t2
    w_theta = wt / sqrt(one_m)
    if left_piece:
        s2 = t2
        c2 = one_m
    else:
        s2 = one_m
        c2 = t2

    u = sqrt(q)
    st = 1.0 / sqrt(1.0 + q)
    ct = u * st
    # chain J_m = 2 ct st^(m-1)/m + (m-1)/m J_{m-2} along the parity of ndim
    m0 = ndim % 2
    if m0 == 0:
        j_lo = 2.0 * atan(u)  # J_0
    else:
        j_lo = 2.0 * ct       # J_1
    st_pow = st if m0 == 0 else st * st
    # st_pow holds st^(m-1) for the next m = m0 + 2
    j_hi = j_lo
    m = m0 + 2
    while m <= ndim:
        j_lo = j_hi
        j_hi = (2.0 * ct * st_pow) / m + ((m - 1.0) / m) * j_hi
        st_pow = st_pow * st * st
        m += 2
    # after the loop: j_hi = J_ndim, j_lo = J_{ndim-2}

    jac_pow = ndim - 3
    base = w_theta
    if jac_pow > 0:
        ss = sqrt(s2)
        for i in range(jac_pow):
            base *= ss
    acc[0] += base * j_lo
    acc[1] += base * s2 * j_hi
    acc[2] += base * c2 * j_hi


cdef void _piece(double alpha, double beta, double* gx, double* glw, int g,
                 bint left_piece, int ndim, double* acc) noexcept nogil:
    cdef double q_end, t_r, w_max, ell, v_max, t, wt, q, w_ang, v, ch, sh, cw
    cdef int i
    if fabs(alpha) < SNAP_EPS:
        alpha = 0.0
    q_end = alpha + 0.5 * beta
    if alpha <= 0.0 and q_end <= 0.0:
        return

    if alpha > 0.0 and beta < 0.0:
        # live inside the root: t = t_r sin(w), q = alpha cos(w)^2
        t_r = sqrt(alpha / -beta)
        w_max = HALF_T / t_r
        w_max = asin(w_max if w_max < 1.0 else 1.0)
        for i in range(g):
            w_ang = w_max * gx[i]
            cw = cos(w_ang)
            t = t_r * sin(w_ang)
            wt = 0.5 * w_max * glw[i] * t_r * cw
            q = alpha * cw * cw
            _node(t, wt, q, left_piece, ndim, acc)
    elif alpha > 0.0 and beta > 0.0 and 4.0 * alpha < q_end:
        # boundary layer at t = 0: t = ell sinh(v), q = alpha cosh(v)^2
        ell = sqrt(alpha / beta)
        v_max = asinh(HALF_T / ell)
        for i in range(g):
            v = v_max * gx[i]
            ch = cosh(v)
            t = ell * sinh(v)
            wt = 0.5 * v_max * glw[i] * ell * ch
            q = alpha * ch * ch
            _node(t, wt, q, left_piece, ndim, acc)
    elif alpha < 0.0:
        # live beyond the root: t = t_r cosh(v), q = -alpha sinh(v)^2
        t_r = sqrt(-alpha / beta)
        if t_r < 1e-300:
            for i in range(g):
                t = HALF_T * gx[i]
                wt = HALF_T * 0.5 * glw[i]
                q = alpha + beta * t * t
                _node(t, wt, q, left_piece, ndim, acc)
            return
        v_max = HALF_T / t_r
        v_max = acosh(v_max if v_max > 1.0 else 1.0)
        for i in range(g):
            v = v_max * gx[i]
            sh = sinh(v)
            t = t_r * cosh(v)
            wt = 0.5 * v_max * glw[i] * t_r * sh
            q = (-alpha) * sh * sh
            _node(t, wt, q, left_piece, ndim, acc)
    else:
        for i in range(g):
            t = HALF_T * gx[i]
            wt = HALF_T * 0.5 * glw[i]
            q = alpha + beta * t * t
            _node(t, wt, q, left_piece, ndim, acc)


def row_reductions(zsq, coeffs, int ndim, double theta_max, glx, glw):
    """Per-prefix-row (chi, sin-moment, cos-moment) reductions; see _pure."""
    zsq = np.ascontiguousarray(zsq, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a_sin = zsq @ coeffs[:-1]
    cdef double b_cos = coeffs[-1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gx_arr = np.ascontiguousarray(
        0.5 * (np.asarray(glx, dtype=np.float64) + 1.0)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gw_arr = np.ascontiguousarray(
        np.asarray(glw, dtype=np.float64)
    )
    cdef Py_ssize_t m_rows = a_sin.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((m_rows, 3))
    cdef double factor = 4.0 if theta_max > 4.0 else 2.0
    cdef int g = gx_arr.shape[0]
    cdef double* gx = &gx_arr[0]
    cdef double* gw = &gw_arr[0]
    cdef double acc[3]
    cdef Py_ssize_t i
    cdef double a_i
    with nogil:
        for i in range(m_rows):
            acc[0] = 0.0
            acc[1] = 0.0
            acc[2] = 0.0
            a_i = a_sin[i]
            _piece(b_cos, a_i - b_cos, gx, gw, g, True, ndim, acc)
            _piece(a_i, b_cos - a_i, gx, gw, g, False, ndim, acc)
            out[i, 0] = factor * acc[0]
            out[i, 1] = factor * acc[1]
            out[i, 2] = factor * acc[2]
    return out
