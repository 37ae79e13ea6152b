# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled rate kernel: scalar loop over vacuum-yield candidates.

Operates on the flat context produced by RateContext.pack(); semantics are
kept identical to the numpy backend in pykernel.py.
"""
from libc.math cimport INFINITY, log, log2, sqrt

cdef double E1_FLOOR = 1e-12
cdef double LN2 = 0.6931471805599453


cdef inline double _entropy(double x) nogil:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -(x * log2(x) + (1.0 - x) * log2(1.0 - x))


cdef inline double _mean_s1_lower(const double* pairs, Py_ssize_t n_pairs, double s0) nogil:
    cdef double m = 0.0
    cdef double v
    cdef Py_ssize_t i
    for i in range(n_pairs):
        v = (pairs[3 * i] - pairs[3 * i + 1] * s0) / pairs[3 * i + 2]
        if v > m:
            m = v
    if m > 1.0:
        m = 1.0
    return m


cdef inline double _s1_source_lower(double m, double n1, double lam) nogil:
    cdef double delta
    if m <= 0.0:
        return 0.0
    delta = lam / sqrt(n1 * m)
    if delta >= 1.0:
        return 0.0
    return m * (1.0 - delta)


cdef inline double _theta(double e1, double n_x, double n_z, double log_eps) nogil:
    cdef double e1c = e1
    cdef double total, d_theta, sqrt_arg, n_theta, theta
    if e1c < E1_FLOOR:
        e1c = E1_FLOOR
    elif e1c > 1.0 - E1_FLOOR:
        e1c = 1.0 - E1_FLOOR
    total = n_x + n_z
    d_theta = (n_x * n_z / (total * total)) * LN2 / (2.0 * (1.0 - e1c) * e1c)
    sqrt_arg = e1c * (1.0 - e1c) * (n_x * n_z / total)
    n_theta = -(log_eps + 0.5 * log(sqrt_arg)) / total
    if n_theta <= 0.0:
        return 0.0
    theta = sqrt(n_theta / d_theta)
    return theta if theta < 0.5 else 0.5


cdef inline double _phase_error(
    const double* test, double s0, double m, const double* th,
    double lam, double log_eps, bint theta_on,
) nogil:
    cdef double a0 = test[0]
    cdef double a1 = test[1]
    cdef double n0 = test[2]
    cdef double n1 = test[3]
    cdef double t_eff = test[4]
    cdef double s1l, delta0, subtracted, e1, factor
    s1l = _s1_source_lower(m, n1, lam)
    if s1l <= 0.0:
        return 0.5
    if s0 > 0.0:
        delta0 = lam / sqrt(n0 * s0)
    else:
        delta0 = 0.0
    factor = 1.0 - delta0
    if factor < 0.0:
        factor = 0.0
    subtracted = a0 * s0 * factor / 2.0
    e1 = t_eff - subtracted
    if e1 < 0.0:
        e1 = 0.0
    e1 = e1 / (a1 * s1l)
    if e1 > 0.5:
        e1 = 0.5
    if theta_on:
        e1 = e1 + _theta(e1, th[0], th[1], log_eps)
        if e1 > 0.5:
            e1 = 0.5
    return e1


def rate_grid(const double[::1] packed, const double[::1] s0_z,
              const double[::1] s0_x, double[::1] out):
    cdef double lam = packed[0]
    cdef double log_eps = packed[1]
    cdef bint theta_on = packed[2] != 0.0
    cdef bint rx2_literal = packed[3] != 0.0
    cdef bint need_pz = packed[4] != 0.0
    cdef bint need_px = packed[5] != 0.0
    cdef Py_ssize_t n_pairs_z = <Py_ssize_t> packed[6]
    cdef Py_ssize_t n_pairs_x = <Py_ssize_t> packed[7]
    cdef Py_ssize_t n_terms = <Py_ssize_t> packed[8]
    cdef const double* test_x = &packed[9]
    cdef const double* test_z = &packed[14]
    cdef const double* theta_z = &packed[19]
    cdef const double* theta_x = &packed[21]
    cdef const double* pairs_z = &packed[23]
    cdef const double* pairs_x = &packed[23 + 3 * n_pairs_z]
    cdef const double* terms = &packed[23 + 3 * (n_pairs_z + n_pairs_x)]

    cdef Py_ssize_t n = s0_z.shape[0]
    cdef Py_ssize_t i, t
    cdef double sz, sx, m_z, m_x, e1p_z, e1p_x, rate, m, s1l, e1p, term
    cdef double weight, a1, n1, ec
    cdef bint is_z

    with nogil:
        for i in range(n):
            sz = s0_z[i]
            sx = s0_x[i]
            m_z = _mean_s1_lower(pairs_z, n_pairs_z, sz)
            m_x = _mean_s1_lower(pairs_x, n_pairs_x, sx)
            e1p_z = 0.5
            e1p_x = 0.5
            if need_pz:
                e1p_z = _phase_error(test_x, sx, m_x, theta_z, lam, log_eps, theta_on)
            if need_px:
                e1p_x = _phase_error(test_z, sz, m_z, theta_x, lam, log_eps, theta_on)
            rate = 0.0
            for t in range(n_terms):
                is_z = terms[5 * t] != 0.0
                weight = terms[5 * t + 1]
                a1 = terms[5 * t + 2]
                n1 = terms[5 * t + 3]
                ec = terms[5 * t + 4]
                m = m_z if is_z else m_x
                s1l = _s1_source_lower(m, n1, lam)
                e1p = e1p_z if (is_z or rx2_literal) else e1p_x
                term = weight * (a1 * s1l * (1.0 - _entropy(e1p)) - ec)
                if term > 0.0:
                    rate += term
            out[i] = rate
