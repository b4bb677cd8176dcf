# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: theta-series Green evaluation, torus pair sums and projected SOR."""
import numpy as np

from libc.math cimport log, exp, fabs, floor, sin, cos, M_PI

cdef extern from "<complex.h>" nogil:
    double complex csin(double complex)
    double complex ccos(double complex)
    double cabs(double complex)


def theta1_green0(double[::1] zr, double[::1] zi, double tr, double ti, int nterms):
    """log|theta_1(z; tau)| - pi (Im z)^2 / Im tau, pointwise.

    Uses theta_1(z) = 2 q^{1/4} sin(pi z) sum_n (-1)^n q^{n(n+1)} U_{2n}(cos pi z)
    with Chebyshev polynomials U of the second kind.
    """
    cdef Py_ssize_t n = zr.shape[0], k, j
    cdef double complex tau = tr + 1j * ti
    cdef double complex z, s, c, u_prev, u_cur, u_next, acc
    cdef double complex[::1] coef = np.empty(nterms, dtype=np.complex128)
    cdef double[::1] out = np.empty(n, dtype=np.float64)
    cdef double complex ipt = 1j * M_PI * tau
    cdef double base = log(2.0) - M_PI * ti / 4.0
    cdef double complex e
    for k in range(nterms):
        e = ipt * (k * (k + 1.0))
        coef[k] = (-1.0 if k % 2 else 1.0) * exp(e.real) * (cos(e.imag) + 1j * sin(e.imag))
    with nogil:
        for j in range(n):
            z = M_PI * (zr[j] + 1j * zi[j])
            s = csin(z)
            c = ccos(z)
            acc = coef[0]
            u_prev = 1.0
            u_cur = 2.0 * c
            for k in range(1, nterms):
                u_next = 2.0 * c * u_cur - u_prev
                u_prev = u_cur
                u_cur = u_next
                acc = acc + coef[k] * u_cur
                u_next = 2.0 * c * u_cur - u_prev
                u_prev = u_cur
                u_cur = u_next
            out[j] = base + log(cabs(s)) + log(cabs(acc)) - M_PI * zi[j] * zi[j] / ti
    return np.asarray(out)


def psor_sweeps(const int[::1] indptr, const int[::1] indices, const double[::1] data,
                const double[::1] diag, const double[::1] rhs, const double[::1] upper,
                const int[::1] order, double[::1] u, double relax, double tol,
                long max_sweeps):
    """Projected SOR for  L u + rhs >= 0,  u <= upper,  complementarity.

    ``L`` is given by its off-diagonal CSR part and its (negative) diagonal.
    Nodes are relaxed in ``order`` (colors concatenated).  Returns the number
    of sweeps and the sup-norm of the last sweep's update.
    """
    cdef Py_ssize_t n = order.shape[0], t, i, p
    cdef long sweep = 0
    cdef double acc, new, delta, dmax = 0.0
    with nogil:
        while sweep < max_sweeps:
            dmax = 0.0
            for t in range(n):
                i = order[t]
                acc = rhs[i]
                for p in range(indptr[i], indptr[i + 1]):
                    acc = acc + data[p] * u[indices[p]]
                new = (1.0 - relax) * u[i] + relax * (acc / (-diag[i]))
                if new > upper[i]:
                    new = upper[i]
                delta = fabs(new - u[i])
                if delta > dmax:
                    dmax = delta
                u[i] = new
            sweep += 1
            if dmax < tol:
                break
    return sweep, dmax


def torus_pair_sums(double[::1] xr, double[::1] xi, double tr, double ti, int nterms,
                    int gterms):
    """Pair sum of log|theta_1(x_j - x_k)| - pi Im(x_j - x_k)^2 / Im tau over j < k.

    Also returns, for every point, the gradient of its row sum (real and
    imaginary parts), using theta_1'/theta_1(z) = pi cot(pi z) +
    4 pi sum_n q^{2n} / (1 - q^{2n}) sin(2 pi n z).
    """
    cdef Py_ssize_t m = xr.shape[0], j, k, t
    cdef double complex tau = tr + 1j * ti
    cdef double complex[::1] coef = np.empty(nterms, dtype=np.complex128)
    cdef double complex[::1] gcoef = np.empty(gterms + 1, dtype=np.complex128)
    cdef double[::1] gr = np.zeros(m, dtype=np.float64)
    cdef double[::1] gi = np.zeros(m, dtype=np.float64)
    cdef double complex ipt = 1j * M_PI * tau
    cdef double base = log(2.0) - M_PI * ti / 4.0
    cdef double complex e, ez, ezi, s, c, u_prev, u_cur, u_next, acc, E, Ei, En, Emn, dl, qn
    cdef double dr, di, total = 0.0, g_r, g_i
    for t in range(nterms):
        e = ipt * (t * (t + 1.0))
        coef[t] = (-1.0 if t % 2 else 1.0) * exp(e.real) * (cos(e.imag) + 1j * sin(e.imag))
    for t in range(1, gterms + 1):
        e = 2.0 * ipt * t
        qn = exp(e.real) * (cos(e.imag) + 1j * sin(e.imag))
        gcoef[t] = 2j * M_PI * qn / (qn - 1.0)
    with nogil:
        for j in range(m):
            for k in range(j + 1, m):
                dr = xr[j] - xr[k]
                di = xi[j] - xi[k]
                t = <Py_ssize_t>floor(di / ti + 0.5)
                dr = dr - t * tr
                di = di - t * ti
                dr = dr - floor(dr + 0.5)
                # exp(i pi (dr + i di)) gives sin, cos and the Fourier powers at once
                ez = exp(-M_PI * di) * (cos(M_PI * dr) + 1j * sin(M_PI * dr))
                ezi = 1.0 / ez
                s = (ez - ezi) * -0.5j
                c = (ez + ezi) * 0.5
                acc = coef[0]
                u_prev = 1.0
                u_cur = 2.0 * c
                for t in range(1, nterms):
                    u_next = 2.0 * c * u_cur - u_prev
                    u_prev = u_cur
                    u_cur = u_next
                    acc = acc + coef[t] * u_cur
                    u_next = 2.0 * c * u_cur - u_prev
                    u_prev = u_cur
                    u_cur = u_next
                total = total + base + log(cabs(s)) + log(cabs(acc)) - M_PI * di * di / ti
                dl = M_PI * c / s
                E = ez * ez
                Ei = ezi * ezi
                En = E
                Emn = Ei
                for t in range(1, gterms + 1):
                    dl = dl + gcoef[t] * (En - Emn)
                    En = En * E
                    Emn = Emn * Ei
                g_r = dl.real
                g_i = -dl.imag - 2.0 * M_PI * di / ti
                gr[j] += g_r
                gi[j] += g_i
                gr[k] -= g_r
                gi[k] -= g_i
    return total, np.asarray(gr), np.asarray(gi)
