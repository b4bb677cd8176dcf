"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

The PSOR fallback relaxes one color class at a time with a vectorized
update.  Nodes of one color are not coupled, so this performs the same
arithmetic as the compiled node-by-node loop up to summation order.
"""
import numpy as np
import scipy.sparse as sp


def theta1_green0(zr, zi, tr, ti, nterms):
    """log|theta_1(z; tau)| - pi (Im z)^2 / Im tau, pointwise."""
    zr = np.asarray(zr, float)
    zi = np.asarray(zi, float)
    tau = complex(tr, ti)
    k = np.arange(nterms)
    coef = np.where(k % 2, -1.0, 1.0) * np.exp(1j * np.pi * tau * k * (k + 1.0))
    z = np.pi * (zr + 1j * zi)
    s = np.sin(z)
    c = np.cos(z)
    acc = np.full(z.shape, coef[0], dtype=complex)
    u_prev = np.ones_like(z)
    u_cur = 2.0 * c
    for j in range(1, nterms):
        u_prev, u_cur = u_cur, 2.0 * c * u_cur - u_prev
        acc += coef[j] * u_cur
        u_prev, u_cur = u_cur, 2.0 * c * u_cur - u_prev
    base = np.log(2.0) - np.pi * ti / 4.0
    return base + np.log(np.abs(s)) + np.log(np.abs(acc)) - np.pi * zi * zi / ti


def psor_sweeps(indptr, indices, data, diag, rhs, upper, order, u, relax, tol, max_sweeps,
                color_ptr=None):
    """Colored projected SOR; same contract as the compiled kernel.

    ``color_ptr`` delimits the color classes inside ``order``.  Without it the
    whole ordering is treated as one class (Jacobi-like, only safe when the
    caller guarantees independence).
    """
    n = u.size
    off = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    if color_ptr is None:
        color_ptr = np.array([0, len(order)])
    blocks = []
    for a, b in zip(color_ptr[:-1], color_ptr[1:]):
        idx = np.asarray(order[a:b])
        blocks.append((idx, off[idx], -diag[idx], rhs[idx], upper[idx]))
    sweep = 0
    dmax = 0.0
    while sweep < max_sweeps:
        dmax = 0.0
        for idx, rows, mdiag, r, up in blocks:
            old = u[idx]
            new = (1.0 - relax) * old + relax * ((rows @ u + r) / mdiag)
            np.minimum(new, up, out=new)
            d = np.max(np.abs(new - old)) if idx.size else 0.0
            dmax = max(dmax, d)
            u[idx] = new
        sweep += 1
        if dmax < tol:
            break
    return sweep, dmax


def torus_pair_sums(xr, xi, tr, ti, nterms, gterms):
    """Pair sum of the theta Green part and per-point gradients; see the compiled kernel."""
    xr = np.asarray(xr, float)
    xi = np.asarray(xi, float)
    m = xr.size
    j, k = np.triu_indices(m, 1)
    dr = xr[j] - xr[k]
    di = xi[j] - xi[k]
    t = np.floor(di / ti + 0.5)
    dr = dr - t * tr
    di = di - t * ti
    dr = dr - np.floor(dr + 0.5)
    total = float(np.sum(theta1_green0(dr, di, tr, ti, nterms)))
    tau = complex(tr, ti)
    z = np.pi * (dr + 1j * di)
    dl = np.pi / np.tan(z)
    E = np.exp(2j * z)
    Ei = 1.0 / E
    En, Emn = E, Ei
    for n in range(1, gterms + 1):
        qn = np.exp(2j * np.pi * tau * n)
        dl = dl + (2j * np.pi * qn / (qn - 1.0)) * (En - Emn)
        En = En * E
        Emn = Emn * Ei
    g_r = dl.real
    g_i = -dl.imag - 2.0 * np.pi * di / ti
    gr = np.bincount(j, g_r, m) - np.bincount(k, g_r, m)
    gi = np.bincount(j, g_i, m) - np.bincount(k, g_i, m)
    return total, gr, gi
