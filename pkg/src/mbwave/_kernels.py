"""Numba kernels for the tridiagonal three-level scheme and its literal transpose.

Per level n the scheme reads, on interior nodes,
    -Mp^n w^{n+1} + B^n w^n - Mm^n w^{n-1} = dt^2 F^n,
with Mp = I - a dt d_y - (Xt dt / 2), Mm = I + a dt d_y + (Xt dt / 2), B = 2 + dt^2 K,
K = k2 D_yy + k1 d_y + V. Bands are stored as (lower, diag, upper) on all nodes.
Coefficient arrays have shape (nt+1, nx+1) or (1, 1) for constants. The marches act on
a batch of independent right-hand sides sharing one factorization per level.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _at(A, n, j):
    return A[min(n, A.shape[0] - 1), min(j, A.shape[1] - 1)]


@njit(cache=True, nogil=True)
def bands(n, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V,
          p_lo, p_di, p_up, m_lo, m_di, m_up, b_lo, b_di, b_up):
    iL = 1.0 / L[n]
    ay = Lp[n] * iL
    q = dt * dt
    idy2 = 1.0 / (dy * dy)
    h = 0.5 / dy
    sc = dt * h
    cx = Xt.shape[1] == 1 and Xt.shape[0] == 1
    for j in range(y.shape[0]):
        c = l1p[n] + y[j] * Lp[n]
        a = c * iL
        at = (l1pp[n] + y[j] * Lpp[n]) * iL - a * ay
        xt = Xt[0, 0] if cx else _at(Xt, n, j)
        k2 = (1.0 - c * c) * iL * iL
        k1 = at - a * ay - xt * a + _at(Xx, n, j) * iL
        s = a * sc
        p_lo[j] = s
        p_di[j] = 1.0 - 0.5 * xt * dt
        p_up[j] = -s
        m_lo[j] = -s
        m_di[j] = 1.0 + 0.5 * xt * dt
        m_up[j] = s
        e2 = q * k2 * idy2
        e1 = q * k1 * h
        b_lo[j] = e2 - e1
        b_di[j] = 2.0 + q * _at(V, n, j) - 2.0 * e2
        b_up[j] = e2 + e1


@njit(cache=True, nogil=True)
def factor(lo, di, up, cp, inv):
    """Thomas factorization of the interior block (rows 1..nx-1 of the full bands)."""
    m = cp.shape[0]
    inv[0] = 1.0 / di[1]
    cp[0] = up[1] * inv[0]
    for i in range(1, m):
        inv[i] = 1.0 / (di[i + 1] - lo[i + 1] * cp[i - 1])
        cp[i] = up[i + 1] * inv[i]


@njit(cache=True, nogil=True)
def solve_factored(lo, cp, inv, rhs, out):
    m = cp.shape[0]
    out[0] = rhs[0] * inv[0]
    for i in range(1, m):
        out[i] = (rhs[i] - lo[i + 1] * out[i - 1]) * inv[i]
    for i in range(m - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True, nogil=True)
def factor_transposed(lo, di, up, tl, cp, inv):
    """Thomas factorization of the transposed interior block; tl receives its lower band."""
    m = cp.shape[0]
    for i in range(m):
        tl[i] = up[i] if i > 0 else 0.0
    inv[0] = 1.0 / di[1]
    cp[0] = lo[2] * inv[0]
    for i in range(1, m):
        inv[i] = 1.0 / (di[i + 1] - tl[i] * cp[i - 1])
        cp[i] = (lo[i + 2] if i < m - 1 else 0.0) * inv[i]


@njit(cache=True, nogil=True)
def solve_factored_t(tl, cp, inv, rhs, out):
    m = cp.shape[0]
    out[0] = rhs[0] * inv[0]
    for i in range(1, m):
        out[i] = (rhs[i] - tl[i] * out[i - 1]) * inv[i]
    for i in range(m - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True, nogil=True)
def march(w_a, w_b, n_first, n_last, direction, y, dy, dt, l1p, l1pp, L, Lp, Lpp,
          Xt, Xx, V, F, g1, g2, store):
    """Three-level march of a batch.

    direction = +1: w_a = w^{n_first-1}, w_b = w^{n_first}; computes levels up to n_last + 1.
    direction = -1: w_a = w^{n_first+1}, w_b = w^{n_first}; computes levels down to n_last - 1.
    w_a, w_b have shape (nb, nx+1); boundary values of each new level are g1[b, k], g2[b, k].
    store has shape (nb, nt+1, nx+1) or (0, 0, 0) to skip. F is shared by the batch.
    Returns the last two levels (older, newer in march order).
    """
    nb = w_a.shape[0]
    nx1 = y.shape[0]
    m = nx1 - 2
    p_lo = np.empty(nx1); p_di = np.empty(nx1); p_up = np.empty(nx1)
    m_lo = np.empty(nx1); m_di = np.empty(nx1); m_up = np.empty(nx1)
    b_lo = np.empty(nx1); b_di = np.empty(nx1); b_up = np.empty(nx1)
    cp = np.empty(m); inv = np.empty(m)
    prev = w_a.copy()
    cur = w_b.copy()
    nxt = np.empty((nb, nx1))
    rhs = np.empty(m)
    sol = np.empty(m)
    q = dt * dt
    n = n_first
    while (direction > 0 and n <= n_last) or (direction < 0 and n >= n_last):
        bands(n, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V,
              p_lo, p_di, p_up, m_lo, m_di, m_up, b_lo, b_di, b_up)
        k = n + direction
        if direction > 0:
            s_lo, s_di, s_up = p_lo, p_di, p_up
            o_lo, o_di, o_up = m_lo, m_di, m_up
        else:
            s_lo, s_di, s_up = m_lo, m_di, m_up
            o_lo, o_di, o_up = p_lo, p_di, p_up
        factor(s_lo, s_di, s_up, cp, inv)
        for b in range(nb):
            c = cur[b]
            pv = prev[b]
            for j in range(1, nx1 - 1):
                rhs[j - 1] = (b_lo[j] * c[j - 1] + b_di[j] * c[j] + b_up[j] * c[j + 1]
                              - o_lo[j] * pv[j - 1] - o_di[j] * pv[j] - o_up[j] * pv[j + 1]
                              - q * _at(F, n, j))
            rhs[0] -= s_lo[1] * g1[b, k]
            rhs[m - 1] -= s_up[nx1 - 2] * g2[b, k]
            solve_factored(s_lo, cp, inv, rhs, sol)
            nw = nxt[b]
            nw[0] = g1[b, k]
            nw[nx1 - 1] = g2[b, k]
            for i in range(m):
                nw[i + 1] = sol[i]
            if store.shape[0] > 0:
                store[b, k, :] = nw
        prev, cur, nxt = cur, nxt, prev
        n += direction
    return prev, cur


@njit(cache=True, nogil=True)
def _tmul(lo, di, up, z, out):
    """out = (interior block of the banded matrix)^T z, z on interior rows."""
    m = z.shape[0]
    for i in range(m):
        j = i + 1
        s = di[j] * z[i]
        if i > 0:
            s += up[j - 1] * z[i - 1]
        if i < m - 1:
            s += lo[j + 1] * z[i + 1]
        out[i] = s


@njit(cache=True, nogil=True)
def _fill(lev, q, n, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V, tl, cp, inv):
    bands(n, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V,
          lev[q, 0, 0], lev[q, 0, 1], lev[q, 0, 2], lev[q, 1, 0], lev[q, 1, 1], lev[q, 1, 2],
          lev[q, 2, 0], lev[q, 2, 1], lev[q, 2, 2])
    factor_transposed(lev[q, 1, 0], lev[q, 1, 1], lev[q, 1, 2], tl[q], cp[q], inv[q])


@njit(cache=True, nogil=True)
def transpose_march(mu0, mu1, nt_last, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V,
                    store, sens1, sens2):
    """Transpose of the backward control-to-levels map, marched forward in time, for a batch.

    Solves for z^1 .. z^{nt_last} (interior vectors) from
        Mm^1' z^1 = mu0,
        Mm^2' z^2 = B^1' z^1 + mu1,
        Mm^{k+1}' z^{k+1} = B^k' z^k - Mp^{k-1}' z^{k-1},
    and accumulates boundary sensitivities
        sens[k] = -(Mm^{k+1}_{IB}' z^{k+1} - B^k_{IB}' z^k + Mp^{k-1}_{IB}' z^{k-1})
    for k = 0 .. nt_last - 1 (terms with z^0 or z^{nt_last+1} are zero).
    mu0, mu1 have shape (nb, nx-1); sens1, sens2 (nb, nt+1); store (nb, nt+1, nx+1) or empty.
    """
    nb = mu0.shape[0]
    nx1 = y.shape[0]
    m = nx1 - 2
    lev = np.empty((3, 3, 3, nx1))  # bands at levels k-1, k, k+1 (ring)
    tl = np.empty((3, m)); cp = np.empty((3, m)); inv = np.empty((3, m))
    Z = np.zeros((3, nb, m))  # z^{k-1}, z^k, z^{k+1} (ring)
    tmp = np.empty(m)
    tmp2 = np.empty(m)
    rhs = np.empty(m)
    for q in range(3):
        _fill(lev, q, q if q <= nt_last else nt_last, y, dy, dt, l1p, l1pp, L, Lp, Lpp,
              Xt, Xx, V, tl, cp, inv)
    i0, i1, i2 = 0, 1, 2  # ring slots of levels k-1, k, k+1
    for b in range(nb):
        solve_factored_t(tl[1], cp[1], inv[1], mu0[b], Z[1, b])
        if store.shape[0] > 0:
            store[b, 1, 1:nx1 - 1] = Z[1, b]
        sens1[b, 0] = -lev[1, 1, 0][1] * Z[1, b, 0]
        sens2[b, 0] = -lev[1, 1, 2][nx1 - 2] * Z[1, b, m - 1]
    for k in range(1, nt_last):
        if k >= 2:
            i0, i1, i2 = i1, i2, i0
            lk = k + 1 if k + 1 <= nt_last else nt_last
            _fill(lev, i2, lk, y, dy, dt, l1p, l1pp, L, Lp, Lpp, Xt, Xx, V, tl, cp, inv)
        for b in range(nb):
            zc = Z[i1, b]
            zp = Z[i0, b]
            zn = Z[i2, b]
            _tmul(lev[i1, 2, 0], lev[i1, 2, 1], lev[i1, 2, 2], zc, tmp)
            if k == 1:
                for i in range(m):
                    rhs[i] = tmp[i] + mu1[b, i]
            else:
                _tmul(lev[i0, 0, 0], lev[i0, 0, 1], lev[i0, 0, 2], zp, tmp2)
                for i in range(m):
                    rhs[i] = tmp[i] - tmp2[i]
            solve_factored_t(tl[i2], cp[i2], inv[i2], rhs, zn)
            if store.shape[0] > 0:
                store[b, k + 1, 1:nx1 - 1] = zn
            s1 = lev[i2, 1, 0][1] * zn[0] - lev[i1, 2, 0][1] * zc[0]
            s2 = lev[i2, 1, 2][nx1 - 2] * zn[m - 1] - lev[i1, 2, 2][nx1 - 2] * zc[m - 1]
            if k >= 2:
                s1 += lev[i0, 0, 0][1] * zp[0]
                s2 += lev[i0, 0, 2][nx1 - 2] * zp[m - 1]
            sens1[b, k] = -s1
            sens2[b, k] = -s2
    return Z[i1].copy(), Z[i2].copy()
