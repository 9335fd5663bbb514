"""NumPy reference implementations of the hot numerical kernels.

Mirrors the compiled module `_fastpath`; the two must agree to rounding.
Everything here is vectorized but allocates temporaries, which is what
the compiled twin avoids.
"""
import numpy as np
from scipy.linalg import solve_banded

NAME = "slow"


def cubic_eval(tab, x0, h, q, fill_left, fill_right):
    """4-point Lagrange interpolation on a uniform table.

    Queries below x0 return fill_left, above x0+(n-1)h return fill_right.
    The end cells reuse the nearest interior 4-point stencil.
    """
    tab = np.asarray(tab, dtype=float)
    q = np.asarray(q, dtype=float)
    n = tab.size
    t = (q - x0) / h
    inside_lo = t >= 0.0
    inside_hi = t <= n - 1.0
    j = np.clip(np.floor(t).astype(np.int64), 1, n - 3)
    u = t - j
    f0 = tab[j - 1]
    f1 = tab[j]
    f2 = tab[j + 1]
    f3 = tab[j + 2]
    w0 = -u * (u - 1.0) * (u - 2.0) / 6.0
    w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
    w2 = -(u + 1.0) * u * (u - 2.0) / 2.0
    w3 = (u + 1.0) * u * (u - 1.0) / 6.0
    out = w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
    out = np.where(inside_lo, out, fill_left)
    out = np.where(inside_hi, out, fill_right)
    return out


def sym_eval(tab, h, parity, q):
    """Evaluate a half-line table (x0 = 0) with even/odd reflection.

    parity 0: K(-u) = K(u); parity 1: K(-u) = -K(u). Zero beyond the table.
    """
    q = np.asarray(q, dtype=float)
    aq = np.abs(q)
    vals = cubic_eval(tab, 0.0, h, aq, 0.0, 0.0)
    if parity:
        vals = np.where(q < 0.0, -vals, vals)
    return vals


def skew_sum(tab, h, parity, a, b, z, w, scale, chunk=2048):
    """out[i] = sum_j w[j] * K((a[i] - b*z[j]) * scale).

    K is the symmetric table evaluation of sym_eval. Used for skewed
    kernel-source quadratures where FFT convolution does not apply.
    """
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.zeros(a.size, dtype=float)
    for j0 in range(0, z.size, chunk):
        zz = z[j0:j0 + chunk]
        ww = w[j0:j0 + chunk]
        arg = (a[:, None] - b * zz[None, :]) * scale
        out += sym_eval(tab, h, parity, arg) @ ww
    return out


def _penta_bands(n, c, diag0, diag_last, sub_first, sup_last):
    """Banded (I + dt*D4) for solve_banded; boundary rows pre-modified."""
    ab = np.zeros((5, n))
    ab[0, 2:] = c
    ab[1, 1:] = -4.0 * c
    ab[2, :] = 1.0 + 6.0 * c
    ab[3, :-1] = -4.0 * c
    ab[4, :-2] = c
    ab[2, 0] = diag0
    ab[2, -1] = diag_last
    ab[3, 0] = sub_first
    ab[1, -1] = sup_last
    return ab


def _explicit_u(u, h, A, B):
    """dx(alpha(w) w_xx + F(w)) for the height equation, 2nd order.

    Ghost cells extend u linearly with the declared far slopes -B, A.
    """
    n = u.size
    ue = np.empty(n + 4)
    ue[2:-2] = u
    ue[1] = u[0] + h * B
    ue[0] = u[0] + 2.0 * h * B
    ue[-2] = u[-1] + h * A
    ue[-1] = u[-1] + 2.0 * h * A
    w = (ue[2:] - ue[:-2]) / (2.0 * h)
    wxx = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (h * h)
    wx = (w[2:] - w[:-2]) / (2.0 * h)
    wi = w[1:-1]
    w2 = wi * wi
    phi = w2 * (2.0 + w2) / (1.0 + w2) ** 2 * wxx + 3.0 * wi * wx * wx / (1.0 + w2) ** 3
    out = np.empty(n)
    out[1:-1] = (phi[2:] - phi[:-2]) / (2.0 * h)
    out[0] = (phi[1] - phi[0]) / h
    out[-1] = (phi[-1] - phi[-2]) / h
    return out


def _explicit_v(v, h, vL, vR):
    """dxx(alpha(v) v_xx + F(v)) for the slope equation, 2nd order.

    Ghost cells extend v by the constant far values vL, vR.
    """
    n = v.size
    ve = np.empty(n + 4)
    ve[2:-2] = v
    ve[0] = ve[1] = vL
    ve[-1] = ve[-2] = vR
    vx = (ve[2:] - ve[:-2]) / (2.0 * h)
    vxx = (ve[2:] - 2.0 * ve[1:-1] + ve[:-2]) / (h * h)
    vi = ve[1:-1]
    v2 = vi * vi
    phi = v2 * (2.0 + v2) / (1.0 + v2) ** 2 * vxx + 3.0 * vi * vx * vx / (1.0 + v2) ** 3
    # phi has one ghost value each side; second difference lands on nodes
    out = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / (h * h)
    return out


def penta_march_u(u, nsteps, dt, h, A, B, growth_cap=10.0):
    """Advance the height march nsteps with fixed dt.

    Implicit fourth derivative (pentadiagonal solve), explicit nonlinear
    flux. Returns (u, status); status 1 means blow-up was detected.
    """
    u = np.array(u, dtype=float)
    c = dt / h ** 4
    ab = _penta_bands(u.size, c, 1.0 + 3.0 * c, 1.0 + 3.0 * c, -3.0 * c, -3.0 * c)
    rc = np.zeros(u.size)
    rc[0] = 2.0 * h * B * c
    rc[1] = -h * B * c
    rc[-1] = 2.0 * h * A * c
    rc[-2] = -h * A * c
    for _ in range(nsteps):
        sup0 = np.max(np.abs(u)) + 1e-300
        rhs = u + dt * _explicit_u(u, h, A, B) + rc
        u = solve_banded((2, 2), ab, rhs)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > growth_cap * sup0:
            return u, 1
    return u, 0


def penta_march_v(v, nsteps, dt, h, vL, vR, growth_cap=10.0):
    """Advance the slope march nsteps with fixed dt. See penta_march_u."""
    v = np.array(v, dtype=float)
    c = dt / h ** 4
    ab = _penta_bands(v.size, c, 1.0 + 6.0 * c, 1.0 + 6.0 * c, -4.0 * c, -4.0 * c)
    rc = np.zeros(v.size)
    rc[0] = 3.0 * vL * c
    rc[1] = -vL * c
    rc[-1] = 3.0 * vR * c
    rc[-2] = -vR * c
    for _ in range(nsteps):
        sup0 = np.max(np.abs(v)) + 1e-300
        rhs = v + dt * _explicit_v(v, h, vL, vR) + rc
        v = solve_banded((2, 2), ab, rhs)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > growth_cap * sup0:
            return v, 1
    return v, 0
