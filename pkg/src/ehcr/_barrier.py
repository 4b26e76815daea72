"""Compiled centering loop for the offline barrier method.

Free slots only; the variable vector is ``[alpha, E]``.  Slacks:

    c_k = offset_k + sum_{j<=k} (w * (1 - alpha_j) - E_j)   causality
    g_k = p * alpha_k - h_k * E_k                          interference (p > 0)
    E_k, alpha_k, 1 - alpha_k                              bounds

``scale`` multiplies the objective expressed in nats, so ``scale = t / ln 2``
puts ``t`` on the objective in bits.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def slacks(alpha, energy, offset, w, p, h):
    n = alpha.size
    c = np.empty(n)
    g = np.empty(n)
    run = 0.0
    for k in range(n):
        run += w * (1.0 - alpha[k]) - energy[k]
        c[k] = offset[k] + run
        g[k] = p * alpha[k] - h[k] * energy[k]
    return c, g


@numba.njit(cache=True)
def barrier_value(scale, alpha, energy, theta, offset, w, p, h, has_int):
    c, g = slacks(alpha, energy, offset, w, p, h)
    total = 0.0
    for k in range(alpha.size):
        a, e = alpha[k], energy[k]
        if c[k] <= 0.0 or e <= 0.0 or a <= 0.0 or a >= 1.0:
            return np.inf
        if has_int and g[k] <= 0.0:
            return np.inf
        total -= scale * a * math.log1p(theta[k] * e / a)
        total -= math.log(c[k]) + math.log(e) + math.log(a) + math.log1p(-a)
        if has_int:
            total -= math.log(g[k])
    return total


@numba.njit(cache=True)
def newton_system(scale, alpha, energy, theta, offset, w, p, h, has_int):
    """Gradient and banded Hessian in cumulative coordinates.

    Newton steps are taken in ``z = (alpha_0, S_0, alpha_1, S_1, ...)``
    where ``S_k = sum_{j<=k} (w * alpha_j + E_j)`` is the cumulative spend,
    so that ``E_k = S_k - S_{k-1} - w * alpha_k``.  Each causality slack
    depends on one ``S_k`` only and every other term on
    ``(alpha_k, S_{k-1}, S_k)``, so the Hessian is pentadiagonal.  It is
    returned as ``band[i, d] = H[i, i - d]`` for ``d = 0, 1, 2``.  Every
    block is assembled as a sum of positive rank-one terms, with no
    subtraction of large quantities.
    """
    n = alpha.size
    c, g = slacks(alpha, energy, offset, w, p, h)
    grad = np.zeros(2 * n)
    band = np.zeros((2 * n, 3))
    next_local_e = 0.0
    for k in range(n - 1, -1, -1):
        a, e, th = alpha[k], energy[k], theta[k]
        u = th * e / a
        q = a + th * e
        local_a = -scale * (math.log1p(u) - u / (1.0 + u)) - 1.0 / a + 1.0 / (1.0 - a)
        local_e = -scale * th / (1.0 + u) - 1.0 / e
        i1 = 0.0
        i2 = 0.0
        if has_int:
            ig = 1.0 / g[k]
            local_a -= p * ig
            local_e += h[k] * ig
            i1 = p * ig
            i2 = -h[k] * ig
        ia = 2 * k
        i_s = 2 * k + 1
        grad[ia] = local_a - w * local_e
        grad[i_s] = local_e - next_local_e + 1.0 / c[k]
        next_local_e = local_e
        band[i_s, 0] += 1.0 / (c[k] * c[k])

        # rank-one terms over (alpha_k, S_{k-1}, S_k)
        root = math.sqrt(scale * th * th / a) / q
        _add_rank_one(band, k, 1.0 / (a * a) + 1.0 / ((1.0 - a) * (1.0 - a)), 1.0, 0.0, 0.0)
        _add_rank_one(band, k, 1.0 / (e * e), -w, -1.0, 1.0)
        _add_rank_one(band, k, 1.0, root * (e + w * a), root * a, -root * a)
        if has_int:
            _add_rank_one(band, k, 1.0, i1 - w * i2, -i2, i2)
    return grad, band, c


@numba.njit(cache=True)
def _add_rank_one(band, k, coef, va, vprev, vs):
    ia = 2 * k
    i_s = 2 * k + 1
    band[ia, 0] += coef * va * va
    band[i_s, 0] += coef * vs * vs
    band[i_s, 1] += coef * vs * va
    if k > 0:
        band[ia - 1, 0] += coef * vprev * vprev
        band[ia, 1] += coef * va * vprev
        band[i_s, 2] += coef * vs * vprev


@numba.njit(cache=True)
def _band_cholesky(band):
    """In-place lower Cholesky of a half-bandwidth 2 matrix; False if not PD."""
    m = band.shape[0]
    for j in range(m):
        s = band[j, 0]
        for d in range(1, 3):
            if j - d >= 0:
                s -= band[j, d] * band[j, d]
        if not s > 0.0:
            return False
        ljj = math.sqrt(s)
        band[j, 0] = ljj
        for i in range(j + 1, min(m, j + 3)):
            s = band[i, i - j]
            for k in range(max(0, i - 2), j):
                s -= band[i, i - k] * band[j, j - k]
            band[i, i - j] = s / ljj
    return True


@numba.njit(cache=True)
def newton_direction(grad, band):
    """Solve ``H dz = -grad`` with Jacobi scaling and banded Cholesky."""
    m = grad.size
    d = np.empty(m)
    for i in range(m):
        d[i] = 1.0 / math.sqrt(band[i, 0])
    shift = 0.0
    for _ in range(8):
        fac = np.empty_like(band)
        for i in range(m):
            fac[i, 0] = band[i, 0] * d[i] * d[i] + shift
            for k in range(1, 3):
                fac[i, k] = band[i, k] * d[i] * d[i - k] if i - k >= 0 else 0.0
        if _band_cholesky(fac):
            break
        shift = 1e-14 if shift == 0.0 else shift * 100.0
    y = np.empty(m)
    for i in range(m):
        s = -grad[i] * d[i]
        for k in range(1, 3):
            if i - k >= 0:
                s -= fac[i, k] * y[i - k]
        y[i] = s / fac[i, 0]
    x = np.empty(m)
    for i in range(m - 1, -1, -1):
        s = y[i]
        for k in range(1, 3):
            if i + k < m:
                s -= fac[i + k, k] * x[i + k]
        x[i] = s / fac[i, 0]
    for i in range(m):
        x[i] *= d[i]
    return x


@numba.njit(cache=True)
def to_slot_step(dz, w):
    """Map a step in cumulative coordinates back to ``(d alpha, d E)``."""
    n = dz.size // 2
    da = np.empty(n)
    de = np.empty(n)
    prev = 0.0
    for k in range(n):
        da[k] = dz[2 * k]
        de[k] = dz[2 * k + 1] - prev - w * da[k]
        prev = dz[2 * k + 1]
    return da, de


@numba.njit(cache=True)
def max_step(alpha, energy, da, de, offset, w, p, h, has_int):
    """Largest step in (0, 1] keeping all slacks positive, shrunk by 0.99."""
    c, g = slacks(alpha, energy, offset, w, p, h)
    step = 1.0
    dc = 0.0
    for k in range(alpha.size):
        dc += -w * da[k] - de[k]
        if dc < 0.0:
            step = min(step, 0.99 * (-c[k] / dc))
        if de[k] < 0.0:
            step = min(step, 0.99 * (-energy[k] / de[k]))
        if da[k] < 0.0:
            step = min(step, 0.99 * (-alpha[k] / da[k]))
        if da[k] > 0.0:
            step = min(step, 0.99 * ((1.0 - alpha[k]) / da[k]))
        if has_int:
            dg = p * da[k] - h[k] * de[k]
            if dg < 0.0:
                step = min(step, 0.99 * (-g[k] / dg))
    return step


@numba.njit(cache=True)
def center(scale, alpha, energy, theta, offset, w, p, h, has_int,
           a_ls, b_ls, newton_tol, max_newton):
    """Damped Newton for one barrier stage.

    Returns ``(alpha, energy, iterations, decrement, converged)``.
    """
    n = alpha.size
    alpha = alpha.copy()
    energy = energy.copy()
    decrement = np.inf
    for it in range(1, max_newton + 1):
        grad, band, c = newton_system(scale, alpha, energy, theta, offset, w, p, h, has_int)
        dz = newton_direction(grad, band)
        decrement = 0.0
        for i in range(2 * n):
            decrement -= grad[i] * dz[i]
        f0 = barrier_value(scale, alpha, energy, theta, offset, w, p, h, has_int)
        # at large t rounding in the gradient keeps the decrement from
        # reaching newton_tol; accept a floor tied to the barrier magnitude
        if decrement / 2.0 <= max(newton_tol, 1e-18 * abs(f0)):
            return alpha, energy, it, decrement, True
        da, de = to_slot_step(dz, w)
        step = max_step(alpha, energy, da, de, offset, w, p, h, has_int)
        # rounding floor of the barrier value; below it Armijo cannot decide
        noise = 1e-13 * (abs(f0) + 1.0)
        while True:
            a_new = alpha + step * da
            e_new = energy + step * de
            f1 = barrier_value(scale, a_new, e_new, theta, offset, w, p, h, has_int)
            if f1 <= f0 - a_ls * step * decrement + noise:
                break
            step *= b_ls
            if step < 1e-14:
                return alpha, energy, it, decrement, False
        moved = False
        for i in range(n):
            if a_new[i] != alpha[i] or e_new[i] != energy[i]:
                moved = True
                break
        if not moved:
            return alpha, energy, it, decrement, decrement / 2.0 <= 1e3 * newton_tol + noise
        alpha = a_new
        energy = e_new
    return alpha, energy, max_newton, decrement, False
