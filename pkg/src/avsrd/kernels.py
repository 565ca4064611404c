"""Hot numeric kernels.

Each kernel exists in two flavours: an explicit-loop version compiled with
numba and a vectorized numpy version. ``USE_NUMBA`` (see :mod:`avsrd._accel`)
decides which one the public names below are bound to; both are importable
under their private names so tests and the benchmark can compare them.

Rate-distortion kernel
----------------------
``rd_point`` returns R(p, D) with a two-sided certificate. It works with the
row-min shifted distortion d0 and the shifted level D - D_min(p). For a slope
``beta`` the Blahut-Arimoto map minimizes

    F(q) = -sum_x p(x) ln sum_xhat q(xhat) exp(-beta d0(x, xhat))

over output laws q, and F(q) - ln max_xhat C(xhat) lower-bounds the minimum
(C is the BA multiplier). Any slope then gives the lower bound
min F - beta * D on R(D). The upper bound is the mutual information of an
explicit channel with distortion <= D: the BA channel at a slope whose
distortion is already below D, or the mixture of the two bracketing channels
hitting D exactly. Slope bisection stops when the bounds are within ``tol``.
"""

import types

import numpy as np

from ._accel import USE_NUMBA, njit

# status codes shared with the Python wrappers
RD_OK = 0
RD_INFEASIBLE = 1
RD_NOT_CONVERGED = 2

LP_OPTIMAL = 0
LP_UNBOUNDED = 1
LP_INFEASIBLE = 2
LP_ITERATION_LIMIT = 3


# ---------------------------------------------------------------------------
# Blahut-Arimoto building blocks, loop flavour
# ---------------------------------------------------------------------------


def _kernel_matrix_loops(d0, beta):
    nx, ny = d0.shape
    K = np.empty((nx, ny))
    for x in range(nx):
        for y in range(ny):
            if np.isinf(beta):
                K[x, y] = 1.0 if d0[x, y] == 0.0 else 0.0
            else:
                K[x, y] = np.exp(-beta * d0[x, y])
    return K


def _newton_polish_loops(p, K, q):
    """Guarded Newton steps for ``min F(q)`` on the current support of ``q``.

    Blahut-Arimoto crawls along near-flat directions of ``F`` (reproduction
    letters that differ only on low-mass source letters), which stalls the
    dual gap. A few Newton steps on the support settle those directions.
    Steps are accepted only if ``F`` does not increase.
    """
    nx, ny = K.shape
    S = np.empty(ny, dtype=np.int64)
    ns = 0
    for y in range(ny):
        if q[y] > 1e-13:
            S[ns] = y
            ns += 1
    if ns < 2:
        return
    Z = np.zeros(nx)
    F0 = 0.0
    for x in range(nx):
        if p[x] > 0.0:
            for y in range(ny):
                Z[x] += K[x, y] * q[y]
            F0 -= p[x] * np.log(Z[x])
    A = np.zeros((ns + 1, ns + 1))
    rhs = np.zeros(ns + 1)
    hmax = 0.0
    for i in range(ns):
        yi = S[i]
        c = 0.0
        for x in range(nx):
            if p[x] > 0.0:
                c += p[x] * K[x, yi] / Z[x]
        rhs[i] = c
        for j in range(ns):
            yj = S[j]
            h = 0.0
            for x in range(nx):
                if p[x] > 0.0:
                    h += p[x] * K[x, yi] * K[x, yj] / (Z[x] * Z[x])
            A[i, j] = h
        if A[i, i] > hmax:
            hmax = A[i, i]
        A[i, ns] = 1.0
        A[ns, i] = 1.0
    for i in range(ns):
        A[i, i] += 1e-13 * hmax
    # Gaussian elimination with partial pivoting
    m = ns + 1
    for k in range(m):
        piv = k
        for i in range(k + 1, m):
            if abs(A[i, k]) > abs(A[piv, k]):
                piv = i
        if A[piv, k] == 0.0:
            return
        if piv != k:
            for j in range(m):
                tmp = A[k, j]
                A[k, j] = A[piv, j]
                A[piv, j] = tmp
            tmp = rhs[k]
            rhs[k] = rhs[piv]
            rhs[piv] = tmp
        for i in range(k + 1, m):
            f = A[i, k] / A[k, k]
            if f != 0.0:
                for j in range(k, m):
                    A[i, j] -= f * A[k, j]
                rhs[i] -= f * rhs[k]
    sol = np.zeros(m)
    for k in range(m - 1, -1, -1):
        acc = rhs[k]
        for j in range(k + 1, m):
            acc -= A[k, j] * sol[j]
        sol[k] = acc / A[k, k]
    t = 1.0
    for i in range(ns):
        if sol[i] < 0.0 and q[S[i]] + sol[i] < 0.0:
            r = -q[S[i]] / sol[i]
            if r < t:
                t = r
    qn = np.empty(ny)
    for _ in range(40):
        for y in range(ny):
            qn[y] = q[y]
        for i in range(ns):
            v = q[S[i]] + t * sol[i]
            qn[S[i]] = v if v > 0.0 else 0.0
        tot = 0.0
        for y in range(ny):
            tot += qn[y]
        ok = tot > 0.0
        F1 = 0.0
        if ok:
            for y in range(ny):
                qn[y] /= tot
            for x in range(nx):
                if p[x] > 0.0:
                    z = 0.0
                    for y in range(ny):
                        z += K[x, y] * qn[y]
                    if z <= 0.0:
                        ok = False
                        break
                    F1 -= p[x] * np.log(z)
        if ok and F1 <= F0:
            for y in range(ny):
                q[y] = qn[y]
            return
        t *= 0.5


_newton = njit(_newton_polish_loops)

POLISH_EVERY = 500


def _ba_loops(p, K, q, tol_gap, max_iter):
    nx, ny = K.shape
    Z = np.empty(nx)
    C = np.empty(ny)
    F = 0.0
    gap = np.inf
    it = 0
    while it < max_iter:
        it += 1
        F = 0.0
        for x in range(nx):
            if p[x] > 0.0:
                z = 0.0
                for y in range(ny):
                    z += K[x, y] * q[y]
                Z[x] = z
                F -= p[x] * np.log(z)
        cmax = 0.0
        for y in range(ny):
            c = 0.0
            for x in range(nx):
                if p[x] > 0.0:
                    c += p[x] * K[x, y] / Z[x]
            C[y] = c
            if c > cmax:
                cmax = c
        gap = np.log(cmax)
        if gap <= tol_gap:
            break
        if it % POLISH_EVERY == 0:
            _newton(p, K, q)
            continue
        s = 0.0
        for y in range(ny):
            q[y] *= C[y]
            s += q[y]
        for y in range(ny):
            q[y] /= s
    return F, gap, it


def _channel_loops(p, K, q):
    nx, ny = K.shape
    W = np.empty((nx, ny))
    for x in range(nx):
        z = 0.0
        for y in range(ny):
            z += K[x, y] * q[y]
        for y in range(ny):
            W[x, y] = K[x, y] * q[y] / z if z > 0.0 else 1.0 / ny
    return W


def _channel_stats_loops(p, W, d0):
    nx, ny = W.shape
    r = np.zeros(ny)
    dist = 0.0
    for x in range(nx):
        if p[x] > 0.0:
            for y in range(ny):
                r[y] += p[x] * W[x, y]
                dist += p[x] * W[x, y] * d0[x, y]
    info = 0.0
    for x in range(nx):
        if p[x] > 0.0:
            for y in range(ny):
                pw = p[x] * W[x, y]
                if pw > 0.0:
                    info += pw * np.log(W[x, y] / r[y])
    if info < 0.0:
        info = 0.0
    return dist, info


# ---------------------------------------------------------------------------
# Blahut-Arimoto building blocks, numpy flavour
# ---------------------------------------------------------------------------


def _kernel_matrix_np(d0, beta):
    if np.isinf(beta):
        return (d0 == 0.0).astype(np.float64)
    return np.exp(-beta * d0)


def _ba_np(p, K, q, tol_gap, max_iter):
    live = p > 0
    pl = p[live]
    Kl = K[live]
    F = 0.0
    gap = np.inf
    it = 0
    while it < max_iter:
        it += 1
        Z = Kl @ q
        F = -float(pl @ np.log(Z))
        C = (pl / Z) @ Kl
        gap = float(np.log(C.max()))
        if gap <= tol_gap:
            break
        if it % POLISH_EVERY == 0:
            _newton_polish_loops(p, K, q)
            continue
        q *= C
        q /= q.sum()
    return F, gap, it


def _channel_np(p, K, q):
    W = K * q[None, :]
    s = W.sum(axis=1, keepdims=True)
    W = np.divide(W, s, out=np.full_like(W, 1.0 / W.shape[1]), where=s > 0)
    return W


def _channel_stats_np(p, W, d0):
    live = p > 0
    p, W, d0 = p[live], W[live], d0[live]
    joint = p[:, None] * W
    r = joint.sum(axis=0)
    dist = float((joint * d0).sum())
    mask = joint > 0
    ratio = W[mask] / np.broadcast_to(r[None, :], W.shape)[mask]
    info = float((joint[mask] * np.log(ratio)).sum())
    return dist, max(info, 0.0)


# ---------------------------------------------------------------------------
# slope search, shared by both flavours
#
# The shared drivers call their helpers through module globals (``_kmat``,
# ``_ba``, ...). The numba flavour compiles them against the jitted helpers
# bound below, which keeps them cacheable on disk; the numpy flavour is a
# copy of the same function with those globals rebound to numpy helpers.
# ---------------------------------------------------------------------------


def _rd_point_impl(p, d, D, tol, max_outer, max_inner):
    nx, ny = d.shape
    rowmin = np.empty(nx)
    for x in range(nx):
        rowmin[x] = d[x].min()
    d0 = d - rowmin.reshape((nx, 1))
    dmin = 0.0
    for x in range(nx):
        dmin += p[x] * rowmin[x]
    Ds = D - dmin
    scale = max(1.0, d.max())
    W = np.zeros((nx, ny))
    if Ds < -1e-12 * scale:
        return RD_INFEASIBLE, np.inf, np.inf, W, dmin, 0.0, 0
    if Ds < 0.0:
        Ds = 0.0

    col = np.zeros(ny)
    for y in range(ny):
        for x in range(nx):
            col[y] += p[x] * d0[x, y]
    ystar = 0
    for y in range(ny):
        if col[y] < col[ystar]:
            ystar = y
    if Ds >= col[ystar]:
        for x in range(nx):
            W[x, ystar] = 1.0
        return RD_OK, 0.0, 0.0, W, dmin + col[ystar], 0.0, 0

    H = 0.0
    for x in range(nx):
        if p[x] > 0.0:
            H -= p[x] * np.log(p[x])

    tol_gap = 0.25 * tol
    q = np.full(ny, 1.0 / ny)
    total_inner = 0
    lower = 0.0
    upper = np.inf
    W_best = W

    # convexity puts the optimal slope below (H + 1) / Ds
    if Ds > 0.0:
        beta_hi = 2.0 * (H + 1.0) / Ds
    else:
        beta_hi = np.inf
    D_hi = 0.0
    W_hi = W
    found = False
    beta_lo = 0.0
    has_lo = False
    D_lo = 0.0
    W_lo = W
    for _ in range(40):
        K = _kmat(d0, beta_hi)
        if np.isinf(beta_hi):
            q = np.full(ny, 1.0 / ny)
        F, gap, it = _ba(p, K, q, tol_gap, max_inner)
        total_inner += it
        Wc = _chan(p, K, q)
        dist, info = _chan_stats(p, Wc, d0)
        if np.isinf(beta_hi):
            lb = F - gap
        else:
            lb = F - gap - beta_hi * Ds
        if lb > lower:
            lower = lb
        if dist <= Ds:
            D_hi = dist
            W_hi = Wc
            found = True
            if info < upper:
                upper = info
                W_best = Wc
            break
        beta_lo = beta_hi
        has_lo = True
        D_lo = dist
        W_lo = Wc
        if beta_hi > 1e12:
            beta_hi = np.inf
        else:
            beta_hi *= 4.0
    if not found:
        return RD_NOT_CONVERGED, upper, lower, W_best, dmin, beta_hi, total_inner

    status = RD_NOT_CONVERGED
    for _ in range(max_outer):
        if has_lo:
            lam = (Ds - D_hi) / (D_lo - D_hi)
            Wm = lam * W_lo + (1.0 - lam) * W_hi
            dm, im = _chan_stats(p, Wm, d0)
            if im < upper:
                upper = im
                W_best = Wm
        if upper - lower <= tol:
            status = RD_OK
            break
        if np.isinf(beta_hi):
            beta = 4.0 * beta_lo
        elif not has_lo:
            beta = 0.5 * beta_hi
        elif beta_hi > 1.5 * beta_lo:
            beta = np.sqrt(beta_lo * beta_hi)
        else:
            beta = 0.5 * (beta_lo + beta_hi)
        if beta_hi - beta_lo <= 1e-15 * beta_hi:
            break
        # keep every reproduction letter reachable after warm start
        for y in range(ny):
            q[y] = (1.0 - 1e-9) * q[y] + 1e-9 / ny
        K = _kmat(d0, beta)
        F, gap, it = _ba(p, K, q, tol_gap, max_inner)
        total_inner += it
        lb = F - gap - beta * Ds
        if lb > lower:
            lower = lb
        Wc = _chan(p, K, q)
        dist, info = _chan_stats(p, Wc, d0)
        if dist <= Ds:
            beta_hi = beta
            D_hi = dist
            W_hi = Wc
            if info < upper:
                upper = info
                W_best = Wc
        else:
            beta_lo = beta
            has_lo = True
            D_lo = dist
            W_lo = Wc
    dach, _ = _chan_stats(p, W_best, d0)
    return status, upper, lower, W_best, dmin + dach, beta_hi, total_inner


def _rd_batch_impl(P, d, D, tol, max_outer, max_inner):
    k = P.shape[0]
    rates = np.empty(k)
    lowers = np.empty(k)
    status = np.empty(k, dtype=np.int64)
    for i in range(k):
        st, up, lo, W, dach, beta, it = _rd_point(
            P[i], d, D, tol, max_outer, max_inner
        )
        rates[i] = up
        lowers[i] = lo
        status[i] = st
    return status, rates, lowers


# ---------------------------------------------------------------------------
# dense two-phase simplex (single source: vectorized numpy, also jitted)
# ---------------------------------------------------------------------------


def _pivot_impl(T, basis, r, j):
    T[r, :] = T[r, :] / T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r, :])
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def _pivot_loop_impl(T, basis, ncols, tol, max_iter):
    m = T.shape[0] - 1
    bland = False
    stall = 0
    it = 0
    while it < max_iter:
        rc = T[m, :ncols]
        j = -1
        if bland:
            for k in range(ncols):
                if rc[k] < -tol:
                    j = k
                    break
        else:
            k = int(np.argmin(rc))
            if rc[k] < -tol:
                j = k
        if j < 0:
            return LP_OPTIMAL, it
        r = -1
        best = np.inf
        for i in range(m):
            a = T[i, j]
            if a > tol:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12 or (
                    ratio <= best + 1e-12 and r >= 0 and basis[i] < basis[r]
                ):
                    best = ratio
                    r = i
        if r < 0:
            return LP_UNBOUNDED, it
        if best <= tol:
            stall += 1
            if stall > 50:
                bland = True
        else:
            stall = 0
        _pivot(T, basis, r, j)
        it += 1
    return LP_ITERATION_LIMIT, it


def _simplex_impl(A, b, c, slack_col, tol, feas_tol, max_iter):
    """min c.x  s.t.  A x = b, x >= 0  with b >= 0.

    ``slack_col[i]`` names a column that is the unit vector e_i (usable as an
    initial basic variable) or is -1, in which case an artificial is added.
    """
    m, n = A.shape
    n_art = 0
    for i in range(m):
        if slack_col[i] < 0:
            n_art += 1
    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    a = 0
    for i in range(m):
        if slack_col[i] < 0:
            T[i, n + a] = 1.0
            basis[i] = n + a
            a += 1
        else:
            basis[i] = slack_col[i]
    x = np.zeros(n)
    iters = 0
    if n_art > 0:
        for i in range(m):
            if basis[i] >= n:
                T[m, :] -= T[i, :]
                T[m, basis[i]] = 0.0
        st, it = _pivot_loop(T, basis, n + n_art, tol, max_iter)
        iters += it
        if st == LP_ITERATION_LIMIT:
            return LP_ITERATION_LIMIT, x, np.nan, iters
        if -T[m, -1] > feas_tol * (1.0 + np.abs(b).max()):
            return LP_INFEASIBLE, x, np.nan, iters
        for i in range(m):
            if basis[i] >= n:
                for j in range(n):
                    if abs(T[i, j]) > 1e-9:
                        _pivot(T, basis, i, j)
                        break
        # retired artificials never re-enter
        T[:, n : n + n_art] = 0.0
        for i in range(m):
            if basis[i] >= n:
                T[i, basis[i]] = 1.0
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        if basis[i] < n:
            T[m, :] -= c[basis[i]] * T[i, :]
    st, it = _pivot_loop(T, basis, n, tol, max_iter - iters)
    iters += it
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    if st != LP_OPTIMAL:
        return st, x, np.nan, iters
    return LP_OPTIMAL, x, np.sum(c * x), iters


def _l1_batch_impl(A, b, c, slack_col, q_rows, Q, tol, feas_tol, max_iter):
    k = Q.shape[0]
    out = np.empty(k)
    status = np.empty(k, dtype=np.int64)
    bb = b.copy()
    for i in range(k):
        for r in range(q_rows.shape[0]):
            bb[q_rows[r]] = Q[i, r]
        st, x, val, it = _simplex(A, bb, c, slack_col, tol, feas_tol, max_iter)
        status[i] = st
        out[i] = val
    return status, out


def _rebind(fn, **names):
    """Copy of ``fn`` whose global lookups of ``names`` see the given objects."""
    g = dict(fn.__globals__)
    g.update(names)
    return types.FunctionType(fn.__code__, g, fn.__name__, fn.__defaults__, fn.__closure__)


_kmat = njit(_kernel_matrix_loops)
_ba = njit(_ba_loops)
_chan = njit(_channel_loops)
_chan_stats = njit(_channel_stats_loops)
rd_point_numba = njit(_rd_point_impl)
_rd_point = rd_point_numba
rd_batch_numba = njit(_rd_batch_impl)

_pivot = njit(_pivot_impl)
_pivot_loop = njit(_pivot_loop_impl)
simplex_std_numba = njit(_simplex_impl)
_simplex = simplex_std_numba
l1_batch_numba = njit(_l1_batch_impl)

rd_point_numpy = _rebind(
    _rd_point_impl,
    _kmat=_kernel_matrix_np,
    _ba=_ba_np,
    _chan=_channel_np,
    _chan_stats=_channel_stats_np,
)
rd_batch_numpy = _rebind(_rd_batch_impl, _rd_point=rd_point_numpy)
_pivot_loop_numpy = _rebind(_pivot_loop_impl, _pivot=_pivot_impl)
simplex_std_numpy = _rebind(_simplex_impl, _pivot=_pivot_impl, _pivot_loop=_pivot_loop_numpy)
l1_batch_numpy = _rebind(_l1_batch_impl, _simplex=simplex_std_numpy)


# ---------------------------------------------------------------------------
# simulation kernels
# ---------------------------------------------------------------------------


def _select_by_rules_loops(masks, cum, u):
    n = masks.shape[0]
    nx = cum.shape[1]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        row = cum[masks[k]]
        out[k] = nx - 1
        for x in range(nx):
            if u[k] < row[x]:
                out[k] = x
                break
    return out


def _select_by_rules_np(masks, cum, u):
    return np.argmax(cum[masks] > u[:, None], axis=1).astype(np.int64)


def _block_distortion_loops(x, words, d):
    K, n = words.shape
    best = np.inf
    for w in range(K):
        s = 0.0
        for k in range(n):
            s += d[x[k], words[w, k]]
            if s >= best:
                break
        if s < best:
            best = s
    return best / n


def _block_distortion_np(x, words, d):
    best = np.inf
    chunk = max(1, 2_000_000 // max(1, x.shape[0]))
    for start in range(0, words.shape[0], chunk):
        sub = words[start : start + chunk]
        best = min(best, float(d[x[None, :], sub].sum(axis=1).min()))
    return best / x.shape[0]


def _best_word_loops(masks, words, rho):
    K, n = words.shape
    best = np.inf
    arg = 0
    for w in range(K):
        s = 0.0
        for k in range(n):
            s += rho[masks[k], words[w, k]]
            if s >= best:
                break
        if s < best:
            best = s
            arg = w
    return arg, best / n


def _best_word_np(masks, words, rho):
    scores = rho[masks[None, :], words].sum(axis=1)
    arg = int(np.argmin(scores))
    return arg, float(scores[arg]) / masks.shape[0]


select_by_rules_numba = njit(_select_by_rules_loops)
block_distortion_numba = njit(_block_distortion_loops)
best_word_numba = njit(_best_word_loops)

if USE_NUMBA:
    rd_point = rd_point_numba
    rd_batch = rd_batch_numba
    simplex_std = simplex_std_numba
    l1_batch = l1_batch_numba
    select_by_rules = select_by_rules_numba
    block_distortion = block_distortion_numba
    best_word = best_word_numba
else:
    rd_point = rd_point_numpy
    rd_batch = rd_batch_numpy
    simplex_std = simplex_std_numpy
    l1_batch = l1_batch_numpy
    select_by_rules = _select_by_rules_np
    block_distortion = _block_distortion_np
    best_word = _best_word_np
