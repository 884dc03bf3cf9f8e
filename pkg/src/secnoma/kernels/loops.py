"""Numba backend: the hot kernels as @njit loop nests.

Matrices here are tiny (dim <= 16), so explicit loops beat BLAS dispatch
overhead everywhere except the MLP matvecs, which go through np.dot.
All kernels release the GIL so dataset generation can fan out over threads.
"""

import math

import numpy as np
from numba import njit

_LN2 = math.log(2.0)


@njit(cache=True, nogil=True)
def sym_eigh(a):
    """Cyclic Jacobi eigendecomposition, eigenvalues descending."""
    n = a.shape[0]
    m = a.copy()
    v = np.eye(n)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += m[i, j] * m[i, j]
    fro = math.sqrt(fro)
    if fro == 0.0:
        return np.zeros(n), v
    for _sweep in range(60):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += m[i, j] * m[i, j]
        if math.sqrt(2.0 * off) <= 1e-14 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-18 * fro:
                    continue
                tau = (m[q, q] - m[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # m <- J^T m J with J the (p,q) plane rotation
                for k in range(n):
                    mkp = m[k, p]
                    mkq = m[k, q]
                    m[k, p] = c * mkp - s * mkq
                    m[k, q] = s * mkp + c * mkq
                for k in range(n):
                    mpk = m[p, k]
                    mqk = m[q, k]
                    m[p, k] = c * mpk - s * mqk
                    m[q, k] = s * mpk + c * mqk
                m[p, q] = 0.0
                m[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = m[i, i]
    # selection sort, descending
    for i in range(n - 1):
        best = i
        for j in range(i + 1, n):
            if w[j] > w[best]:
                best = j
        if best != i:
            tmp = w[i]
            w[i] = w[best]
            w[best] = tmp
            for k in range(n):
                tv = v[k, i]
                v[k, i] = v[k, best]
                v[k, best] = tv
    return w, v


@njit(cache=True, nogil=True)
def _chol(a):
    """Lower Cholesky factor; ok=False when the matrix is not PD."""
    n = a.shape[0]
    l = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= l[i, k] * l[j, k]
            if i == j:
                if s <= 0.0:
                    return l, False
                l[i, i] = math.sqrt(s)
            else:
                l[i, j] = s / l[j, j]
    return l, True


@njit(cache=True, nogil=True)
def logdet2_pd(a):
    l, ok = _chol(a)
    if not ok:
        return np.nan, False
    acc = 0.0
    n = a.shape[0]
    for i in range(n):
        acc += math.log(l[i, i])
    return 2.0 * acc / _LN2, True


@njit(cache=True, nogil=True)
def _pd_inverse(a):
    """Inverse of a PD matrix through its Cholesky factor."""
    n = a.shape[0]
    l, ok = _chol(a)
    inv = np.zeros((n, n))
    if not ok:
        return inv, False
    li = np.zeros((n, n))
    for i in range(n):
        li[i, i] = 1.0 / l[i, i]
        for j in range(i):
            s = 0.0
            for k in range(j, i):
                s += l[i, k] * li[k, j]
            li[i, j] = -s / l[i, i]
    for i in range(n):
        for j in range(i + 1):
            s = 0.0
            for k in range(i, n):
                s += li[k, i] * li[k, j]
            inv[i, j] = s
            inv[j, i] = s
    return inv, True


@njit(cache=True, nogil=True)
def project_psd(a, budget):
    n = a.shape[0]
    w, v = sym_eigh(a)
    tr = 0.0
    for i in range(n):
        tr += w[i]
    if w[n - 1] >= 0.0 and tr <= budget:
        return a.copy()
    b = np.zeros((n, n))
    tr = 0.0
    for k in range(n):
        wk = w[k]
        if wk <= 0.0:
            continue
        tr += wk
        for i in range(n):
            for j in range(i + 1):
                b[i, j] += wk * v[i, k] * v[j, k]
    for i in range(n):
        for j in range(i):
            b[j, i] = b[i, j]
    if tr > budget and tr > 0.0:
        f = budget / tr
        for i in range(n):
            for j in range(n):
                b[i, j] *= f
    return b


@njit(cache=True, nogil=True)
def project_trace_simplex(a, budget):
    """Exact Euclidean projection onto {Q >= 0, tr(Q) <= budget}."""
    n = a.shape[0]
    if budget <= 0.0:
        return np.zeros((n, n))
    w, v = sym_eigh(a)
    tr = 0.0
    for i in range(n):
        if w[i] > 0.0:
            tr += w[i]
    p = np.empty(n)
    if tr <= budget:
        if w[n - 1] >= 0.0 and tr <= budget:
            return a.copy()
        for i in range(n):
            p[i] = w[i] if w[i] > 0.0 else 0.0
    else:
        # w sorted descending: find theta with sum(max(w - theta, 0)) == budget
        css = 0.0
        theta = 0.0
        for k in range(n):
            css += w[k]
            cand = (css - budget) / (k + 1)
            if w[k] - cand > 0.0:
                theta = cand
        for i in range(n):
            pi = w[i] - theta
            p[i] = pi if pi > 0.0 else 0.0
    b = np.zeros((n, n))
    for k in range(n):
        pk = p[k]
        if pk <= 0.0:
            continue
        for i in range(n):
            for j in range(i + 1):
                b[i, j] += pk * v[i, k] * v[j, k]
    for i in range(n):
        for j in range(i):
            b[j, i] = b[i, j]
    return b


@njit(cache=True, nogil=True)
def _gram_plus_eye(h, q):
    """I + H Q H^T built with explicit loops (m x m, symmetric)."""
    m, n = h.shape
    t = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(n):
                s += q[i, k] * h[j, k]
            t[i, j] = s
    a = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            s = 0.0
            for k in range(n):
                s += h[i, k] * t[k, j]
            a[i, j] = s
            a[j, i] = s
        a[i, i] += 1.0
    return a


@njit(cache=True, nogil=True)
def _half_logdet_gram(h, q):
    a = _gram_plus_eye(h, q)
    l, ok = _chol(a)
    if not ok:
        return np.nan, False
    acc = 0.0
    for i in range(a.shape[0]):
        acc += math.log(l[i, i])
    return acc / _LN2, True


@njit(cache=True, nogil=True)
def wiretap_objective(q, hm, he):
    fm, okm = _half_logdet_gram(hm, q)
    fe, oke = _half_logdet_gram(he, q)
    if not (okm and oke):
        return -np.inf
    return fm - fe


@njit(cache=True, nogil=True)
def _grad_term(h, q, out, sign):
    """out += sign * H^T (I + H Q H^T)^{-1} H."""
    m, n = h.shape
    a = _gram_plus_eye(h, q)
    inv, ok = _pd_inverse(a)
    if not ok:
        return False
    for i in range(n):
        for j in range(n):
            s = 0.0
            for r in range(m):
                hri = h[r, i]
                for c in range(m):
                    s += hri * inv[r, c] * h[c, j]
            out[i, j] += sign * s
    return True


@njit(cache=True, nogil=True)
def wiretap_gradient(q, hm, he):
    n = q.shape[0]
    g = np.zeros((n, n))
    _grad_term(hm, q, g, 1.0)
    _grad_term(he, q, g, -1.0)
    for i in range(n):
        for j in range(i):
            gij = 0.5 * (g[i, j] + g[j, i])
            g[i, j] = gij
            g[j, i] = gij
    for i in range(n):
        for j in range(n):
            g[i, j] *= 0.5 / _LN2
    return g


@njit(cache=True, nogil=True)
def pga_solve(hm, he, budget, step0, tol, max_iters):
    nt = hm.shape[1]
    if budget <= 0.0:
        return np.zeros((nt, nt)), 0.0, 0, True
    q = np.eye(nt) * (budget / nt)
    f = wiretap_objective(q, hm, he)
    step = step0
    iters = 0
    converged = False
    for _ in range(max_iters):
        g = wiretap_gradient(q, hm, he)
        s = min(step0, 2.0 * step)
        fc = f
        qc = q
        accepted = False
        while s > 1e-18:
            qc = project_trace_simplex(q + s * g, budget)
            fc = wiretap_objective(qc, hm, he)
            if fc >= f:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            converged = True
            break
        iters += 1
        gain = fc - f
        q = qc
        f = fc
        step = s
        if gain < tol:
            converged = True
            break
    if f <= 0.0:
        return np.zeros((nt, nt)), 0.0, iters, converged
    return q, f, iters, converged


@njit(cache=True, nogil=True)
def grid_search(hm, he, budget, resolution):
    nt = hm.shape[1]
    gm = np.zeros((nt, nt))
    ge = np.zeros((nt, nt))
    for i in range(nt):
        for j in range(nt):
            sm = 0.0
            for k in range(hm.shape[0]):
                sm += hm[k, i] * hm[k, j]
            gm[i, j] = sm
            se = 0.0
            for k in range(he.shape[0]):
                se += he[k, i] * he[k, j]
            ge[i, j] = se

    if nt == 1:
        best = 0.0
        best_q = 0.0
        n_evals = resolution + 1
        for i in range(resolution + 1):
            qv = budget * i / resolution
            f = 0.5 * (math.log(1.0 + qv * gm[0, 0])
                       - math.log(1.0 + qv * ge[0, 0])) / _LN2
            if f > best:
                best = f
                best_q = qv
        q = np.zeros((1, 1))
        if best <= 0.0:
            return q, 0.0, n_evals
        q[0, 0] = best_q
        return q, best, n_evals

    best = 0.0
    bq00 = 0.0
    bq01 = 0.0
    bq11 = 0.0
    n_evals = 0
    n_th = 4 * resolution
    for i in range(resolution + 1):
        p1 = budget * i / resolution
        for j in range(resolution + 1 - i):
            p2 = budget * j / resolution
            for k in range(n_th):
                th = math.pi * k / n_th
                c = math.cos(th)
                s = math.sin(th)
                q00 = p1 * c * c + p2 * s * s
                q01 = (p1 - p2) * c * s
                q11 = p1 * s * s + p2 * c * c
                m00 = 1.0 + q00 * gm[0, 0] + q01 * gm[1, 0]
                m01 = q00 * gm[0, 1] + q01 * gm[1, 1]
                m10 = q01 * gm[0, 0] + q11 * gm[1, 0]
                m11 = 1.0 + q01 * gm[0, 1] + q11 * gm[1, 1]
                detm = m00 * m11 - m01 * m10
                e00 = 1.0 + q00 * ge[0, 0] + q01 * ge[1, 0]
                e01 = q00 * ge[0, 1] + q01 * ge[1, 1]
                e10 = q01 * ge[0, 0] + q11 * ge[1, 0]
                e11 = 1.0 + q01 * ge[0, 1] + q11 * ge[1, 1]
                dete = e00 * e11 - e01 * e10
                f = 0.5 * (math.log(detm) - math.log(dete)) / _LN2
                n_evals += 1
                if f > best:
                    best = f
                    bq00 = q00
                    bq01 = q01
                    bq11 = q11
    q = np.zeros((2, 2))
    if best <= 0.0:
        return q, 0.0, n_evals
    q[0, 0] = bq00
    q[0, 1] = bq01
    q[1, 0] = bq01
    q[1, 1] = bq11
    return q, best, n_evals


@njit(cache=True, nogil=True)
def nn_forward(flat, widths, x):
    a = x
    off = 0
    n_layers = widths.shape[0] - 1
    for l in range(n_layers):
        n_in = widths[l]
        n_out = widths[l + 1]
        w = flat[off:off + n_out * n_in].reshape(n_out, n_in)
        off += n_out * n_in
        b = flat[off:off + n_out]
        off += n_out
        a = np.dot(w, a) + b
        if l < n_layers - 1:
            a = np.maximum(a, 0.0)
    return a


@njit(cache=True, nogil=True)
def build_features(h1, h2, c1, c2):
    nt = h1.shape[1]
    g = np.zeros((nt, 2 * nt))
    for i in range(nt):
        for j in range(nt):
            s1 = 0.0
            for k in range(h1.shape[0]):
                s1 += h1[k, i] * h1[k, j]
            g[i, j] = s1
            s2 = 0.0
            for k in range(h2.shape[0]):
                s2 += h2[k, i] * h2[k, j]
            g[i, j + nt] = s2
    out = np.empty(6 * nt * nt)
    idx = 0
    # column-major vec of g
    for j in range(2 * nt):
        for i in range(nt):
            out[idx] = c1 * g[i, j]
            idx += 1
    # column-major vec of g^T g (symmetric)
    for j in range(2 * nt):
        for i in range(2 * nt):
            s = 0.0
            for k in range(nt):
                s += g[k, i] * g[k, j]
            out[idx] = c2 * s
            idx += 1
    return out


@njit(cache=True, nogil=True)
def unpack_pair(labels, nt, p):
    k = nt * (nt + 1) // 2
    q1 = np.zeros((nt, nt))
    q2 = np.zeros((nt, nt))
    idx = 0
    for i in range(nt):
        for j in range(i, nt):
            q1[i, j] = labels[idx]
            q1[j, i] = labels[idx]
            q2[i, j] = labels[k + idx]
            q2[j, i] = labels[k + idx]
            idx += 1
    q1 = project_psd(q1, np.inf)
    q2 = project_psd(q2, np.inf)
    tr = 0.0
    for i in range(nt):
        tr += q1[i, i] + q2[i, i]
    if tr > p and tr > 0.0:
        f = p / tr
        for i in range(nt):
            for j in range(nt):
                q1[i, j] *= f
                q2[i, j] *= f
    return q1, q2
