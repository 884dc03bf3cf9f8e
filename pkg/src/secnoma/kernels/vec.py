"""Pure-numpy backend for the hot numeric kernels.

Same call surface as :mod:`secnoma.kernels.loops`; selected when the
``SECNOMA_DISABLE_NUMBA`` environment flag is set or numba is missing.
Search-style kernels are vectorized with broadcasting instead of loops.
"""

import numpy as np

_LN2 = np.log(2.0)


def sym_eigh(a):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def logdet2_pd(a):
    """Base-2 log-determinant via Cholesky. Returns (value, ok)."""
    try:
        l = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.nan, False
    return 2.0 * np.sum(np.log(np.diag(l))) / _LN2, True


def project_psd(a, budget):
    """Clip negative eigenvalues, then rescale uniformly if trace > budget."""
    w, v = sym_eigh(a)
    tr = np.sum(w)
    if w[-1] >= 0.0 and tr <= budget:
        return a.copy()
    wc = np.maximum(w, 0.0)
    b = (v * wc) @ v.T
    b = 0.5 * (b + b.T)
    tr = np.sum(wc)
    if tr > budget and tr > 0.0:
        b *= budget / tr
    return b


def project_trace_simplex(a, budget):
    """Exact Euclidean projection onto {Q >= 0, tr(Q) <= budget}.

    Eigenvalues are projected onto the nonnegative simplex (uniform shift
    theta, then clip), which is the true nearest feasible point. Used inside
    the gradient solver, where the clip-and-rescale repair of project_psd
    would stall at non-stationary fixed points.
    """
    if budget <= 0.0:
        return np.zeros_like(a)
    w, v = sym_eigh(a)
    wc = np.maximum(w, 0.0)
    tr = np.sum(wc)
    if tr <= budget:
        if w[-1] >= 0.0:
            return a.copy()
        p = wc
    else:
        # w is sorted descending; find the shift theta with
        # sum(max(w - theta, 0)) == budget
        css = np.cumsum(w)
        p = wc
        for k in range(w.shape[0], 0, -1):
            theta = (css[k - 1] - budget) / k
            if w[k - 1] - theta > 0.0:
                p = np.maximum(w - theta, 0.0)
                break
    b = (v * p) @ v.T
    return 0.5 * (b + b.T)


def _half_logdet_gram(h, q):
    """(1/2) log2 det(I + H Q H^T) with a PD guard flag."""
    m = h.shape[0]
    a = np.eye(m) + h @ q @ h.T
    try:
        l = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.nan, False
    return np.sum(np.log(np.diag(l))) / _LN2, True


def wiretap_objective(q, hm, he):
    """Secrecy objective in bits: half log-det ratio of the two receivers."""
    fm, okm = _half_logdet_gram(hm, q)
    fe, oke = _half_logdet_gram(he, q)
    if not (okm and oke):
        return -np.inf
    return fm - fe


def wiretap_gradient(q, hm, he):
    """Euclidean gradient of wiretap_objective at q (symmetric part)."""
    am = np.eye(hm.shape[0]) + hm @ q @ hm.T
    ae = np.eye(he.shape[0]) + he @ q @ he.T
    g = hm.T @ np.linalg.inv(am) @ hm - he.T @ np.linalg.inv(ae) @ he
    g *= 0.5 / _LN2
    return 0.5 * (g + g.T)


def pga_solve(hm, he, budget, step0, tol, max_iters):
    """Projected gradient ascent with backtracking line search.

    Returns (q, rate_bits, accepted_iterations, converged). The step carries
    over between iterations (doubled, capped at step0) so late iterations do
    not re-pay the full backtracking cost.
    """
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
        q, f, step = qc, fc, s
        if gain < tol:
            converged = True
            break
    if f <= 0.0:
        return np.zeros((nt, nt)), 0.0, iters, converged
    return q, f, iters, converged


def grid_search(hm, he, budget, resolution):
    """Exhaustive search over eigenvalue/angle parameterized covariances.

    nt == 1: power grid on [0, budget]. nt == 2: simplex grid on the
    eigenvalues (p1, p2) with tr <= budget and an eigenvector angle grid of
    4*resolution points on [0, pi), for a total cost of ~resolution^3.
    Returns (q, rate_bits, n_evals).
    """
    nt = hm.shape[1]
    gm = hm.T @ hm
    ge = he.T @ he
    if nt == 1:
        qs = np.linspace(0.0, budget, resolution + 1)
        f = 0.5 * (np.log2(1.0 + qs * gm[0, 0]) - np.log2(1.0 + qs * ge[0, 0]))
        k = int(np.argmax(f))
        if f[k] <= 0.0:
            return np.zeros((1, 1)), 0.0, f.size
        return np.array([[qs[k]]]), float(f[k]), f.size

    ii, jj = np.meshgrid(np.arange(resolution + 1), np.arange(resolution + 1),
                         indexing="ij")
    keep = (ii + jj) <= resolution
    p1 = budget * ii[keep] / resolution
    p2 = budget * jj[keep] / resolution
    n_th = 4 * resolution
    th = np.pi * np.arange(n_th) / n_th
    c, s = np.cos(th), np.sin(th)

    # q = R(th) diag(p1, p2) R(th)^T, broadcast over (grid point, angle)
    q00 = p1[:, None] * c ** 2 + p2[:, None] * s ** 2
    q01 = (p1 - p2)[:, None] * (c * s)
    q11 = p1[:, None] * s ** 2 + p2[:, None] * c ** 2

    def det2(g):
        # det(I + Q G) expanded for 2x2, exact cofactor form
        m00 = 1.0 + q00 * g[0, 0] + q01 * g[1, 0]
        m01 = q00 * g[0, 1] + q01 * g[1, 1]
        m10 = q01 * g[0, 0] + q11 * g[1, 0]
        m11 = 1.0 + q01 * g[0, 1] + q11 * g[1, 1]
        return m00 * m11 - m01 * m10

    f = 0.5 * (np.log2(det2(gm)) - np.log2(det2(ge)))
    flat = int(np.argmax(f))
    mi, ki = divmod(flat, n_th)
    best = float(f[mi, ki])
    if best <= 0.0:
        return np.zeros((2, 2)), 0.0, f.size
    q = np.array([[q00[mi, ki], q01[mi, ki]],
                  [q01[mi, ki], q11[mi, ki]]])
    return q, best, f.size


def nn_forward(flat, widths, x):
    """Forward pass of an MLP stored as a flat parameter vector.

    widths[0] is the input size, widths[-1] the output size; hidden layers
    use ReLU, the output layer is linear.
    """
    a = x
    off = 0
    n_layers = widths.shape[0] - 1
    for l in range(n_layers):
        n_in = int(widths[l])
        n_out = int(widths[l + 1])
        w = flat[off:off + n_out * n_in].reshape(n_out, n_in)
        off += n_out * n_in
        b = flat[off:off + n_out]
        off += n_out
        a = w @ a + b
        if l < n_layers - 1:
            a = np.maximum(a, 0.0)
    return a


def build_features(h1, h2, c1, c2):
    """Feature map [c1*vec(G), c2*vec(G^T G)] with G = [H1^T H1  H2^T H2].

    vec() is column-major.
    """
    g = np.concatenate([h1.T @ h1, h2.T @ h2], axis=1)
    v1 = g.T.ravel()
    gg = g.T @ g
    v2 = gg.T.ravel()
    return np.concatenate([c1 * v1, c2 * v2])


def unpack_pair(labels, nt, p):
    """Mirror packed upper triangles into (Q1, Q2) and repair feasibility.

    Per-matrix eigenvalue clipping, then a joint trace rescale against the
    shared budget p.
    """
    k = nt * (nt + 1) // 2
    q1 = _mirror(labels[:k], nt)
    q2 = _mirror(labels[k:], nt)
    q1 = project_psd(q1, np.inf)
    q2 = project_psd(q2, np.inf)
    tr = np.trace(q1) + np.trace(q2)
    if tr > p and tr > 0.0:
        f = p / tr
        q1 = q1 * f
        q2 = q2 * f
    return q1, q2


def _mirror(tri, nt):
    q = np.zeros((nt, nt))
    idx = 0
    for i in range(nt):
        for j in range(i, nt):
            q[i, j] = tri[idx]
            q[j, i] = tri[idx]
            idx += 1
    return q
