"""Analytical GSVD-based precoding baseline.

The pair (H1, H2) is jointly factored as H1 = U1 diag(s1) X and
H2 = U2 diag(s2) X with s1_i^2 + s2_i^2 = 1 (CS-normalized generalized
singular values sharing the right factor X). Each user then transmits only
on the directions where its own generalized value dominates, with the split
budget water-filled over those directions. Weak by design when users have
single antennas; its role is to be the analytic reference the learned
precoder must beat.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channels import ChannelPair
from .secrecy_rates import CovariancePair
from .wiretap_solvers import waterfill

_RANK_TOL = 1e-12
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class GsvdFactors:
    sigma1: np.ndarray  # generalized values toward user 1, one per pair
    sigma2: np.ndarray  # counterpart values, sigma1^2 + sigma2^2 = 1
    x: np.ndarray       # common right factor, r x n_t
    u1: np.ndarray      # n1 x r left factor (zero columns where undefined)
    u2: np.ndarray      # n2 x r left factor

    @property
    def rank(self) -> int:
        return self.x.shape[0]

    def reconstruct(self):
        h1 = (self.u1 * self.sigma1) @ self.x
        h2 = (self.u2 * self.sigma2) @ self.x
        return h1, h2


def gsvd(h1, h2) -> GsvdFactors:
    """GSVD of (H1, H2) via pivoted QR of the stacked matrix followed by a
    CS decomposition (SVD of the top orthonormal block).

    Rank-deficient stacks are handled by truncating to the numerical rank;
    zero generalized values show up explicitly as zero sigma entries.
    """
    h1 = np.ascontiguousarray(h1, dtype=np.float64)
    h2 = np.ascontiguousarray(h2, dtype=np.float64)
    if h1.shape[1] != h2.shape[1]:
        raise ValueError("H1 and H2 must have equal column counts")
    n1, nt = h1.shape
    n2 = h2.shape[0]
    k = np.vstack([h1, h2])
    q, r, piv = scipy.linalg.qr(k, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > max(k.shape) * _RANK_TOL * scale)) if scale > 0 else 0
    if rank == 0:
        return GsvdFactors(sigma1=np.zeros(0), sigma2=np.zeros(0),
                           x=np.zeros((0, nt)), u1=np.zeros((n1, 0)),
                           u2=np.zeros((n2, 0)))
    qr_ = q[:, :rank]
    rr = np.zeros((rank, nt))
    rr[:, piv] = r[:rank, :]
    q1b = qr_[:n1, :]
    q2b = qr_[n1:, :]

    u1f, c, wt = np.linalg.svd(q1b, full_matrices=True)
    w = wt.T  # rank x rank
    m = min(n1, rank)
    sigma1 = np.zeros(rank)
    sigma1[:m] = np.clip(c[:m], 0.0, 1.0)
    sigma2 = np.sqrt(np.clip(1.0 - sigma1 ** 2, 0.0, None))
    u1 = np.zeros((n1, rank))
    u1[:, :m] = u1f[:, :m]
    t = q2b @ w
    u2 = np.zeros((n2, rank))
    for i in range(rank):
        if sigma2[i] > 1e-12:
            u2[:, i] = t[:, i] / sigma2[i]
    x = w.T @ rr
    return GsvdFactors(sigma1=sigma1, sigma2=sigma2, x=x, u1=u1, u2=u2)


def _secrecy_waterfill(gm, ge, budget):
    """Water-level allocation for sum_i [log(1+q*gm_i) - log(1+q*ge_i)]
    over q >= 0, sum(q) <= budget, assuming gm > ge elementwise.

    The common-marginal condition gm/(1+q*gm) - ge/(1+q*ge) = nu is a
    quadratic in q per direction; nu is found by bisection.
    """
    gm = np.asarray(gm, dtype=np.float64)
    ge = np.asarray(ge, dtype=np.float64)
    if gm.size == 0 or budget <= 0.0:
        return np.zeros(gm.size)

    def levels(nu):
        q = np.zeros(gm.size)
        for i in range(gm.size):
            a, b = gm[i], ge[i]
            if nu >= a - b:
                continue
            if b < 1e-300:
                q[i] = 1.0 / nu - 1.0 / a
            else:
                disc = nu * nu * (a + b) ** 2 - 4.0 * nu * a * b * (nu - (a - b))
                q[i] = (-nu * (a + b) + np.sqrt(max(disc, 0.0))) / (2.0 * nu * a * b)
        return q

    hi = float(np.max(gm - ge))
    lo = hi * 1e-30
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(levels(mid)) > budget:
            lo = mid
        else:
            hi = mid
    q = levels(hi)
    total = float(np.sum(q))
    if total > budget > 0.0:
        q *= budget / total
    return q


def gsvd_precode(ch: ChannelPair, power: float, alpha: float) -> CovariancePair:
    """Split-budget precoding on the favorable GSVD directions of each user.

    Q1 lives on directions with sigma1 > sigma2 with budget alpha*P, Q2
    symmetrically with (1-alpha)*P. A user whose counterpart channel is
    identically zero degenerates to plain water-filling on its own channel.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    nt = ch.n_t
    b1 = alpha * power
    b2 = (1.0 - alpha) * power
    if not np.any(ch.h2):
        return CovariancePair(q1=waterfill(ch.h1, b1),
                              q2=np.zeros((nt, nt)), power=power)
    if not np.any(ch.h1):
        return CovariancePair(q1=np.zeros((nt, nt)),
                              q2=waterfill(ch.h2, b2), power=power)

    fac = gsvd(ch.h1, ch.h2)
    q1 = np.zeros((nt, nt))
    q2 = np.zeros((nt, nt))
    if fac.rank > 0:
        dirs = np.linalg.pinv(fac.x)  # n_t x r, beam per generalized pair
        norms = np.linalg.norm(dirs, axis=0)
        ok = norms > 1e-12
        g1 = np.zeros(fac.rank)
        g2 = np.zeros(fac.rank)
        g1[ok] = (fac.sigma1[ok] / norms[ok]) ** 2
        g2[ok] = (fac.sigma2[ok] / norms[ok]) ** 2
        s1 = ok & (fac.sigma1 > fac.sigma2 + _TIE_TOL)
        s2 = ok & (fac.sigma2 > fac.sigma1 + _TIE_TOL)
        for sel, gm, ge, budget, q in ((s1, g1, g2, b1, q1),
                                       (s2, g2, g1, b2, q2)):
            idx = np.where(sel)[0]
            if idx.size == 0 or budget <= 0.0:
                continue
            levels = _secrecy_waterfill(gm[idx], ge[idx], budget)
            for i, qi in zip(idx, levels):
                d = dirs[:, i] / norms[i]
                q += qi * np.outer(d, d)
    return CovariancePair(q1=q1, q2=q2, power=power)
