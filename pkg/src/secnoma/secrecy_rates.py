"""Secrecy rate pair evaluation and the receiver-whitening transform.

Rates are in bits per real channel use (base-2 logs, factor 1/2 from the
real-valued signal model) and clamp at zero: a negative evaluated value
means "transmit nothing".
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels, matcore
from .channels import ChannelPair
from .errors import NumericalError

PSD_TOL = 1e-9
TRACE_TOL = 1e-9


class RatePair(NamedTuple):
    r1: float
    r2: float


@dataclass(frozen=True)
class CovariancePair:
    """Transmit covariances (Q1, Q2) under a shared trace budget."""

    q1: np.ndarray
    q2: np.ndarray
    power: float

    def __post_init__(self):
        q1 = matcore.symmetrize(self.q1)
        q2 = matcore.symmetrize(self.q2)
        if q1.shape != q2.shape:
            raise ValueError(f"Q1/Q2 shapes differ: {q1.shape} vs {q2.shape}")
        if self.power < 0:
            raise ValueError(f"power budget must be >= 0, got {self.power}")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)

    @property
    def n_t(self) -> int:
        return self.q1.shape[0]

    def trace_sum(self) -> float:
        return float(np.trace(self.q1) + np.trace(self.q2))

    def validate(self):
        """Check PSD (min eig >= -1e-9) and tr(Q1)+tr(Q2) <= P(1+1e-9)."""
        m1 = matcore.min_eigenvalue(self.q1)
        m2 = matcore.min_eigenvalue(self.q2)
        if min(m1, m2) < -PSD_TOL:
            raise NumericalError(
                f"covariance not PSD: min eigenvalue {min(m1, m2):.3e}")
        if self.trace_sum() > self.power * (1.0 + TRACE_TOL) + TRACE_TOL:
            raise NumericalError(
                f"trace sum {self.trace_sum():.6f} exceeds budget {self.power}")
        return self


def _check_psd(q, name):
    q = matcore.symmetrize(q)
    if matcore.min_eigenvalue(q) < -PSD_TOL:
        raise NumericalError(f"{name} must be PSD")
    return q


def _half_logdet(h, q):
    """(1/2) log2 |I + H Q H^T|."""
    val, ok = kernels.logdet2_pd(
        np.ascontiguousarray(np.eye(h.shape[0]) + h @ q @ h.T))
    if not ok:
        raise NumericalError("I + H Q H^T not positive definite")
    return 0.5 * val


def rate_user1(q1, ch: ChannelPair) -> float:
    """Secrecy rate of user 1: user 2 acts as the eavesdropper on Q1."""
    q1 = _check_psd(q1, "Q1")
    r = _half_logdet(ch.h1, q1) - _half_logdet(ch.h2, q1)
    return max(0.0, float(r))


def rate_user2(pair: CovariancePair, ch: ChannelPair) -> float:
    """Secrecy rate of user 2 given the superimposed transmission.

    Evaluated through the four-log-det expansion of the rate expression
    (no explicit inversion of I + H2 Q1 H2^T), which is algebraically
    identical and numerically stabler.
    """
    q1 = _check_psd(pair.q1, "Q1")
    q2 = _check_psd(pair.q2, "Q2")
    qs = q1 + q2
    r = (_half_logdet(ch.h2, qs) - _half_logdet(ch.h2, q1)
         - _half_logdet(ch.h1, qs) + _half_logdet(ch.h1, q1))
    return max(0.0, float(r))


def rate_pair(pair: CovariancePair, ch: ChannelPair) -> RatePair:
    return RatePair(rate_user1(pair.q1, ch), rate_user2(pair, ch))


def whiten(h, q1) -> np.ndarray:
    """Whitened channel H' = Lambda^{-1/2} V^T H, with V Lambda V^T the
    eigendecomposition of I + H Q1 H^T. Same shape as H."""
    h = np.ascontiguousarray(h, dtype=np.float64)
    q1 = matcore.symmetrize(q1)
    a = np.eye(h.shape[0]) + h @ q1 @ h.T
    w, v = kernels.sym_eigh(np.ascontiguousarray(a))
    if w[-1] <= 0.0:
        raise NumericalError("whitening matrix not positive definite")
    return (v / np.sqrt(w)).T @ h
