"""secnoma: secure covariance design for the two-user MIMO-NOMA downlink.

Labels channels with an iterative wiretap-decomposition solver, trains an
MLP to predict covariance pairs from channel features, and evaluates
secrecy rate regions and latency against a GSVD baseline and a grid oracle.
"""

__version__ = "0.1.0"

from .kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
