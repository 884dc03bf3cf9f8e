"""Feature engineering, label packing, and dataset persistence.

The network input is built from the Gram matrices H_i^T H_i rather than the
raw channels (the log-det objective only depends on them, and their size is
independent of the receive antenna counts):

    v = [0.05 * vec([G1 G2]),  0.002 * vec([G1 G2]^T [G1 G2])]

with column-major vec and G_i = H_i^T H_i. The scale constants put ~99% of
feature entries in [-1, 1] for N(0,1) channels. Labels are the upper
triangular entries of Q1 then Q2, row-major.

Dataset files are a JSON header line followed by little-endian float64
records [features | labels | R1 | R2]; a CSV export exists for inspection.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channels import ChannelPair, sample_channel_pair
from .noma_pipeline import SplitConfig, split_solve
from .secrecy_rates import CovariancePair, RatePair
from .wiretap_solvers import SolverOptions

SCALE_V1 = 0.05
SCALE_V2 = 0.002
FEATURE_SCALING_VERSION = 1
DATASET_FORMAT = "secnoma-dataset"
DATASET_VERSION = 1


def feature_dim(n_t: int) -> int:
    return 6 * n_t * n_t


def label_dim(n_t: int) -> int:
    return n_t * (n_t + 1)


def build_input(ch: ChannelPair) -> np.ndarray:
    """Feature vector of length 6*n_t^2 for one channel pair."""
    return kernels.build_features(ch.h1, ch.h2, SCALE_V1, SCALE_V2)


def pack_labels(pair: CovariancePair) -> np.ndarray:
    """Upper-triangular entries of Q1 then Q2, row-major."""
    iu = np.triu_indices(pair.n_t)
    return np.concatenate([pair.q1[iu], pair.q2[iu]])


def _infer_nt(n_labels: int) -> int:
    nt = int((math.isqrt(1 + 4 * n_labels) - 1) // 2)
    if nt < 1 or nt * (nt + 1) != n_labels:
        raise ValueError(f"label vector length {n_labels} is not n_t*(n_t+1)")
    return nt


def unpack_labels(labels, power: float) -> CovariancePair:
    """Mirror a packed label vector back into a feasible CovariancePair.

    Feasibility repair: eigenvalue clipping per matrix, then both matrices
    are scaled by the common factor when the summed trace exceeds the
    budget (the constraint binds the sum, not each matrix).
    """
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    if labels.ndim != 1:
        raise ValueError("label vector must be 1-D")
    nt = _infer_nt(labels.size)
    q1, q2 = kernels.unpack_pair(labels, nt, float(power))
    return CovariancePair(q1=q1, q2=q2, power=float(power))


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    labels: np.ndarray
    rates: RatePair
    alpha: float
    power: float


@dataclass
class Dataset:
    n_t: int
    n1: int
    n2: int
    alpha: float
    power: float
    seed: int
    features: np.ndarray  # (count, 6*n_t^2)
    labels: np.ndarray    # (count, n_t*(n_t+1))
    rates: np.ndarray     # (count, 2)
    version: int = DATASET_VERSION

    @property
    def count(self) -> int:
        return self.features.shape[0]

    def header(self) -> dict:
        return {
            "format": DATASET_FORMAT,
            "version": self.version,
            "n_t": self.n_t,
            "n1": self.n1,
            "n2": self.n2,
            "alpha": self.alpha,
            "P": self.power,
            "seed": self.seed,
            "count": self.count,
            "feature_dim": feature_dim(self.n_t),
            "label_dim": label_dim(self.n_t),
        }

    def sample(self, i: int) -> LabeledSample:
        return LabeledSample(features=self.features[i], labels=self.labels[i],
                             rates=RatePair(*self.rates[i]), alpha=self.alpha,
                             power=self.power)

    def context(self) -> tuple:
        return (self.n_t, self.alpha, self.power)


def generate_dataset(count: int, alpha: float, power: float, dims,
                     seed: int, path: str = None, threads: int = 1,
                     solver: SolverOptions = None) -> Dataset:
    """Label `count` freshly sampled channels with the decomposition solver.

    Sample i uses the independent substream (seed, i), so output is
    byte-identical across runs and worker counts.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    n_t, n1, n2 = dims
    cfg = SplitConfig(alpha=alpha, power=power,
                      solver=solver if solver is not None else SolverOptions())

    def labeled(i):
        ch = sample_channel_pair(n_t, n1, n2, seed, index=i)
        pair, rates = split_solve(ch, cfg)
        return build_input(ch), pack_labels(pair), rates

    if threads is None or threads < 1:
        threads = 1
    if threads == 1:
        rows = [labeled(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(labeled, range(count)))

    ds = Dataset(
        n_t=n_t, n1=n1, n2=n2, alpha=float(alpha), power=float(power),
        seed=int(seed),
        features=np.stack([r[0] for r in rows]),
        labels=np.stack([r[1] for r in rows]),
        rates=np.array([[r[2].r1, r[2].r2] for r in rows]),
    )
    if path is not None:
        save_dataset(ds, path)
    return ds


def save_dataset(ds: Dataset, path: str):
    header = json.dumps(ds.header(), sort_keys=True) + "\n"
    body = np.hstack([ds.features, ds.labels, ds.rates])
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            f.write(header.encode("utf-8"))
            f.write(np.ascontiguousarray(body, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_dataset(path: str) -> Dataset:
    with open(path, "rb") as f:
        header_line = f.readline()
        blob = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"{path}: not a dataset file ({e})") from None
    if header.get("format") != DATASET_FORMAT:
        raise ValueError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version") != DATASET_VERSION:
        raise ValueError(f"{path}: unsupported version {header.get('version')}")
    count = header["count"]
    fdim = header["feature_dim"]
    ldim = header["label_dim"]
    row = fdim + ldim + 2
    expected = count * row * 8
    if len(blob) != expected:
        raise ValueError(
            f"{path}: payload is {len(blob)} bytes, expected {expected} "
            f"({count} records of {row} float64)")
    body = np.frombuffer(blob, dtype="<f8").reshape(count, row)
    return Dataset(
        n_t=header["n_t"], n1=header["n1"], n2=header["n2"],
        alpha=header["alpha"], power=header["P"], seed=header["seed"],
        features=body[:, :fdim].copy(),
        labels=body[:, fdim:fdim + ldim].copy(),
        rates=body[:, fdim + ldim:].copy(),
        version=header["version"],
    )


def export_csv(ds: Dataset, path: str):
    """One row per sample; lossless at float64 via repr-style formatting."""
    fdim = feature_dim(ds.n_t)
    ldim = label_dim(ds.n_t)
    cols = ([f"feat_{i:03d}" for i in range(fdim)]
            + [f"label_{i:03d}" for i in range(ldim)] + ["R1", "R2"])
    body = np.hstack([ds.features, ds.labels, ds.rates])
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(",".join(cols) + "\n")
            for row in body:
                f.write(",".join(f"{x:.17g}" for x in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
