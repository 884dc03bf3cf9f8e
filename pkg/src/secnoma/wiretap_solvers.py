"""Solvers for the MIMO wiretap covariance problem

    max_Q  (1/2) log2 |I + Hm Q Hm^T| - (1/2) log2 |I + He Q He^T|
    s.t.   Q >= 0,  tr(Q) <= budget

This is the engine behind both stages of the power-splitting decomposition.
The production solver is projected gradient ascent; an exhaustive grid
search over the eigenvalue/angle parameterization (n_t <= 2) serves as the
validation oracle. Water-filling covers the eavesdropper-free special case.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, matcore
from .errors import NumericalError, UnsupportedDimensionError

DEFAULT_TOL = 1e-8
# 500 iterations (the original default) stalls short of the grid oracle on
# ill-conditioned near-parallel channels; 5000 covers the observed worst
# case with margin and costs nothing on typical instances.
DEFAULT_MAX_ITERS = 5000


@dataclass(frozen=True)
class WiretapProblem:
    """Legitimate channel, eavesdropper channel, and a trace budget."""

    hm: np.ndarray
    he: np.ndarray
    budget: float

    def __post_init__(self):
        hm = np.ascontiguousarray(self.hm, dtype=np.float64)
        he = np.ascontiguousarray(self.he, dtype=np.float64)
        if hm.ndim != 2 or he.ndim != 2:
            raise ValueError("channel matrices must be 2-D")
        if hm.shape[1] != he.shape[1]:
            raise ValueError(
                f"column counts differ: {hm.shape[1]} vs {he.shape[1]}")
        if not (np.all(np.isfinite(hm)) and np.all(np.isfinite(he))):
            raise ValueError("channel matrices must be finite")
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        object.__setattr__(self, "hm", hm)
        object.__setattr__(self, "he", he)

    @property
    def n_t(self) -> int:
        return self.hm.shape[1]


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = DEFAULT_MAX_ITERS
    step0: float | None = None  # default 0.1 * budget, resolved at solve time
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class SolverReport:
    q: np.ndarray
    rate: float       # bits
    iterations: int
    converged: bool

    def objective_gap(self, problem: WiretapProblem) -> float:
        """|reported rate - objective recomputed from q| (should be ~0)."""
        return abs(self.rate - max(0.0, float(
            kernels.wiretap_objective(np.ascontiguousarray(self.q),
                                      problem.hm, problem.he))))


def waterfill(h, budget: float) -> np.ndarray:
    """Covariance maximizing (1/2) log2 |I + H Q H^T| under tr(Q) <= budget.

    Classic water-filling over the eigenmodes of H^T H: power levels
    p_i = max(0, mu - 1/lambda_i) with sum(p_i) = budget. All-zero gains
    (or a zero budget) give Q = 0.
    """
    h = np.ascontiguousarray(h, dtype=np.float64)
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    n = h.shape[1]
    lam, v = kernels.sym_eigh(np.ascontiguousarray(h.T @ h))
    active = int(np.sum(lam > 1e-12))
    if active == 0 or budget == 0.0:
        return np.zeros((n, n))
    # shrink the active set until every level is nonnegative
    while active > 0:
        mu = (budget + np.sum(1.0 / lam[:active])) / active
        if mu - 1.0 / lam[active - 1] >= 0.0:
            break
        active -= 1
    p = np.zeros(n)
    p[:active] = mu - 1.0 / lam[:active]
    q = (v * p) @ v.T
    return 0.5 * (q + q.T)


def solve_wiretap_pga(problem: WiretapProblem,
                      opts: SolverOptions = None) -> SolverReport:
    """Projected gradient ascent with backtracking line search.

    Steps follow the Euclidean gradient of the log-det difference; each
    candidate is projected back onto {Q >= 0, tr(Q) <= budget}; the step is
    halved until the objective is non-decreasing. Terminates when the
    per-iteration gain drops below tol or max_iters is reached. A final
    objective <= 0 returns Q = 0 with rate 0 (secrecy infeasible).
    """
    if opts is None:
        opts = SolverOptions()
    step0 = opts.step0 if opts.step0 is not None else 0.1 * problem.budget
    q, rate, iters, conv = kernels.pga_solve(
        problem.hm, problem.he, float(problem.budget), float(step0),
        float(opts.tol), int(opts.max_iters))
    return SolverReport(q=q, rate=float(rate), iterations=int(iters),
                        converged=bool(conv))


def solve_wiretap_grid(problem: WiretapProblem,
                       resolution: int = 64) -> SolverReport:
    """Exhaustive-search oracle over eigenvalues (simplex grid on tr <=
    budget) and eigenvector angle (4*resolution points on [0, pi)).
    Only n_t <= 2 is supported; the cost is O(resolution^3) for n_t = 2.
    """
    if problem.n_t > 2:
        raise UnsupportedDimensionError(
            f"grid oracle supports n_t <= 2, got {problem.n_t}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if problem.budget == 0.0:
        n = problem.n_t
        return SolverReport(q=np.zeros((n, n)), rate=0.0, iterations=1,
                            converged=True)
    q, rate, n_evals = kernels.grid_search(
        problem.hm, problem.he, float(problem.budget), int(resolution))
    return SolverReport(q=q, rate=float(rate), iterations=int(n_evals),
                        converged=True)


def check_report(report: SolverReport, problem: WiretapProblem,
                 tol: float = 1e-9) -> SolverReport:
    """Enforce the SolverReport invariants (feasibility + rate consistency)."""
    if matcore.min_eigenvalue(report.q) < -tol:
        raise NumericalError("solver returned a non-PSD covariance")
    if np.trace(report.q) > problem.budget * (1.0 + tol) + tol:
        raise NumericalError("solver exceeded the trace budget")
    if report.objective_gap(problem) > 1e-9:
        raise NumericalError("reported rate disagrees with its covariance")
    return report
