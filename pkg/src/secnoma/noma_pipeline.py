"""Power-splitting decomposition of the two-user secure downlink.

For a splitting factor alpha, user 1 gets budget alpha*P in a wiretap
problem where user 2 plays the eavesdropper. The channels are then
whitened against Q1 and user 2's covariance is solved as a second wiretap
problem with budget (1-alpha)*P. The split is a hard partition: unused
stage-1 power is never reallocated to stage 2.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .channels import ChannelPair
from .secrecy_rates import CovariancePair, RatePair, rate_user1, rate_user2, whiten
from .wiretap_solvers import (SolverOptions, WiretapProblem,
                              solve_wiretap_pga)


@dataclass(frozen=True)
class SplitConfig:
    alpha: float
    power: float
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.power < 0:
            raise ValueError(f"power must be >= 0, got {self.power}")


def split_solve(ch: ChannelPair, cfg: SplitConfig):
    """Run both decomposition stages and evaluate the achieved rates.

    Returns (CovariancePair, RatePair). Rates are always recomputed on the
    ORIGINAL channels through the rate expressions, not taken from the
    solvers' whitened objectives.
    """
    stage1 = WiretapProblem(hm=ch.h1, he=ch.h2, budget=cfg.alpha * cfg.power)
    rep1 = solve_wiretap_pga(stage1, cfg.solver)
    h1w = whiten(ch.h1, rep1.q)
    h2w = whiten(ch.h2, rep1.q)
    stage2 = WiretapProblem(hm=h2w, he=h1w,
                            budget=(1.0 - cfg.alpha) * cfg.power)
    rep2 = solve_wiretap_pga(stage2, cfg.solver)
    pair = CovariancePair(q1=rep1.q, q2=rep2.q, power=cfg.power)
    rates = RatePair(rate_user1(pair.q1, ch), rate_user2(pair, ch))
    return pair, rates


def sweep_alpha(ch: ChannelPair, power: float, alphas,
                solver: SolverOptions = None):
    """split_solve once per alpha, order preserved.

    Returns a list of (alpha, RatePair, CovariancePair).
    """
    solver = solver if solver is not None else SolverOptions()
    out = []
    for alpha in alphas:
        pair, rates = split_solve(ch, SplitConfig(alpha=float(alpha),
                                                  power=power, solver=solver))
        out.append((float(alpha), rates, pair))
    return out


def solve_many(channels, cfg: SplitConfig, threads: int = 1):
    """split_solve over many channels with deterministic output order.

    Each (channel, config) task is independent and the kernels release the
    GIL, so a thread pool gives real parallelism; results come back in
    input order regardless of thread count.
    """
    if threads is None or threads < 1:
        threads = 1
    if threads == 1 or len(channels) < 2:
        return [split_solve(ch, cfg) for ch in channels]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ch: split_solve(ch, cfg), channels))
