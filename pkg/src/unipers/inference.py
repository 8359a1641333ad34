"""Per-cycle significance tests and the threshold search for infinite cycles."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import universality as U
from .errors import DomainError, InsufficientDataError, NonTerminationError, ParameterError

EARLIEST = "earliest"
LATEST = "latest"
GUARD_FACTOR = 1.25


def p_value(l):
    """Survival function of the LGumbel law at ``l``."""
    return U.lgumbel_sf(l) if np.ndim(l) else float(U.lgumbel_sf(l))


def pi_min(x, A, B) -> float:
    """Smallest π whose p-value is below ``x``."""
    if not 0 < x < 1:
        raise DomainError(f"pi_min needs 0 < x < 1, got {x}")
    inner = (math.log(math.log(1 / x)) - B) / A
    try:
        return math.exp(math.exp(inner))
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CycleRecord:
    birth: float
    death: float
    pi: float
    l: float
    p: float
    significant: bool

    def as_dict(self):
        return {"birth": self.birth, "death": "inf" if math.isinf(self.death) else self.death,
                "pi": self.pi, "l": self.l, "p": self.p, "significant": self.significant}


@dataclass(frozen=True)
class TestReport:
    cycles: list
    alpha: float
    m: int
    A_used: float
    B_used: float
    correction: str = "bonferroni"
    trace: list = field(default_factory=list)

    __test__ = False     # not a pytest class

    @property
    def significant(self):
        return [c for c in self.cycles if c.significant]

    @property
    def n_significant(self):
        return sum(c.significant for c in self.cycles)

    def as_dict(self):
        return {"alpha": self.alpha, "m": self.m, "A": self.A_used, "B": self.B_used,
                "cycles": [c.as_dict() for c in self.cycles], "trace": self.trace}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=2, default=U._json_default)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def signal_cycles(dgm, complex_type: str = None, alpha: float = 0.05, B=None,
                  allow_infinite: bool = False) -> TestReport:
    """Bonferroni-corrected per-cycle test of a diagram.

    ``B`` defaults to the value fitted on the finite pairs.  With
    ``allow_infinite`` each infinite cycle is tested with the lower bound
    ``τ/b`` on its π-value, so its p-value is an upper bound and a
    significant verdict is conclusive.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    ct = complex_type or dgm.complex_type
    A = U.a_constant(ct)
    m = len(dgm)
    if m < 2:
        raise InsufficientDataError(f"need a diagram with at least 2 cycles, got {m}")
    pis = U.pi_values(dgm, exclude_infinite=allow_infinite)
    if B is None:
        B = U.l_values(pis, ct).B
    thresh = alpha / m
    # the threshold search stops with tau = b * pi_min exactly, so an infinite
    # cycle is decided by tau/b >= pi_min up to round-off
    pm = pi_min(thresh, A, B) * (1 - 1e-12)
    cycles = []
    for b, d in zip(dgm.births.tolist(), dgm.deaths.tolist()):
        pi = d / b if math.isfinite(d) else dgm.tau / b
        l = A * math.log(math.log(pi)) + B if pi > 1 else -math.inf
        p = float(U.lgumbel_sf(l))
        sig = p < thresh if math.isfinite(d) else pi >= pm
        cycles.append(CycleRecord(b, d, pi, l, p, sig))
    order = sorted(range(len(cycles)), key=lambda i: (-cycles[i].l, i))
    return TestReport([cycles[i] for i in order], alpha, m, A, float(B))


@dataclass(frozen=True)
class ThresholdTrace:
    iterations: list        # dicts {tau, m, I_size, B, pi_min, next_tau}
    final_tau: float
    policy: str

    def as_list(self):
        return list(self.iterations)


def threshold_search(cloud, complex_type: str, k: int = 1, alpha: float = 0.05, tau0: float = None,
                     policy: str = EARLIEST, max_iter: int = 1000, diagram_fn=None):
    """Raise the truncation radius until every infinite cycle is decided.

    Each round computes ``dgm_k(τ)``, refits ``B`` on its finite pairs and
    collects the births of infinite cycles with ``τ/b < π_min(α/|D|)``; the
    next radius is ``min(I)·π_min`` (``max(I)`` for the latest policy).
    Returns ``(final diagram, TestReport, ThresholdTrace)``.
    """
    from .filtration import enclosing_radius
    from .persistence import compute_diagram

    if policy not in (EARLIEST, LATEST):
        raise ParameterError(f"policy must be {EARLIEST!r} or {LATEST!r}, got {policy!r}")
    if tau0 is None or not tau0 > 0:
        raise ParameterError(f"tau0 must be positive, got {tau0}")
    ct = complex_type.lower()
    A = U.a_constant(ct)
    limit = GUARD_FACTOR * enclosing_radius(cloud)
    if diagram_fn is None:
        def diagram_fn(t):
            return compute_diagram(cloud, ct, k, t)
    tau = float(tau0)
    iters = []
    for _ in range(max_iter):
        D = diagram_fn(tau)
        m = len(D)
        fin = np.isfinite(D.deaths)
        if np.count_nonzero(fin) < 2:
            raise InsufficientDataError(f"dgm_{k}({tau:g}) has fewer than 2 finite cycles; raise tau0")
        B = U.l_values(U.pi_values(D, exclude_infinite=True), ct).B
        pm = pi_min(alpha / m, A, B)
        inf_births = D.births[~fin]
        I = inf_births[tau / inf_births < pm]
        if len(I):
            pick = I.min() if policy == EARLIEST else I.max()
            nxt = float(pick * pm)
        else:
            nxt = tau
        iters.append({"tau": tau, "m": m, "I_size": int(len(I)), "B": B, "pi_min": pm,
                      "next_tau": nxt})
        if not len(I):
            report = signal_cycles(D, ct, alpha, B=B, allow_infinite=True)
            report = TestReport(report.cycles, report.alpha, report.m, report.A_used, report.B_used,
                                trace=[{k_: v for k_, v in it.items() if k_ in ("tau", "m", "I_size", "B")}
                                       for it in iters])
            return D, report, ThresholdTrace(iters, tau, policy)
        if nxt > limit:
            raise NonTerminationError(
                f"threshold search would raise tau to {nxt:g}, beyond {GUARD_FACTOR} x enclosing radius "
                f"({limit:g}); {len(I)} undecided infinite cycle(s) with births {np.sort(I)[:5].tolist()}")
        tau = nxt
    raise NonTerminationError(f"threshold search did not settle within {max_iter} iterations")
