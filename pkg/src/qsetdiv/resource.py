"""Composite hypothesis testing tables and resource-theory quantities."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .aep import regularized_estimate
from .divergences import TestOperator, _solve, beta_and_dhypo, petz, sandwiched
from .errors import ConfigurationError, PreconditionError, UndefinedRateError
from .infinity import INF
from .linalg import as_array, from_eig, hermitize, trace_norm
from .sampling import rng_from
from .solvers import dhypo_sets, dmax_sets, dmax_smoothed_to_set, petz_sets, sandwiched_sets


# --- Stein tables -----------------------------------------------------------

@dataclass
class SteinRow:
    n: int
    dh_per_n: float
    floor: float
    ceiling: float

    @property
    def within(self):
        return self.floor - 1e-4 <= self.dh_per_n <= self.ceiling + 1e-4

    def to_json(self):
        return {"n": self.n, "dh_per_n": self.dh_per_n, "floor": self.floor,
                "ceiling": self.ceiling, "within": self.within}


def _both_singletons(A, B):
    return A.kind == "singleton" and B.kind == "singleton"


def _iid_bases(Afam, Bfam):
    """Single-copy states when both families are i.i.d. singletons, else None."""
    bases = [getattr(f, "base", None) for f in (Afam, Bfam)]
    if all(b is not None and b.kind == "singleton" for b in bases):
        return bases[0].state, bases[1].state
    return None


def stein_row(A, B, eps, n, iid=None):
    """One row: D_H,eps(A_n||B_n)/n with the one-shot Renyi envelope around it.

    floor   = [D_Petz,a(A_n||B_n) + a/(a-1) log(1/eps)] / n,       a  = 1 - 1/sqrt(n)
    ceiling = [D_Sand,a'(A_n||B_n) + a'/(a'-1) log(1/(1-eps))] / n, a' = 1 + 1/sqrt(n)

    At n = 1 the lower order is clamped to ``stein_alpha_min``. With ``iid``
    (the single-copy pair) the Renyi terms use additivity, n D(rho||sigma),
    which keeps small eigenvalues of sigma^n above the support floor.
    """
    a = max(1 - 1 / math.sqrt(n), tol.get("stein_alpha_min"))
    a2 = 1 + 1 / math.sqrt(n)
    if iid is not None:
        dh = beta_and_dhypo(eps, A.state, B.state).dh
        lo = n * float(petz(a, *iid).value)
        hi = n * float(sandwiched(a2, *iid).value)
    elif _both_singletons(A, B):
        dh = beta_and_dhypo(eps, A.state, B.state).dh
        lo, hi = petz(a, A.state, B.state).value, sandwiched(a2, A.state, B.state).value
    else:
        dh = dhypo_sets(eps, A, B).value
        lo, hi = petz_sets(a, A, B).value, sandwiched_sets(a2, A, B).value
    floor = (float(lo) + a / (a - 1) * math.log2(1 / eps)) / n
    ceiling = (float(hi) + a2 / (a2 - 1) * math.log2(1 / (1 - eps))) / n
    return SteinRow(n, float(dh) / n, floor, ceiling)


def stein_table(Afam, Bfam, eps, n_max):
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0,1)")
    if n_max < 1:
        raise PreconditionError("n_max must be positive")
    iid = _iid_bases(Afam, Bfam)
    return [stein_row(Afam.at(n), Bfam.at(n), eps, n, iid) for n in range(1, n_max + 1)]


def stein_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "dh_per_n", "floor", "ceiling"])
    for r in rows:
        w.writerow([r.n, f"{r.dh_per_n:.10f}", f"{r.floor:.10f}", f"{r.ceiling:.10f}"])
    return buf.getvalue()


# --- robustness and protocols ----------------------------------------------

def global_robustness(rho, F):
    """2^{D_max(rho||F)} - 1: the least weight of an arbitrary state that,
    mixed into rho, lands in F."""
    res = dmax_sets(hermitize(as_array(rho)), F)
    if res.infinite:
        return INF
    return max(2.0 ** float(res) - 1, 0.0)


@dataclass
class ProtocolMap:
    """X -> tr[M X] target + tr[(I - M) X] free_target."""

    M: TestOperator
    target: np.ndarray
    free_target: np.ndarray
    heuristic: bool = False
    details: dict = field(default_factory=dict)

    def __call__(self, X):
        X = as_array(X)
        t = float(np.trace(self.M.M @ X).real)
        return t * self.target + (float(np.trace(X).real) - t) * self.free_target


def _members(S, budget, rng):
    """Points of S at which convex functions of the member attain their sup:
    all generators when the extreme points are listed, else samples."""
    if S.kind in ("singleton", "hull"):
        return list(S.generators), True
    if S.kind == "incoherent":
        return [np.diag(e).astype(complex) for e in np.eye(S.dim)], True
    pts = [S.canonical_member()] + [S.sample(rng) for _ in range(max(budget - 1, 0))]
    return pts, False


def _free_target(F):
    mixed = np.eye(F.dim, dtype=complex) / F.dim
    if F.contains(mixed):
        return mixed
    cand = F.canonical_member()
    if cand is not None and F.contains(cand):
        return cand
    raise ConfigurationError(f"no free state found for the {F.kind} set by the canonical rule")


def build_rng_protocol(Afam, Ffam, Bfam, n, m, eps, delta=0.0, seed=0, budget=8):
    """Measure-and-prepare map taking n copies from A to m copies near B.

    The test is optimal for distinguishing A_n from F_n at type-I level
    eps/2. On acceptance the map prepares the state of least max-relative
    entropy to F_m within trace distance eps/2 of the hardest member of B_m;
    on rejection it prepares a free state. ``delta`` is recorded as the
    target robustness level for the audit.
    """
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0,1)")
    An, Fn = Afam.at(n), Ffam.at(n)
    Bm, Fm = Bfam.at(m), Ffam.at(m)
    test = dhypo_sets(eps / 2, An, Fn)
    M = test.dual_witness
    type1 = An.max_linear(np.eye(An.dim) - M)
    type2 = Fn.max_linear(M)
    candidates, exact = _members(Bm, budget, rng_from(seed))
    best = None
    for sigma in candidates:
        res = dmax_smoothed_to_set(eps / 2, sigma, Fm)
        if best is None or float(res) > float(best[1]):
            best = (sigma, res)
    sigma_star, smooth = best
    target = hermitize(smooth.rho_witness)
    return ProtocolMap(TestOperator(M, type1.value + type1.gap, type2.value + type2.gap),
                       target, _free_target(Fm), heuristic=not exact,
                       details={"sigma_star": sigma_star, "dmax_target": float(smooth),
                                "delta": delta, "dh": float(test)})


def _distance_to_set(X, B):
    if B.kind == "singleton":
        return trace_norm(X - B.state) / 2
    import cvxpy as cp

    d = B.dim
    Sigma = cp.Variable((d, d), hermitian=True)
    P = cp.Variable((d, d), hermitian=True)
    N = cp.Variable((d, d), hermitian=True)
    cons = [P >> 0, N >> 0, X - Sigma == P - N] + B.cone_constraints(cp, Sigma, 1.0)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(P + N)) / 2), cons)
    _solve(prob)
    S = hermitize(Sigma.value)
    w, U = np.linalg.eigh(S)
    S = from_eig(np.clip(w, 0, None), U)
    # report the distance to the rounded member, which is an upper bound
    return trace_norm(X - S / np.trace(S).real) / 2


@dataclass
class AuditReport:
    trans_error: float
    rng_violation: float
    heuristic: bool

    def to_json(self):
        return {"trans_error": self.trans_error, "rng_violation": float(self.rng_violation),
                "heuristic": self.heuristic}


def protocol_audit(P: ProtocolMap, A, B, Fn, Fm=None, sample_budget=8, seed=0):
    """Worst transformation error over A and worst robustness of the image of F.

    ``A`` and ``Fn`` live on the input space, ``B`` and ``Fm`` (default: Fn)
    on the output space. Both functions audited are convex in the input, so
    listing extreme points gives exact suprema; sampled sets mark the
    report heuristic.
    """
    Fm = Fn if Fm is None else Fm
    rng = rng_from(seed)
    rhos, exact_a = _members(A, sample_budget, rng)
    omegas, exact_f = _members(Fn, sample_budget, rng)
    trans = max(_distance_to_set(P(r), B) for r in rhos)
    rng_v = max(float(global_robustness(P(w), Fm)) for w in omegas)
    return AuditReport(trans, rng_v, P.heuristic or not (exact_a and exact_f))


# --- rates ------------------------------------------------------------------

@dataclass
class RateBounds:
    numerator: tuple
    denominator: tuple
    rate_interval: tuple

    def contains(self, r):
        return self.rate_interval[0] <= r <= self.rate_interval[1]

    def to_json(self):
        return {"numerator": list(self.numerator), "denominator": list(self.denominator),
                "rate_interval": list(self.rate_interval)}


def rate_bounds(Afam, Bfam, Ffam, m_max, Ffam_b=None):
    """Interval for the asymptotic conversion rate from A to B under
    resource non-generating maps, D_inf(A||F) / D_inf(B||F).

    ``Ffam_b`` gives the free family on B's space when it differs from A's.
    """
    num = regularized_estimate(Afam, Ffam, m_max).interval
    den = regularized_estimate(Bfam, Ffam_b or Ffam, m_max).interval
    if not den[0] > 0:
        raise UndefinedRateError(f"the denominator interval {den} is not bounded away from 0")
    lo = max(num[0], 0.0) / den[1]
    hi = num[1] / den[0]
    return RateBounds(num, den, (lo, hi))
