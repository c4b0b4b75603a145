"""Finite-m bounds on the regularized relative entropy between two families.

For families A_n, B_n the regularized divergence D_inf(A||B) = lim D(A_n||B_n)/n
is bracketed at every m by

    D_M(A_m||B_m)/m  <=  D_inf(A||B)  <=  D(A_m||B_m)/m,

with width at most 2(d^2+d) log(m+d)/m (d the one-copy dimension).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .errors import PreconditionError, ResourceLimitError
from .solvers import d_sets, dm_alpha_sets, dm_sets, petz_sets, sandwiched_sets
from .divergences import petz


def gap_guarantee(d, m):
    return 2 * (d * d + d) * math.log2(m + d) / m


@dataclass
class AepBounds:
    m: int
    lower: float
    upper: float
    gap_guarantee: float
    heuristic: bool = False
    solver_gap: float = 0.0

    def to_json(self):
        return {"m": self.m, "lower": self.lower, "upper": self.upper,
                "gap_guarantee": self.gap_guarantee, "heuristic": self.heuristic}


@dataclass
class EnvelopeParams:
    C: float
    Cprime: float
    d: int
    epsilon: float

    def __post_init__(self):
        if not self.C > 0:
            raise PreconditionError("C must be positive")
        if not 0 < self.epsilon < 1:
            raise PreconditionError("epsilon must lie in (0,1)")


def _pad(x):
    # outward rounding so that certified endpoints survive floating-point error
    return tol.get("interval_pad") * max(1.0, abs(x))


def _check_size(fam, m):
    if fam.local_dim ** m > tol.get("dim_cap"):
        raise ResourceLimitError(f"{fam.local_dim}^{m} exceeds the dimension cap")


def aep_sandwich(Afam, Bfam, m, check_assumptions=False, dual_start=None):
    """Lower and upper bounds on D_inf(A||B) from the m-copy sets, in bits per copy.

    ``dual_start`` seeds the measured-divergence dual (for instance with the
    tensor product of witnesses from smaller m). With ``check_assumptions``
    the families are first put through the sampled validator and a failure
    marks the row heuristic.
    """
    if m < 1:
        raise PreconditionError("m must be positive")
    _check_size(Afam, m)
    A, B = Afam.at(m), Bfam.at(m)
    heuristic = False
    if check_assumptions and m >= 2:
        from .sets import validate_assumptions
        heuristic = not (validate_assumptions(Afam, 1, m - 1, samples=5).passed
                         and validate_assumptions(Bfam, 1, m - 1, samples=5).passed)
    lo = dm_sets(A, B, dual_start=dual_start)
    hi = d_sets(A, B)
    if lo.infinite or hi.infinite:
        lower = math.inf if lo.infinite else float(lo) / m
        upper = math.inf
    else:
        lower = float(lo) / m - _pad(float(lo) / m)
        upper = float(hi) / m + _pad(float(hi) / m)
    # the lower value is already dual-certified; the upper is attained by members
    heuristic = heuristic or lo.heuristic or hi.heuristic
    row = AepBounds(m, lower, upper, gap_guarantee(Afam.local_dim, m), heuristic,
                    (hi.gap + (lo.gap if np.isfinite(lo.gap) else 0.0)) / m)
    row.dual_witness = lo.dual_witness
    return row


@dataclass
class RegularizedEstimate:
    best_lower: float
    best_upper: float
    table: list = field(default_factory=list)
    lower_monotone: bool = True

    @property
    def interval(self):
        return (self.best_lower, self.best_upper)

    def contains(self, x):
        return self.best_lower <= x <= self.best_upper

    def to_json(self):
        return {"best_lower": self.best_lower, "best_upper": self.best_upper,
                "lower_monotone": self.lower_monotone,
                "table": [row.to_json() for row in self.table]}


def regularized_estimate(Afam, Bfam, m_max):
    """The interval [max_m lower(m), min_m upper(m)] over m = 1..m_max."""
    if m_max < 1:
        raise PreconditionError("m_max must be positive")
    _check_size(Afam, m_max)
    rows = []
    witnesses = {}
    for m in range(1, m_max + 1):
        start = None
        if m >= 2 and 1 in witnesses and (m - 1) in witnesses:
            start = np.kron(witnesses[m - 1], witnesses[1])
        row = aep_sandwich(Afam, Bfam, m, dual_start=start)
        if getattr(row, "dual_witness", None) is not None:
            witnesses[m] = row.dual_witness
        rows.append(row)
    lowers = [r.lower for r in rows]
    mono = all(b >= a - 1e-4 for a, b in zip(lowers, lowers[1:]))
    return RegularizedEstimate(max(lowers), min(r.upper for r in rows), rows, mono)


def envelope_f(n, eps):
    """n^(2/3) log n log^(1/3)(1/eps), logarithms base 2."""
    if n < 2:
        raise PreconditionError("the envelope needs n >= 2")
    if not 0 < eps <= 1:
        raise PreconditionError("eps must lie in (0,1]")
    return n ** (2 / 3) * math.log2(n) * math.log2(1 / eps) ** (1 / 3)


def envelope_bounds(n, interval, params: EnvelopeParams):
    """Second-order window for the n-copy hypothesis-testing divergence:
    [n lo - C' f(n, eps), n hi + C' f(n, 1 - eps)]. C' is supplied by the
    caller, so this is a shape tool rather than a certified bound."""
    lo, hi = interval
    return (n * lo - params.Cprime * envelope_f(n, params.epsilon),
            n * hi + params.Cprime * envelope_f(n, 1 - params.epsilon))


@dataclass
class StarCheck:
    ok: bool
    C: float
    m: int
    worst_alpha: float = None
    worst_value: float = None
    log_trace: float = None
    witness: tuple = None


def assumption_star_check(Afam, Bfam, m, C, grid=9):
    """Check D_{Petz,3/2} of the minimizing pairs of D_{Petz,alpha}(A_m||B_m),
    alpha on a grid of [1/2, 1], and log sup tr(sigma_m) against C m / 4."""
    if not C > 0:
        raise PreconditionError("C must be positive")
    A, B = Afam.at(m), Bfam.at(m)
    bound = C * m / 4
    hb = B.max_linear(np.eye(B.dim))
    log_tr = math.log2(hb.value + hb.gap) if hb.value + hb.gap > 0 else -math.inf
    if log_tr > bound:
        return StarCheck(False, C, m, None, None, log_tr, (None, hb.witness))
    worst = (-math.inf, None, None)
    for alpha in np.linspace(0.5, 1.0, grid):
        if alpha == 1.0:
            res = d_sets(A, B)
        else:
            res = petz_sets(float(alpha), A, B)
        if res.rho_witness is None:
            return StarCheck(False, C, m, float(alpha), math.inf, log_tr, None)
        v = petz(1.5, res.rho_witness, res.sigma_witness)
        val = math.inf if v.infinite else float(v.value)
        if val > worst[0]:
            worst = (val, float(alpha), (res.rho_witness, res.sigma_witness))
        if val > bound:
            return StarCheck(False, C, m, float(alpha), val, log_tr, worst[2])
    return StarCheck(True, C, m, worst[1], worst[0], log_tr, worst[2])


@dataclass
class WindowReport:
    m: int
    alpha: float
    side: str
    per_copy: float
    rhs: float
    interval: tuple
    lower_ok: bool
    upper_ok: bool

    @property
    def holds(self):
        return self.lower_ok and self.upper_ok


def renyi_window_bounds(Afam, Bfam, m, alpha, C, estimate=None, slack=1e-6):
    """Check the alpha-window bounds relating D_inf to the m-copy measured Renyi
    (alpha < 1) or sandwiched (alpha > 1) divergence.

    Below one: 0 <= D_inf - D_{M,alpha}(A_m||B_m)/m <= (1-alpha)(2+C)^2 m + gap(m);
    above one: 0 <= D_alpha(A_m||B_m)/m - D_inf <= (alpha-1)(2+C)^2 m + gap(m).
    D_inf is replaced by its certified interval, and each inequality is
    accepted if some point of the interval satisfies it.
    """
    if m < 2:
        raise PreconditionError("the window bounds need m >= 2")
    width = 1 / ((2 + C) * m)
    if not (1 - width < alpha < 1 or 1 < alpha < 1 + width):
        raise PreconditionError(f"alpha={alpha} lies outside the window of half-width {width:.4g}")
    star = assumption_star_check(Afam, Bfam, m, C)
    if not star.ok:
        raise PreconditionError(
            f"constant C={C} violates the assumption at alpha={star.worst_alpha} "
            f"(value {star.worst_value}, log trace {star.log_trace})")
    est = estimate or regularized_estimate(Afam, Bfam, m)
    lo, hi = est.interval
    extra = gap_guarantee(Afam.local_dim, m)
    A, B = Afam.at(m), Bfam.at(m)
    if alpha < 1:
        x = float(dm_alpha_sets(alpha, A, B)) / m
        rhs = (1 - alpha) * (2 + C) ** 2 * m + extra
        # need some D in [lo, hi] with x <= D <= x + rhs
        lower_ok = hi >= x - slack
        upper_ok = lo <= x + rhs + slack
        side = "below"
    else:
        x = float(sandwiched_sets(alpha, A, B)) / m
        rhs = (alpha - 1) * (2 + C) ** 2 * m + extra
        lower_ok = lo <= x + slack
        upper_ok = hi >= x - rhs - slack
        side = "above"
    return WindowReport(m, alpha, side, x, rhs, (lo, hi), lower_ok, upper_ok)
