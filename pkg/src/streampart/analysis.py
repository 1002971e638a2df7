"""Closed-form bounds and thresholds for greedy streaming partitioning.

Every logarithm inside a threshold is natural unless ``log_base`` is given.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

# ball count 2**x for lambda = 2 and initial separation 0.1, as quoted
BALL_CONSTANT = 9127
# exponent on (0.1 k) for lambda = 2, rounded as quoted
K_EXPONENT = 2.4


def _log(x, base=None):
    return math.log(x) if base is None else math.log(x, base)


def expected_no_edge_arrivals(n):
    """Expected number of arrivals with no earlier neighbour, random-order cycle.

    Evaluates sum_{t=1..n} ((n-t)/n) * ((n-t-1)/(n-1)), the form used in the
    lower-bound argument. It equals (n - 2) / 3. With the exact conditional
    denominators (n-1)(n-2) the expectation is n / 3, see
    ``exact_no_edge_arrivals``.
    """
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    s = np.arange(n - 1, -1, -1, dtype=np.float64)  # n - t for t = 1..n
    return float(np.sum(s * (s - 1)) / (n * (n - 1.0)))


def exact_no_edge_arrivals(n):
    """Exact expectation for a uniformly random order of an n-cycle: n / 3."""
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    s = np.arange(n - 1, -1, -1, dtype=np.float64)
    return float(np.sum(s * (s - 1)) / ((n - 1.0) * (n - 2.0)))


def _log_upper_tail(j, a, b):
    """log of sum_{i > j/2} C(j, i) a^i b^(j-i)."""
    i = np.arange(j // 2 + 1, j + 1)
    logc = gammaln(j + 1) - gammaln(i + 1) - gammaln(j - i + 1)
    with np.errstate(divide="ignore"):
        terms = logc + i * np.log(a) + (j - i) * np.log(b)
    return float(logsumexp(terms))


def _check_lemma2(j, delta):
    if j < 1:
        raise ValueError("j must be >= 1")
    if not 0.0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 1/2)")


def lemma2_exact_prob(j, delta):
    """Pr[A > B] where A ~ Binomial(j, 1/2 + delta) and B = j - A."""
    _check_lemma2(j, delta)
    return math.exp(_log_upper_tail(j, 0.5 + delta, 0.5 - delta))


def lemma2_tie_excluded(j, delta):
    """Pr[A > B | A != B]."""
    _check_lemma2(j, delta)
    win = _log_upper_tail(j, 0.5 + delta, 0.5 - delta)
    lose = _log_upper_tail(j, 0.5 - delta, 0.5 + delta)
    return 1.0 / (1.0 + math.exp(lose - win))


def lemma2_lower_bound(j, delta):
    """Urn-style bound a^h / (a^h + b^h) with h = floor(j/2) + 1.

    Matches the tie-excluded odds for j <= 2. For larger j the true odds can
    fall below it; the guaranteed exponent is 2 for even j and 1 for odd j
    (see ``lemma2_guaranteed_exponent``).
    """
    if delta == 0.5:
        raise ValueError("delta = 1/2 is degenerate")
    _check_lemma2(j, delta)
    h = j // 2 + 1
    a, b = 0.5 + delta, 0.5 - delta
    return 1.0 / (1.0 + (b / a) ** h)


def lemma2_guaranteed_exponent(j):
    """Largest h with Pr[A>B]/Pr[B>A] >= (a/b)^h for every delta."""
    return 1 if j % 2 else 2


@dataclass
class RegimeCheck:
    n: int
    k: int
    l: int
    p: float
    q: float
    cluster_size: int
    n0: float
    verdicts: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    log_base: str = "e"

    @property
    def ok(self):
        return all(self.verdicts.values())

    def as_dict(self):
        return {
            "inputs": {"n": self.n, "k": self.k, "l": self.l, "p": self.p, "q": self.q,
                       "cluster_size": self.cluster_size, "n0": self.n0},
            "log_base": self.log_base,
            "verdicts": dict(self.verdicts),
            "margins": dict(self.margins),
            "ok": self.ok,
        }


def regime_check(n, k, l, p, q, n0=1, log_base=None):
    """Evaluate the four recovery conditions for an equal-size planted partition.

    Margins are slacks: positive exactly when the condition holds.

    a  density      p > 2 log(n) / |C|
    b  separation   p > 3 (k + sqrt(k) + 1) l q
    c  clusters     l > k log(k)
    d  noise        q <= appendix_q_bound(k, l, n0)
    """
    if n % l:
        raise ValueError(f"n={n} is not divisible into {l} equal clusters")
    size = n // l
    margins = {
        "density": p - 2 * _log(n, log_base) / size,
        "separation": p - 3 * (k + math.sqrt(k) + 1) * l * q,
        "clusters": l - k * _log(k, log_base),
        "noise": appendix_q_bound(k, l, n0, log_base) - q,
    }
    verdicts = {name: m > 0 for name, m in margins.items()}
    verdicts["noise"] = margins["noise"] >= 0
    return RegimeCheck(n, k, l, p, q, size, n0, verdicts, margins,
                       "e" if log_base is None else str(log_base))


@dataclass(frozen=True)
class ConvergenceParams:
    lam: float
    epsilon0: float
    delta: float = 0.1
    n0: float = 1.0
    k: int = 2
    l: int = 1

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("lambda must exceed 1")
        if not 0 < self.epsilon0 < 1:
            raise ValueError("epsilon0 must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.n0 <= 0:
            raise ValueError("n0 must be positive")


def dominance_exponents(params):
    """``(x, z)``: doublings to reach all-but-0.1 and then all-but-delta dominance.

    Neither phase can take a negative number of doublings, so both are
    clipped at 0.
    """
    lam = params.lam
    x = math.log(0.4 / params.epsilon0) / math.log(1 + (lam - 1) / (5 + 4 * (lam - 1)))
    z = math.log(0.1 / params.delta) / math.log(2 * lam / (lam + 1))
    return max(x, 0.0), max(z, 0.0)


def effective_n0(n0, k, l, log_base=None):
    """n0 + 2 log k + log l, the union-bound-adjusted initial ball count."""
    return n0 + 2 * _log(k, log_base) + _log(l, log_base)


def convergence_balls(params, mode="general", log_base=None):
    """Balls needed before one bin is all-but-delta dominant.

    ``mode="general"``: 2**(x + z) * n0.
    ``mode="specialized"``: (2 lam)**(1/log2(5 lam/(1 + 4 lam)))
    * (0.1 k)**(1/log2(2 lam/(lam + 1))) * (n0 + 2 log k + log l), which
    takes epsilon0 = 1/(5 lam) and delta = 1/k.
    """
    lam = params.lam
    if mode == "general":
        x, z = dominance_exponents(params)
        return 2.0 ** (x + z) * params.n0
    if mode == "specialized":
        first = (2 * lam) ** (1 / math.log2(5 * lam / (1 + 4 * lam)))
        second = (0.1 * params.k) ** (1 / math.log2(2 * lam / (lam + 1)))
        return first * second * effective_n0(params.n0, params.k, params.l, log_base)
    raise ValueError(f"unknown mode {mode!r}")


def gamma_delta_convert(value, k, direction="delta_to_gamma"):
    """Translate pairwise dominance delta into k-bin dominance gamma, or back.

    gamma = delta / (delta + (1 - delta)/(k - 1))
    delta = gamma / (k - 1 - (k - 2) gamma)
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if not 0 < value < 1:
        raise ValueError("value must lie in (0, 1)")
    if direction == "delta_to_gamma":
        denom = value + (1 - value) / (k - 1)
        return value / denom
    if direction == "gamma_to_delta":
        denom = k - 1 - (k - 2) * value
        if denom == 0:
            raise ZeroDivisionError("k - 1 == (k - 2) * gamma")
        return value / denom
    raise ValueError(f"unknown direction {direction!r}")


def q_bound_from_effective(n0_eff, k):
    return 1.0 / (BALL_CONSTANT * n0_eff * (0.1 * k) ** K_EXPONENT)


def appendix_q_bound(k, l, n0=1, log_base=None):
    """q = 1 / (9127 * n0' * (0.1 k)**2.4) with n0' = n0 + 2 log k + log l."""
    if k < 2 or l < 2 or n0 < 1:
        raise ValueError("need k >= 2, l >= 2, n0 >= 1")
    return q_bound_from_effective(effective_n0(n0, k, l, log_base), k)


def rounded_thresholds(n, k, p, q, l, cluster_size):
    """Constant-probability thresholds in their rounded closed form.

    t_good = (k + sqrt(k + 1)) n / (p |C|),  t_bad = ((3 - sqrt 5)/2) n / (q l |C|).
    """
    t_good = (k + math.sqrt(k + 1)) * n / (p * cluster_size)
    t_bad = math.inf if q == 0 else (3 - math.sqrt(5)) / 2 * n / (q * l * cluster_size)
    return t_good, t_bad


def appendix_t_thresholds(n, k, p, q, l, cluster_size, delta, log_base=None):
    """Steps after which good edges reliably exceed k, and before which bad
    edges reliably stay below 1, each with probability 1 - delta.

    The regime is feasible iff ``t_good < t_bad``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 0 < p <= 1 or not 0 <= q <= 1:
        raise ValueError("need p in (0, 1] and q in [0, 1]")
    L = _log(1 / delta, log_base)
    t_good = n / (p * cluster_size) * (k + L / 2 + math.sqrt(k * L + L * L / 4))
    if q == 0:
        return t_good, math.inf
    t_bad = n / (q * l * cluster_size) * (1 + L / 2 - math.sqrt(L + L * L / 4))
    return t_good, t_bad


class SeparationVacuous(ValueError):
    """p/(q l) > 2: the good edges already dominate, no separation is needed."""


def appendix_x_separation(p, q, l):
    """Majority margin x solving the good-vs-bad edge inequality at t = 1/q."""
    if q == 0:
        raise SeparationVacuous("q = 0: no bad edges")
    r = p / (q * l)
    if r <= 0:
        raise ValueError("p/(q l) must be positive")
    radicand = (2 * r ** 3 - r ** 4) / (4 * r ** 4)
    if radicand < 0:
        raise SeparationVacuous(f"separation condition vacuous (p/ql = {r:g} > 2)")
    return math.sqrt(radicand)


@dataclass(frozen=True)
class MaxLoadPrediction:
    value: float
    regime: str  # "dense" when l >= k ln k, else "sparse"


def max_load_prediction(l, k):
    """High-probability max load l/k + sqrt(2 (l/k) ln k) of l balls in k bins.

    Below l = k ln k the max load follows the log k / log log k law instead;
    the value is still returned but the regime is flagged ``"sparse"``.
    """
    if l < 1 or k < 1:
        raise ValueError("need l, k >= 1")
    mean = l / k
    value = mean + math.sqrt(2 * mean * math.log(k))
    regime = "dense" if k == 1 or l >= k * math.log(k) else "sparse"
    return MaxLoadPrediction(value, regime)
