"""Sample-complexity and capacity calculators for learning attack response functions.

Every bound has the form

    m = (576 M^2 / alpha^2) * ( ln(1/delta) + ln 8 + ln C(alpha / (96 T)) )

where ``C`` is a capacity bound of the hypothesis class at radius
``alpha / (96 T)``. Capacities can be astronomically large, so everything
is carried as natural logs; the non-parametric capacity is even kept as a
log of a log when needed.

Eulerian numbers use the standard indexing: ``A(T, k)`` counts
permutations of ``T`` elements with ``k`` descents, ``k = 0 .. T-1``, and
the slab ``{k - 1 <= sum(x) <= k}`` of the unit cube has volume
``A(T, k - 1) / T!``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

EXACT_MAX_T = 30
_LN2 = math.log(2.0)


# -- combinatorics -----------------------------------------------------------

def _check_exact(T: int):
    if not 1 <= T <= EXACT_MAX_T:
        raise ValueError(f"exact mode supports 1 <= T <= {EXACT_MAX_T}; "
                         "use ln_irwin_hall_cdf for larger T")


@lru_cache(maxsize=None)
def _eulerian_row(T: int) -> tuple:
    row = [1]
    for n in range(2, T + 1):
        prev = row + [0]
        row = [(k + 1) * prev[k] + (n - k) * (prev[k - 1] if k else 0) for k in range(n)]
    return tuple(row)


def eulerian_numbers(T: int) -> list[int]:
    """Row ``A(T, 0), ..., A(T, T-1)`` of exact Eulerian numbers."""
    _check_exact(T)
    return list(_eulerian_row(T))


def _irwin_hall_numerator(T: int, k: int) -> int:
    # T! * F_T(k) as an exact integer
    return sum((-1) ** j * math.comb(T, j) * (k - j) ** T for j in range(k + 1))


def _check_k(T: int, k):
    if int(k) != k or not 0 <= k <= T:
        raise ValueError(f"k must be an integer in [0, {T}], got {k}")


def irwin_hall_cdf(T: int, k: int) -> Fraction:
    """Exact ``P(U_1 + ... + U_T <= k)`` for iid uniform ``U_i`` and integer ``k``."""
    _check_exact(T)
    _check_k(T, k)
    return Fraction(_irwin_hall_numerator(T, int(k)), math.factorial(T))


def _ln_int(n: int) -> float:
    if n <= 0:
        raise ValueError("log of a non-positive integer")
    shift = max(n.bit_length() - 960, 0)
    return math.log(n >> shift) + shift * _LN2


def ln_irwin_hall_cdf(T: int, k: int) -> float:
    """``ln F_T(k)`` for any ``T``; exact integer arithmetic, no cancellation."""
    if T < 1:
        raise ValueError("T must be positive")
    _check_k(T, k)
    if k == 0:
        return -math.inf
    return _ln_int(_irwin_hall_numerator(T, int(k))) - _ln_int(math.factorial(T))


def feasible_volume(T: int, K: int) -> Fraction:
    """Volume of ``{x in [0,1]^T : sum(x) <= K}``."""
    return irwin_hall_cdf(T, K)


# -- covering of the strategy space ------------------------------------------

def ln_cover_X(T: int, K: int, eps: float, method: str = "exact") -> float:
    """Log of the sup-norm covering bound for the coverage polytope.

    ``method="exact"`` uses the volume ``F_T(K+1)`` of the slab union that
    contains the polytope; ``method="bernstein"`` replaces it by the
    concentration bound ``exp(-3T (0.5 - (K+1)/T)^2 / (1 - (K+1)/T))``,
    which requires ``K + 1 <= T / 2``. Either is divided by the cube
    volume ``(2 eps)^T``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    k = K + 1
    if not 0 <= K < T:
        raise ValueError("need 0 <= K < T")
    cube = -T * math.log(2 * eps)
    if method == "exact":
        return ln_irwin_hall_cdf(T, k) + cube
    if method == "bernstein":
        if k > 0.5 * T:
            raise ValueError(f"Bernstein cover needs K + 1 <= T/2 (K={K}, T={T}); use method='exact'")
        frac = k / T
        return -3 * T * (0.5 - frac) ** 2 / (1 - frac) + cube
    raise ValueError(f"unknown cover method {method!r}")


@dataclass(frozen=True)
class ComponentCapacity:
    """Capacity bound ``(2 ceil(M/eps) + 1) * 2 ** N`` of one Lipschitz component.

    ``N`` (the number of cells covering the strategy space) is stored as
    ``ln_cover_count`` because the bound overflows doubles very quickly.
    """

    ln_linear_factor: float
    ln_cover_count: float

    @property
    def cover_count(self) -> float:
        return math.exp(self.ln_cover_count) if self.ln_cover_count < 709 else math.inf

    @property
    def log_value(self) -> float:
        return self.ln_linear_factor + _LN2 * self.cover_count

    @property
    def log_log_value(self) -> float:
        """``ln ln`` of the bound, finite even when ``log_value`` overflows."""
        a = math.log(_LN2) + self.ln_cover_count
        return _logaddexp(a, math.log(self.ln_linear_factor))


def ln_capacity_npl_component(T: int, K: int, M: float, khat: float, eps: float,
                              method: str = "exact") -> ComponentCapacity:
    if eps <= 0 or M <= 0 or khat <= 0:
        raise ValueError("eps, M and khat must be positive")
    linear = math.log(2 * math.ceil(M / eps) + 1)
    return ComponentCapacity(linear, ln_cover_X(T, K, eps / (2 * khat), method))


# -- sample complexity -------------------------------------------------------

@dataclass(frozen=True)
class ComplexityQuery:
    alpha: float
    delta: float
    T: int
    M: float = 20.0
    K: int = 1
    khat: float = 5.0
    r_max: float = 10.0
    p_min_abs: float = 10.0

    def __post_init__(self):
        if not 0 < self.alpha < 1 or not 0 < self.delta < 1:
            raise ValueError("alpha and delta must lie in (0, 1)")
        if not 1 <= self.K < self.T:
            raise ValueError("need 1 <= K < T")
        if self.M <= 0 or self.khat <= 0 or self.r_max <= 0 or self.p_min_abs <= 0:
            raise ValueError("M, khat, r_max and |p_min| must be positive")

    @property
    def radius(self) -> float:
        """Capacity evaluation radius ``alpha / (96 T)``."""
        return self.alpha / (96 * self.T)


@dataclass(frozen=True)
class ComplexityResult:
    model: str
    log_capacity: float          # ln C at the evaluation radius (may be inf)
    ln_samples: float
    log_log_capacity: float = math.nan
    order_terms: dict = field(default_factory=dict)

    @property
    def samples(self) -> float:
        return math.exp(self.ln_samples) if self.ln_samples < 709 else math.inf

    def to_dict(self) -> dict:
        m = self.samples
        return {"model": self.model,
                "m": m if math.isfinite(m) else "inf-overflow",
                "ln_m": self.ln_samples,
                "ln_capacity": self.log_capacity if math.isfinite(self.log_capacity) else "inf-overflow"}


def _logaddexp(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def _assemble(model: str, q: ComplexityQuery, ln_c: float, ln_ln_c: float | None = None,
              order: dict | None = None) -> ComplexityResult:
    prefactor = math.log(576.0) + 2 * math.log(q.M) - 2 * math.log(q.alpha)
    rest = math.log(1 / q.delta) + math.log(8.0)
    if ln_ln_c is None:
        total = rest + ln_c
        ln_total = math.log(total) if total > 0 else -math.inf
        ln_ln_c = math.log(ln_c) if ln_c > 0 else math.nan
    else:
        ln_total = _logaddexp(math.log(rest), ln_ln_c)
    return ComplexityResult(model, ln_c, prefactor + ln_total, ln_ln_c, order or {})


def _order_terms(q: ComplexityQuery, growth: float) -> dict:
    return {"inv_alpha_sq": 1 / q.alpha ** 2, "ln_inv_delta": math.log(1 / q.delta),
            "growth": growth}


def samples_gsuqr(q: ComplexityQuery) -> ComplexityResult:
    """Generalized SUQR: capacity ``(M / 2 eps)^T``."""
    eps = q.radius
    ln_c = q.T * math.log(q.M / (2 * eps))
    return _assemble("gsuqr", q, ln_c, order=_order_terms(q, q.T * math.log(q.T / q.alpha)))


def samples_ssuqr(q: ComplexityQuery) -> ComplexityResult:
    """Standard SUQR: capacity ``(M / 2 eps)^3 / (r_max |p_min|)``."""
    eps = q.radius
    ln_c = 3 * math.log(q.M / (2 * eps)) - math.log(q.r_max * q.p_min_abs)
    return _assemble("ssuqr", q, ln_c, order=_order_terms(q, math.log(q.T / q.alpha)))


def samples_gsuqr_weak(q: ComplexityQuery) -> ComplexityResult:
    """Generalized SUQR via pseudo-dimension: capacity ``2^T (eM/eps ln(eM/eps))^{2T}``."""
    u = math.e * q.M / q.radius
    ln_c = q.T * _LN2 + 2 * q.T * math.log(u * math.log(u))
    ta = q.T / q.alpha
    return _assemble("gsuqr-weak", q, ln_c, order=_order_terms(q, q.T * math.log(ta * math.log(ta))))


def samples_npl(q: ComplexityQuery, method: str = "exact") -> ComplexityResult:
    """Non-parametric Lipschitz class: product of ``T - 1`` component capacities."""
    comp = ln_capacity_npl_component(q.T, q.K, q.M, q.khat, q.radius, method)
    ln_ln_c = math.log(q.T - 1) + comp.log_log_value
    ln_c = (q.T - 1) * comp.log_value
    growth_ln = (q.T + 1) * math.log(q.T) - q.T * math.log(q.alpha)
    return _assemble("npl", q, ln_c, ln_ln_c, order=_order_terms(q, growth_ln))


SAMPLE_BOUNDS = {
    "gsuqr": samples_gsuqr,
    "ssuqr": samples_ssuqr,
    "gsuqr-weak": samples_gsuqr_weak,
    "npl": samples_npl,
}


# -- loss geometry -----------------------------------------------------------

def attack_losses(a) -> np.ndarray:
    """Loss of every outcome: ``-ln q_i`` with the last exponent pinned to 0."""
    a = np.asarray(a, dtype=float)
    full = np.append(a, 0.0)
    mx = full.max()
    return -(full - (mx + math.log(np.exp(full - mx).sum())))


def rho_distance(a, b) -> float:
    """``max_y |loss(y, a) - loss(y, b)|`` by enumerating all ``T`` outcomes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be vectors of equal length")
    return float(np.max(np.abs(attack_losses(a) - attack_losses(b))))
