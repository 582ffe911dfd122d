"""Growth-rate analysis for weighted descent words.

The codec packs every conflict of a selection run into a descent of the run
word plus a bounded payload, so the number of distinct logs of semilength t
is at most the number of weighted Dyck words of that semilength.  If that
count grows like gamma^t with gamma below s — the number of rank sequences
of length t is s^t — then long runs are exponentially rare, and the phase
terminates.  This module is the counting side of that argument: the weight
table, the characteristic point tau of the weight polynomial phi, the
growth rate gamma = phi(tau)/tau, exact cross-check enumerations, and a
certified comparison of gamma against s.

Numerics policy: every quantity that feeds a verdict (weights, s, the probe
bound on gamma) is computed in exact integer/rational arithmetic; floating
point (mpmath, well beyond double precision) is used only for the reported
numeric tau and gamma, never for a comparison.  The weights are astronomical
— w for the longest descent is C(delta, q) * d^(q+2) — so machine doubles
would overflow long before the interesting regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from mpmath import mp

from .errors import RegimeError
from .graphs import _as_eps

__all__ = [
    "DescentSpec",
    "TauResult",
    "CertificationReport",
    "SmallPhaseBound",
    "weights_for",
    "solve_tau",
    "gamma_upper_bound",
    "characteristic_probe",
    "certify_big_phase",
    "crossover_sweep",
    "constant_check",
    "dyck_count_dp",
    "tree_series",
    "small_phase_bound_check",
]


@dataclass(frozen=True)
class DescentSpec:
    """Descent lengths with their multiplicative payload budgets.

    A descent of length l_i may carry any of w_i payload values, so the
    weight polynomial is phi(x) = 1 + sum w_i x^(l_i).  Entries may be given
    in any iterable; they are stored sorted by length.
    """

    entries: tuple[tuple[int, int], ...]

    def __init__(self, entries: Iterable[tuple[int, int]]):
        pairs = tuple(sorted((int(l), int(w)) for l, w in entries))
        if not pairs:
            raise ValueError("at least one descent length is required")
        for l, w in pairs:
            if l < 1:
                raise ValueError(f"descent length {l} is not positive")
            if w < 1:
                raise ValueError(f"weight {w} for length {l} is not positive")
        if len({l for l, _ in pairs}) != len(pairs):
            raise ValueError("descent lengths must be pairwise distinct")
        object.__setattr__(self, "entries", pairs)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(l for l, _ in self.entries)

    @property
    def max_length(self) -> int:
        return self.entries[-1][0] if self.entries else 0

    def weight_of(self, length: int) -> int:
        for l, w in self.entries:
            if l == length:
                return w
        raise KeyError(f"no descent of length {length}; have {self.lengths}")

    def phi(self, x):
        """1 + sum w_i x^(l_i); exact for Fraction x, mpf for mpf x."""
        return 1 + sum(w * x ** l for l, w in self.entries)

    def phi_prime(self, x):
        return sum(l * w * x ** (l - 1) for l, w in self.entries)

    def phi_double_prime(self, x):
        return sum(l * (l - 1) * w * x ** (l - 2) for l, w in self.entries
                   if l >= 2)


def weights_for(delta: int, eps, q: int = 13) -> DescentSpec:
    """The five descent weights for the selection phase at (delta, eps, q).

    Each conflict type resets l_i vertices and its payload takes at most w_i
    values, hence the pairs below.  All quantities are exact big integers;
    the largest weight C(delta, q) * d^(q+2) overflows doubles around
    delta = 10^12, which is well inside the regime the certifier sweeps.
    """
    eps = _as_eps(eps)
    if q < 5:
        raise RegimeError(
            f"q={q} collides descent lengths: the overload reset size q+1 "
            "must stay distinct from lengths 2..5"
        )
    if not 0 < eps < Fraction(1, 2):
        raise RegimeError(f"eps={eps} outside (0, 1/2)")
    if delta < q:
        raise RegimeError(f"delta={delta} below q={q}: no overload weight")
    d = math.ceil((Fraction(1, 2) - eps) * delta)
    if not d < Fraction(delta, 2):
        raise RegimeError(
            f"d={d} is not below delta/2={delta / 2}: delta too small for "
            f"eps={eps} to bite"
        )
    if d < 2:
        raise RegimeError(f"d={d} < 2 zeroes the pair-based weights")
    return DescentSpec((
        (q + 1, math.comb(delta, q) * d ** (q + 2)),
        (2, (q + 2) * d ** 3),
        (3, 2 ** 7 * delta ** 3 * math.comb(d, 2)),
        (4, 2 ** 12 * delta ** 4 * d * math.comb(d, 2)),
        (5, 2 ** 11 * delta ** 4 * d ** 2 * math.comb(d, 2)),
    ))


def _theory_d(delta: int, eps: Fraction) -> int:
    return math.ceil((Fraction(1, 2) - eps) * delta)


# --------------------------------------------------------------------------
# the characteristic point


class TauResult(NamedTuple):
    tau: object  # mpf
    gamma: object  # mpf


def solve_tau(spec: DescentSpec, tol: float = 1e-12,
              hint=None) -> TauResult:
    """The unique root tau of x phi'(x) = phi(x), and gamma = phi(tau)/tau.

    The ratio x phi'(x)/phi(x) increases from 0 to max(l_i) on (0, inf), so
    a root exists exactly when some length is at least 2 and a sign bracket
    is safe to bisect.  g(x) = x phi'(x) - phi(x) is increasing and convex,
    so after a few bisection steps bracket-clamped Newton converges
    quadratically.  tol is relative on tau; hint, when given, seeds the
    bracket hunt (the certifier passes its probe point, which lands within
    a small factor of tau).
    """
    if spec.max_length < 2:
        raise RegimeError(
            "x phi'(x)/phi(x) tends to 1: with every descent of length 1 "
            "the characteristic equation has no root"
        )

    with mp.workdps(40):
        def g(x):
            return x * spec.phi_prime(x) - spec.phi(x)

        hi = mp.mpf(hint) if hint and hint > 0 else mp.mpf(1)
        while g(hi) <= 0:
            hi *= 2
        while g(hi / 2) > 0:
            hi /= 2
        # tau in (hi/2, hi]; g is increasing and convex, so Newton from the
        # upper end stays above the root and decreases onto it
        x = hi
        for _ in range(200):
            step = g(x) / (x * spec.phi_double_prime(x))
            x -= step
            if step <= tol * x / 4:
                break
        else:
            raise ArithmeticError("characteristic point iteration stalled")
        return TauResult(x, spec.phi(x) / x)


def gamma_upper_bound(spec: DescentSpec, x) -> Fraction | None:
    """phi(x)/x as a certified upper bound on gamma, or None if x refuses.

    phi(x)/x is decreasing below tau and minimal there, so whenever
    x phi'(x)/phi(x) < 1 (equivalently x < tau) the value phi(x)/x lies
    above gamma.  The test and the bound are exact rational arithmetic, so
    a returned bound is a proof, not an estimate.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError(f"probe {x} is not positive")
    phi = spec.phi(x)
    if x * spec.phi_prime(x) >= phi:
        return None
    return phi / x


def _nth_root_floor(n: int, k: int) -> int:
    """Largest r with r**k <= n, by integer Newton from an upper seed."""
    if n < 0 or k < 1:
        raise ValueError("root of a negative number or non-positive index")
    if n == 0:
        return 0
    r = 1 << -(-n.bit_length() // k)  # 2^ceil(bits/k) >= n^(1/k)
    while True:
        nr = ((k - 1) * r + n // r ** (k - 1)) // k
        if nr >= r:
            break
        r = nr
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


_PROBE_BITS = 64


def _upper_root(value: Fraction, k: int) -> Fraction:
    """A rational q with value^(1/k) <= q <= value^(1/k) * (1 + 2^-60)."""
    scaled = value * (1 << (_PROBE_BITS * k))
    n = -(-scaled.numerator // scaled.denominator)  # ceil
    r = _nth_root_floor(n, k)
    if r ** k < n:
        r += 1
    return Fraction(r, 1 << _PROBE_BITS)


def characteristic_probe(spec: DescentSpec, q: int,
                         eps1: Fraction = Fraction(1, 1000)) -> Fraction:
    """A rational point just below (q (1+eps1) w1)^(-1/(q+1)).

    With only the longest descent present, tau would be exactly
    (q w1)^(-1/(q+1)); the full tau approaches that value from below as d
    grows, so this slightly scaled-down point is the natural place to probe
    gamma_upper_bound.  Rounding the root up makes the probe a certified
    lower approximation, which can only move it further into the safe
    region x < tau.
    """
    w1 = spec.weight_of(q + 1)
    eps1 = Fraction(eps1)
    if eps1 < 0:
        raise ValueError(f"eps1={eps1} is negative")
    return 1 / _upper_root(q * (1 + eps1) * w1, q + 1)


# --------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of one gamma < s comparison, with both gamma estimates.

    ``verdict`` is certified: it is True only when the exact rational probe
    bound on gamma lies strictly below s.  ``gamma`` and ``tau`` are the
    bisection values, reported for inspection; ``asymptotic_ok`` is the
    delta-free margin check explaining whether any crossover can exist for
    these (q, eps, slack) at all.
    """

    delta: int
    eps: Fraction
    q: int
    eps1: Fraction
    eps_prime: Fraction
    d: int
    s: int
    tau: float
    gamma: float
    log10_gamma: float
    probe_bound: Fraction | None
    verdict: bool
    asymptotic_ok: bool

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "eps": float(self.eps),
            "q": self.q,
            "d": self.d,
            "s": self.s,
            "gamma": self.gamma,
            "log10_gamma": self.log10_gamma,
            "probe_bound": _as_float(self.probe_bound),
            "verdict": self.verdict,
            "asymptotic_ok": self.asymptotic_ok,
        }


def _as_float(value) -> float | None:
    if value is None:
        return None
    try:
        return float(value)
    except OverflowError:
        return math.inf


def _asymptotic_margin_ok(q: int, eps: Fraction, eps1: Fraction,
                          eps_prime: Fraction) -> bool:
    """Delta-free sufficient condition for an eventual crossover.

    As delta grows, probe_bound/delta^2 tends to
    c * (2^(q+2) q!)^(-1/(q+1)) with c = (q(1+eps1))^(1/(q+1)) +
    (q(1+eps1))^(-q/(q+1)), while s/delta^2 stays above
    (1-eps') (1/2-eps)^2 / 2 for large delta.  The comparison uses rational
    upper bounds on the irrational roots, so True is certified; a False may
    merely mean the slack knobs ate the margin (at q=13 the two sides agree
    to three decimal places).
    """
    m = q * (1 + eps1)
    c_hi = _upper_root(m, q + 1) + _upper_root(Fraction(1, 1) / m ** q, q + 1)
    factor_hi = _upper_root(Fraction(1, 2 ** (q + 2) * math.factorial(q)),
                            q + 1)
    rhs = (1 - eps_prime) * (Fraction(1, 2) - eps) ** 2 / 2
    return c_hi * factor_hi < rhs


def certify_big_phase(delta: int, eps, q: int = 13,
                      eps1=Fraction(1, 1000),
                      eps_prime=Fraction(1, 1000)) -> CertificationReport:
    """Compare the log growth rate gamma against the rank-pool floor s.

    s = C(d-q, 2) - 3d is how many admissible pairs each selection draws
    from in the strict regime; the phase argument needs gamma < s.  The
    verdict is the exact probe comparison; the bisection gamma is reported
    alongside as an independent numeric estimate (always at most the probe
    bound, up to tolerance).
    """
    eps = _as_eps(eps)
    eps1 = Fraction(eps1)
    eps_prime = Fraction(eps_prime)
    spec = weights_for(delta, eps, q)
    d = _theory_d(delta, eps)
    s = math.comb(d - q, 2) - 3 * d if d >= q else -3 * d
    if s <= 0:
        raise RegimeError(
            f"s = C(d-q, 2) - 3d = {s} is not positive at delta={delta}, "
            f"eps={eps}, q={q} (d={d}): out of the certified regime"
        )
    probe = characteristic_probe(spec, q, eps1)
    bound = gamma_upper_bound(spec, probe)
    ts = solve_tau(spec, hint=float(probe))
    gamma_f = _as_float(ts.gamma)
    return CertificationReport(
        delta=delta,
        eps=eps,
        q=q,
        eps1=eps1,
        eps_prime=eps_prime,
        d=d,
        s=s,
        tau=_as_float(ts.tau),
        gamma=gamma_f,
        log10_gamma=float(mp.log10(ts.gamma)),
        probe_bound=bound,
        verdict=bound is not None and bound < s,
        asymptotic_ok=_asymptotic_margin_ok(q, eps, eps1, eps_prime),
    )


def crossover_sweep(eps, q: int = 13, eps1=Fraction(1, 1000),
                    eps_prime=Fraction(1, 1000), start_delta: int = 64,
                    max_delta: int = 2 ** 44,
                    factor: int = 2) -> list[CertificationReport]:
    """Certify along a geometric delta grid, stopping at the first success.

    Grid points below the regime floor (s <= 0 or d >= delta/2) are skipped.
    If the returned list is non-empty and its last verdict is True, that
    delta is an empirical crossover for the inequality; nothing is claimed
    about thresholds for the palette guarantee as a whole.
    """
    reports: list[CertificationReport] = []
    delta = start_delta
    while delta <= max_delta:
        try:
            report = certify_big_phase(delta, eps, q, eps1, eps_prime)
        except RegimeError:
            delta *= factor
            continue
        reports.append(report)
        if report.verdict:
            break
        delta *= factor
    return reports


def constant_check(q: int) -> float:
    """The zero-slack margin constant c_{q,0} * (2^(q+2) q!)^(-1/(q+1)).

    This is the limiting value of probe_bound/delta^2; the certified regime
    needs it below (1/2 - eps)^2 / 2, i.e. below 1/8 as eps tends to 0.
    At q = 13 the value is about 0.1229, which is what makes that q the
    sweet spot: smaller q loses to the root of q!, larger q inflates the
    d^(q+2) payload.
    """
    if q < 1:
        raise ValueError(f"q={q} must be positive")
    c = q ** (1 / (q + 1)) + (1 / q) ** (q / (q + 1))
    return c * (2 ** (q + 2) * math.factorial(q)) ** (-1 / (q + 1))


# --------------------------------------------------------------------------
# exact enumeration cross-checks


def dyck_count_dp(t: int, spec: DescentSpec) -> int:
    """Exact weighted count of Dyck words of semilength t.

    Counts words whose maximal descents all have lengths in the spec, each
    descent of length l_i carrying one of w_i payload values.  The state is
    (ascents placed, height, just ended a descent); the flag stops two
    descents from abutting, which would really be one longer descent.
    """
    if t < 0:
        raise ValueError(f"semilength {t} is negative")
    from functools import cache

    entries = spec.entries

    @cache
    def count(i: int, h: int, after_descent: bool) -> int:
        total = 0
        if i == t:
            if h == 0:
                return 1
        else:
            total += count(i + 1, h + 1, False)
        if not after_descent:
            for l, w in entries:
                if l <= h:
                    total += w * count(i, h - l, True)
        return total

    result = count(0, 0, False)
    count.cache_clear()
    return result


def tree_series(spec: DescentSpec, t_max: int) -> tuple[int, ...]:
    """(C_0, ..., C_{t_max}): weighted word counts via the tree view.

    A weighted word of semilength t is a rooted plane tree on t+1 vertices
    whose internal vertices have a descent length's worth of children (and
    carry the matching weight), so the counting series z — trees by vertex
    count — satisfies z = x phi(z).  Truncated fixed-point iteration pins
    coefficient k after k rounds; C_t is coefficient t+1 of z.
    """
    if t_max < 0:
        raise ValueError(f"t_max {t_max} is negative")
    n = t_max + 2
    z = [0] * n
    for _ in range(n):
        phi_z = [0] * n
        phi_z[0] = 1
        power = [1] + [0] * (n - 1)  # z^0
        for exp in range(1, spec.max_length + 1):
            power = _mul_trunc(power, z, n)
            for l, w in spec.entries:
                if l == exp:
                    for k in range(n):
                        phi_z[k] += w * power[k]
        z = [0] + phi_z[: n - 1]  # multiply by x
    if z[0] != 0 or z[1] != 1:
        raise AssertionError("fixed point lost its one-vertex tree")
    return tuple(z[1: t_max + 2])


def _mul_trunc(a: list[int], b: list[int], n: int) -> list[int]:
    out = [0] * n
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                if bj:
                    out[i + j] += ai * bj
    return out


# --------------------------------------------------------------------------
# recolouring-phase palette floor


@dataclass(frozen=True)
class SmallPhaseBound:
    """Whether the colour window clears the recolouring count threshold.

    ``holds`` is the exact test ceil(2 eps delta)^2 > 32 delta at this
    delta; ``always_from`` is the least delta beyond which it holds for
    every larger delta (from the ceiling-free form delta > 8/eps^2 — the
    ceiling can only help, so isolated smaller deltas may also pass).
    """

    holds: bool
    window: int
    always_from: int

    def __bool__(self) -> bool:
        return self.holds


def small_phase_bound_check(delta: int, eps) -> SmallPhaseBound:
    eps = _as_eps(eps)
    if eps <= 0:
        raise ValueError(f"eps={eps} must be positive")
    window = math.ceil(2 * eps * delta)
    threshold = 8 / eps ** 2
    return SmallPhaseBound(
        holds=window * window > 32 * delta,
        window=window,
        always_from=math.floor(threshold) + 1,
    )
