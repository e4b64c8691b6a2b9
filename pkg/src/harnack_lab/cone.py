"""The admissible parameter cone and its exponent bounds.

A quintuple (a, b, c, d, theta) is admissible in dimension n when

    d >= a > c > 0,
    theta > b >= 0,
    (a-c)^2 theta^2
        - a (theta-b) [ (2 theta + n a)(a-c) + a (n-1)(theta-b) ]  >= 0.

Admissible quintuples form a scale-invariant cone: the third expression is
homogeneous of degree four, the first two lines of degree one.  Against each
admissible quintuple the verifier certifies tensor inequalities for exponents
1 < p < 1 + G, where G is the exponent gap computed here.

The cone carries a convenient two-parameter family

    (z+1, k, 1, z+1, k+1) * scale,

admissible exactly where the cubic

    H(z, k) = -n z^3 + (k^2 - 3n) z^2 - (3n + 2k) z - (n - 1)

is nonnegative.  H has a (possibly degenerate) interval [z1, z2] of
nonnegativity in z > 0 once k reaches a dimension-dependent threshold k(n);
the local maximum of H sits at the ridge z(k, n), which is where the family
attains its best exponent gap.  All thresholds are trigonometric roots of
depressed cubics and are evaluated in closed form.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Quintuple",
    "ConeFamilyPoint",
    "AdmissibilityReport",
    "is_admissible",
    "gap_linear",
    "gap_quadratic",
    "exponent_gap",
    "epsilon_of",
    "family_cubic",
    "family_cubic_dz",
    "quartic_margin",
    "default_boundary_tol",
    "k_threshold",
    "k0_threshold",
    "k1_threshold",
    "ridge_z",
    "ridge_gap",
    "depressed_cubic_roots",
    "family_z_interval",
    "in_harnack_subcone",
    "search_max_gap",
    "cone_table",
    "format_cone_csv",
    "write_cone_csv",
]


@dataclass(frozen=True)
class Quintuple:
    """Parameter quintuple (a, b, c, d, theta).

    Constructible unconditionally; cone membership is a predicate, not a
    constructor constraint.
    """

    a: float
    b: float
    c: float
    d: float
    theta: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def as_tuple(self) -> tuple:
        return (self.a, self.b, self.c, self.d, self.theta)

    def scaled(self, lam: float) -> "Quintuple":
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"scale factor must be positive and finite, got {lam}")
        return Quintuple(*(lam * v for v in self.as_tuple()))


@dataclass(frozen=True)
class ConeFamilyPoint:
    """Coordinates (n, k, z, scale) generating scale*(z+1, k, 1, z+1, k+1)."""

    n: int
    k: float
    z: float
    scale: float = 1.0

    def __post_init__(self):
        _check_dimension(self.n)
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "scale", float(self.scale))
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ValueError(f"k must be >= 0, got {self.k}")
        if not (self.z >= 0 and math.isfinite(self.z)):
            raise ValueError(f"z must be >= 0, got {self.z}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be > 0, got {self.scale}")

    def quintuple(self) -> Quintuple:
        s = self.scale
        ad = (self.z + 1.0) * s  # shared so that a == d exactly
        return Quintuple(ad, self.k * s, s, ad, (self.k + 1.0) * s)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Membership verdict plus the slack of each line of the system.

    margins[0]: min(d-a, a-c, c)   (ordering chain)
    margins[1]: min(theta-b, b)    (theta chain)
    margins[2]: the quartic expression, evaluated literally
    """

    member: bool
    margins: tuple


def _check_dimension(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"n must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return int(n)


def default_boundary_tol(q: Quintuple) -> float:
    """Absolute slack granted to the quartic line, scaled like the quintuple^4.

    The family boundary sits exactly on the zero set of the quartic, so a
    strict >= 0 test would flip on roundoff.
    """
    scale = max(1.0, max(abs(v) for v in q.as_tuple()))
    return 1e-9 * scale**4


def quartic_margin(q: Quintuple, n: int) -> float:
    """The third line of the admissibility system, as written."""
    a, b, c, _, th = q.as_tuple()
    return (a - c) ** 2 * th**2 - a * (th - b) * (
        (2.0 * th + n * a) * (a - c) + a * (n - 1) * (th - b)
    )


def is_admissible(q: Quintuple, n: int, tol_boundary: float | None = None) -> AdmissibilityReport:
    """Cone membership test with per-line slack margins."""
    n = _check_dimension(n)
    vals = q.as_tuple()
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"quintuple must be finite, got {vals}")
    if tol_boundary is None:
        tol_boundary = default_boundary_tol(q)
    if not (tol_boundary >= 0 and math.isfinite(tol_boundary)):
        raise ValueError(f"tol_boundary must be >= 0, got {tol_boundary}")
    a, b, c, d, th = vals
    m1 = min(d - a, a - c, c)
    m2 = min(th - b, b)
    m3 = quartic_margin(q, n)
    member = (
        d >= a
        and a > c
        and c > 0
        and th > b
        and b >= 0
        and m3 >= -tol_boundary
    )
    return AdmissibilityReport(member, (m1, m2, m3))


# ---------------------------------------------------------------------------
# Exponent gap: admissible reaction exponents are 1 < p < 1 + gap.
# ---------------------------------------------------------------------------

def gap_linear(b: float, d: float, theta: float) -> float:
    """4 d (theta - b) / theta^2."""
    if not theta > b:
        raise ValueError(f"requires theta > b, got theta={theta}, b={b}")
    if not b >= 0:
        raise ValueError(f"requires b >= 0, got {b}")
    if not d > 0:
        raise ValueError(f"requires d > 0, got {d}")
    return 4.0 * d * (theta - b) / theta**2


def gap_quadratic(q: Quintuple) -> float:
    """Positive root of (d-a) th^2 x^2 + (d-c) th^2 x - 4 c d (th-b) = 0.

    With d == a the equation degenerates to its linear part and the unique
    root is returned; the two branches join continuously as d -> a+.  The
    quadratic branch uses the product form of the root formula so that no
    cancellation occurs when 4 c d (th-b) is small against (d-c)^2 th^2.
    """
    a, b, c, d, th = q.as_tuple()
    if not th > b:
        raise ValueError(f"requires theta > b, got theta={th}, b={b}")
    if not d >= a:
        raise ValueError(f"requires d >= a, got d={d}, a={a}")
    if not d > c > 0:
        raise ValueError(f"requires d > c > 0, got d={d}, c={c}")
    const = 4.0 * c * d * (th - b)  # > 0
    lin = (d - c) * th**2  # > 0
    if d == a:
        return const / lin
    quad = (d - a) * th**2
    disc = lin * lin + 4.0 * quad * const
    return 2.0 * const / (lin + math.sqrt(disc))


def exponent_gap(q: Quintuple) -> float:
    """min of the linear and quadratic gaps."""
    return min(gap_linear(q.b, q.d, q.theta), gap_quadratic(q))


def epsilon_of(q: Quintuple) -> float:
    """The tensor-shift constant 1 / (2 (theta - b))."""
    if not q.theta > q.b:
        raise ValueError(f"requires theta > b, got theta={q.theta}, b={q.b}")
    return 1.0 / (2.0 * (q.theta - q.b))


# ---------------------------------------------------------------------------
# The family cubic and its thresholds.
# ---------------------------------------------------------------------------

def family_cubic(z: float, k: float, n: int) -> float:
    """H(z, k) = -n z^3 + (k^2 - 3n) z^2 - (3n + 2k) z - (n - 1), by Horner."""
    n = _check_dimension(n)
    return ((-n * z + (k * k - 3.0 * n)) * z - (3.0 * n + 2.0 * k)) * z - (n - 1.0)


def family_cubic_dz(z: float, k: float, n: int) -> float:
    """dH/dz = -3n z^2 + 2 (k^2 - 3n) z - (3n + 2k)."""
    n = _check_dimension(n)
    return (-3.0 * n * z + 2.0 * (k * k - 3.0 * n)) * z - (3.0 * n + 2.0 * k)


def depressed_cubic_roots(p: float, q: float) -> list:
    """All real roots of x^3 + p x + q = 0, ascending, with multiplicity.

    Three-real-root case via the trigonometric substitution x = u cos(phi)
    with u = 2 sqrt(-p/3); one-real-root case via the hyperbolic branches.
    Roots get a Newton polish away from critical points.
    """
    if not (math.isfinite(p) and math.isfinite(q)):
        raise ValueError(f"coefficients must be finite, got p={p}, q={q}")
    if p == 0.0 and q == 0.0:
        return [0.0, 0.0, 0.0]
    disc = -4.0 * p**3 - 27.0 * q**2
    if disc >= 0.0:
        # casus irreducibilis: p < 0 whenever we land here with (p, q) != 0
        u = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * u)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        roots = [u * math.cos(phi - 2.0 * math.pi * j / 3.0) for j in range(3)]
    elif p > 0.0:
        arg = 3.0 * q / (2.0 * p) * math.sqrt(3.0 / p)
        roots = [-2.0 * math.sqrt(p / 3.0) * math.sinh(math.asinh(arg) / 3.0)]
    elif p < 0.0:
        arg = -3.0 * abs(q) / (2.0 * p) * math.sqrt(-3.0 / p)
        roots = [
            -2.0
            * math.copysign(1.0, q)
            * math.sqrt(-p / 3.0)
            * math.cosh(math.acosh(max(1.0, arg)) / 3.0)
        ]
    else:  # p == 0, q != 0
        roots = [math.copysign(abs(q) ** (1.0 / 3.0), -q)]
    scale = max(1.0, abs(p), abs(q))
    polished = []
    for x in roots:
        for _ in range(2):
            slope = 3.0 * x * x + p
            if abs(slope) < 1e-12 * scale:
                break
            x -= ((x * x + p) * x + q) / slope
        polished.append(x)
    return sorted(polished)


def k_threshold(n: int) -> float:
    """Least k for which the family cubic has positive roots.

    Trigonometric closed form 3 sqrt(n) cos(arccos(1/sqrt(n)) / 3); it is the
    unique positive root of k^3 - (27/4) n k - (27/4) n.
    """
    n = _check_dimension(n)
    return 3.0 * math.sqrt(n) * math.cos(math.acos(1.0 / math.sqrt(n)) / 3.0)


def k0_threshold(n: int) -> float:
    """Least k for which the family cubic has critical points (n >= 2).

    Unique positive root of k^3 - 6 n k - 6 n.  For n = 1 the arccos argument
    exceeds one and the value is undefined.
    """
    n = _check_dimension(n)
    arg = 3.0 / (2.0 * math.sqrt(2.0 * n))
    if arg > 1.0:
        raise ValueError(f"k0 threshold needs n >= 2, got n={n}")
    return 2.0 * math.sqrt(2.0 * n) * math.cos(math.acos(arg) / 3.0)


def k1_threshold(n: int) -> float:
    """(1 + sqrt(1 + 108 n)) / 4, where the ridge reaches height two."""
    n = _check_dimension(n)
    return (1.0 + math.sqrt(1.0 + 108.0 * n)) / 4.0


def ridge_z(k: float, n: int) -> float:
    """Location of the family cubic's local maximum in z.

    (k^2 - 3n + sqrt(k^4 - 6 n k^2 - 6 n k)) / (3 n); defined where the
    radicand is nonnegative, i.e. k at or above the critical threshold.
    """
    n = _check_dimension(n)
    rad = k**4 - 6.0 * n * k**2 - 6.0 * n * k
    if rad < 0.0:
        raise ValueError(f"no ridge point: k^4 - 6nk^2 - 6nk = {rad} < 0 at k={k}, n={n}")
    return (k * k - 3.0 * n + math.sqrt(rad)) / (3.0 * n)


def ridge_gap(n: int) -> float:
    """Best exponent gap along the family ridge: 4/(k+1)^2 (1 + 1/z) at k(n)."""
    k = k_threshold(n)
    z = ridge_z(k, n)
    return 4.0 / (k + 1.0) ** 2 * (1.0 + 1.0 / z)


def family_z_interval(k: float, n: int) -> tuple:
    """The two largest real roots (z1, z2) of the family cubic at fixed k.

    H >= 0 on [z1, z2]; raises when k is below the two-root threshold.
    Roots come from the package's own trigonometric cubic solver after
    depressing H; keep brute-force cross-checks independent of this path.
    """
    n = _check_dimension(n)
    # monic form: z^3 + A z^2 + B z + C = -H/n
    A = -(k * k - 3.0 * n) / n
    B = (3.0 * n + 2.0 * k) / n
    C = (n - 1.0) / n
    shift = A / 3.0
    p = B - A * A / 3.0
    q = 2.0 * A**3 / 27.0 - A * B / 3.0 + C
    roots = [w - shift for w in depressed_cubic_roots(p, q)]
    positive = sorted(r for r in roots if r > 1e-12 * max(1.0, k * k / n))
    if len(positive) < 2:
        raise ValueError(f"family cubic has no positive root interval at k={k}, n={n}")
    return positive[-2], positive[-1]


def in_harnack_subcone(q: Quintuple, n: int) -> bool:
    """Membership in the subcone with a = d and b - a + c < 0.

    Path-integrated estimates need this extra structure; a = d is tested to
    1e-12 relative, the drift condition strictly.
    """
    rep = is_admissible(q, n)
    if not rep.member:
        return False
    if abs(q.a - q.d) > 1e-12 * max(abs(q.a), abs(q.d)):
        return False
    return q.b - q.a + q.c < 0.0


# ---------------------------------------------------------------------------
# Search over the cone.
# ---------------------------------------------------------------------------

def search_max_gap(n: int, budget: int = 0, seed: int = 0):
    """Best (quintuple, exponent gap) found over the cone.

    Deterministic stage: scan the family ridge k -> (z(k, n) + 1, k, 1, ...)
    over k in [k(n), k(n) + 4]; the gap decreases along the ridge so the scan
    peaks at k(n).  Stochastic stage: `budget` log-uniform proposals in the
    (k, z, scale) chart, with z projected back into the admissible interval
    [z1(k), z2(k)].  The chart is used instead of raw 5-space because the
    cone is scale invariant.  Fixed seed gives identical output.
    """
    n = _check_dimension(n)
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    k_lo = k_threshold(n)

    best_q = None
    best_gap = -math.inf
    best_coords = None
    for k in np.linspace(k_lo, k_lo + 4.0, 161):
        k = float(k)
        z = ridge_z(k, n)
        q = ConeFamilyPoint(n, k, z, 1.0).quintuple()
        if not is_admissible(q, n).member:
            continue
        gap = exponent_gap(q)
        if gap > best_gap:
            best_q, best_gap, best_coords = q, gap, (k, z, 1.0)

    rng = np.random.default_rng(seed)
    for _ in range(budget):
        jitter = rng.uniform(-0.4, 0.4, size=3)
        k = max(k_lo, best_coords[0] * math.exp(jitter[0]))
        try:
            z1, z2 = family_z_interval(k, n)
        except ValueError:
            continue
        z = min(max(best_coords[1] * math.exp(jitter[1]), z1), z2)
        scale = best_coords[2] * math.exp(jitter[2])
        q = ConeFamilyPoint(n, k, z, scale).quintuple()
        if not is_admissible(q, n).member:
            continue
        gap = exponent_gap(q)
        if gap > best_gap:
            best_q, best_gap, best_coords = q, gap, (k, z, scale)
    return best_q, best_gap


# ---------------------------------------------------------------------------
# CSV table of the closed-form thresholds.
# ---------------------------------------------------------------------------

def cone_table(n_min: int, n_max: int) -> list:
    """Rows n -> (k, k0, k1, z, gap); k0 is None where undefined (n = 1)."""
    if n_min < 1:
        raise ValueError(f"n_min must be >= 1, got {n_min}")
    rows = []
    for n in range(n_min, n_max + 1):
        k = k_threshold(n)
        try:
            k0 = k0_threshold(n)
        except ValueError:
            k0 = None
        rows.append(
            {
                "n": n,
                "k": k,
                "k0": k0,
                "k1": k1_threshold(n),
                "z": ridge_z(k, n),
                "g_tilde": ridge_gap(n),
            }
        )
    return rows


def _sig12(x) -> str:
    return "" if x is None else format(x, ".12g")


def format_cone_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write("n,k,k0,k1,z,g_tilde\n")
    for row in rows:
        buf.write(
            f"{row['n']},{_sig12(row['k'])},{_sig12(row['k0'])},"
            f"{_sig12(row['k1'])},{_sig12(row['z'])},{_sig12(row['g_tilde'])}\n"
        )
    return buf.getvalue()


def write_cone_csv(path, n_min: int, n_max: int) -> None:
    from pathlib import Path

    Path(path).write_text(format_cone_csv(cone_table(n_min, n_max)))
