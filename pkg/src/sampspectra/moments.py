"""Asymptotic spectral moments of the sampling Gram matrix.

The p-th moment of the limiting eigenvalue distribution, for field
dimension d and oversampling ratio beta, is a sum over all partition paths
of order p: each path contributes beta^(p-k) times the d-th power of its
volume coefficient. Grouping paths by (volume, block count) gives a short
exact expansion, a polynomial in beta of degree p - 1 whose coefficients
depend on d only through the powers v^d. Non-crossing paths all have v = 1,
so as d grows the moments decrease monotonically to the Narayana polynomial
in beta, which is the Marchenko-Pastur moment.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import MAX_ORDER, bell, iter_partition_paths, narayana
from .errors import CapacityError
from .volumes import volume_of


@dataclass(frozen=True)
class MomentTerm:
    """One group of paths sharing a volume coefficient and block count."""

    volume: Fraction
    k: int
    multiplicity: int


@dataclass(frozen=True)
class MomentExpansion:
    """Exact moment expansion of order p, aggregated over partition paths."""

    p: int
    terms: tuple

    def term_map(self) -> dict:
        return {(t.volume, t.k): t.multiplicity for t in self.terms}


def moment_expansion(p: int, max_order: int = MAX_ORDER) -> MomentExpansion:
    """Aggregate volume coefficients over all partition paths of order p.

    Terms are keyed by the exact rational volume and the block count of the
    unreduced path, and come out sorted by (k, volume) so the expansion is
    deterministic. Orders beyond ``max_order`` are refused up front.
    """
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    if p > max_order:
        raise CapacityError(
            f"moment order {p} exceeds the configured maximum {max_order}"
        )
    agg: dict = {}
    for labels in iter_partition_paths(p):
        key = (volume_of(labels), max(labels))
        agg[key] = agg.get(key, 0) + 1
    terms = tuple(
        MomentTerm(volume=v, k=k, multiplicity=agg[(v, k)])
        for v, k in sorted(agg, key=lambda vk: (vk[1], vk[0]))
    )
    return MomentExpansion(p=p, terms=terms)


def moment_eval(expansion: MomentExpansion, d: int, beta, exact: bool = False):
    """Evaluate an expansion at field dimension d and ratio beta.

    Returns a float by default; with ``exact=True`` and a rational beta the
    arithmetic stays in Fractions end to end.
    """
    _check_d(d)
    beta = _check_beta(beta, exact)
    if exact:
        return sum(
            t.multiplicity * t.volume**d * beta ** (expansion.p - t.k)
            for t in expansion.terms
        )
    return float(
        sum(
            t.multiplicity * float(t.volume) ** d * beta ** (expansion.p - t.k)
            for t in expansion.terms
        )
    )


def moment_limit(p: int, beta) -> float:
    """Large-d limit of the p-th moment: the Narayana polynomial in beta."""
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    beta = _check_beta(beta, exact=False)
    return float(sum(narayana(p, k) * beta ** (p - k) for k in range(1, p + 1)))


def crossing_envelope(p: int, d: int) -> float:
    """Bound on |moment_eval - moment_limit| for any beta in (0, 1].

    Crossing paths are the only contributors to the gap; there are
    B(p) - Catalan(p) of them, each with v^d <= (2/3)^d and beta power <= 1.
    """
    from .combinatorics import catalan

    _check_d(d)
    return float((bell(p) - catalan(p)) * (Fraction(2, 3) ** d))


def symbolic_expansion(expansion: MomentExpansion) -> str:
    """Render the expansion as a polynomial in b with d left symbolic.

    Order 4 prints as ``b^3 + (6 + (2/3)^d) b^2 + 6 b + 1``.
    """
    p = expansion.p
    by_k: dict = {}
    for t in expansion.terms:
        by_k.setdefault(t.k, []).append(t)
    pieces = []
    for k in sorted(by_k):  # k ascending means descending powers of b
        power = p - k
        parts = []
        unit = sum(t.multiplicity for t in by_k[k] if t.volume == 1)
        if unit:
            parts.append(str(unit))
        for t in sorted(by_k[k], key=lambda t: t.volume, reverse=True):
            if t.volume == 1:
                continue
            base = f"({t.volume.numerator}/{t.volume.denominator})^d"
            parts.append(base if t.multiplicity == 1 else f"{t.multiplicity}*{base}")
        coeff = " + ".join(parts)
        if power == 0:
            pieces.append(coeff if len(parts) == 1 else f"({coeff})")
        else:
            var = "b" if power == 1 else f"b^{power}"
            if coeff == "1":
                pieces.append(var)
            elif len(parts) == 1:
                pieces.append(f"{coeff} {var}")
            else:
                pieces.append(f"({coeff}) {var}")
    return " + ".join(pieces)


def _check_d(d):
    if not isinstance(d, numbers.Integral) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")


def _check_beta(beta, exact):
    if isinstance(beta, Fraction):
        value = beta
    elif isinstance(beta, numbers.Real):
        value = Fraction(beta) if exact else float(beta)
    else:
        raise ValueError(f"beta must be a real number, got {beta!r}")
    if not 0 < value <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return value
