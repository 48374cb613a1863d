"""Exact volume coefficients attached to partition paths.

Each partition path carries a homogeneous linear constraint system on p
integer variables: block by block, the sum of the variables at the block's
positions must equal the sum at their circular successors. The number of
solutions inside the cube [-M..M]^p, written zeta_M here, is a polynomial
in (2M+1) of degree p - k + 1, and its leading coefficient is the path's
volume coefficient v, a rational number in [0, 1]. v = 1 exactly when the
path reduces to the empty path; crossing survivors have v <= 2/3.

The module computes zeta_M exactly with integer arithmetic, recovers v by
interpolating the polynomial through D + 1 exact counts (then verifying it
on two more), and offers an independent floating-point cross-check that
evaluates v as an iterated integral of products of sinc factors.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combinatorics import PartitionPath, PathLike, reduce_path
from .errors import ConvergenceError, IntegrityError


@dataclass(frozen=True)
class ConstraintSystem:
    """Integer constraint matrix of a partition path.

    Row j says: the variables at block j's positions sum to the same value
    as the variables at those positions' circular successors. Entries lie
    in {-1, 0, 1}, every column sums to zero, and the rank is exactly k - 1
    (the k rows always carry one redundancy).
    """

    W: tuple
    p: int
    k: int

    def as_array(self) -> np.ndarray:
        return np.array(self.W, dtype=np.int64)


@dataclass(frozen=True)
class VolumeResult:
    """Exact volume coefficient plus the interpolation evidence behind it."""

    exact: Fraction
    degree: int
    fit_points: tuple


def constraint_system(path: PathLike) -> ConstraintSystem:
    """Build the k x p constraint matrix of a non-empty partition path."""
    path = PartitionPath.of(path)
    if path.p == 0:
        raise ValueError("constraint system needs a non-empty path")
    p, k = path.p, path.k
    labels = path.labels
    rows = []
    for j in range(1, k + 1):
        row = [0] * p
        for i in range(p):
            if labels[i] == j:
                row[i] += 1
            if labels[i - 1] == j:  # circular predecessor (labels[-1] wraps)
                row[i] -= 1
        rows.append(tuple(row))
    return ConstraintSystem(W=tuple(rows), p=p, k=k)


def constraint_rank(system: ConstraintSystem) -> int:
    """Rank of the constraint matrix over the rationals, computed exactly."""
    return _exact_rank([list(r) for r in system.W])


def _exact_rank(rows) -> int:
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = 1 / m[rank][col]
        m[rank] = [x * inv for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


# --- exact lattice counting -------------------------------------------------


def zeta_count(path: PathLike, M: int) -> int:
    """Number of integer solutions of the constraint system inside [-M..M]^p.

    Counted exactly by dynamic programming over the partial sums of k - 1
    independent constraint rows: each variable contributes one sweep over
    its 2M+1 admissible values, and a row's partial-sum axis is only carried
    while the sweep is inside that row's support. The full (2M+1)^p grid is
    never touched.
    """
    path = PartitionPath.of(path)
    if M < 0:
        raise ValueError(f"M must be non-negative, got {M}")
    p = path.p
    if p == 0:
        return 1
    k = path.k
    if k == 1:
        # The single constraint telescopes to 0 = 0 around the circle.
        return (2 * M + 1) ** p
    system = constraint_system(path)
    # Any one row is implied by the others; dropping the block that contains
    # position p removes the only row whose support wraps past the end,
    # which keeps the active windows short.
    drop = path.labels[-1] - 1
    kept = [np.array(system.W[j], dtype=np.int64) for j in range(k) if j != drop]
    kept = [row for row in kept if np.any(row)]

    dtype = object if (2 * M + 1) ** p >= 2**62 else np.int64
    supports = [np.nonzero(row)[0] for row in kept]
    starts = [int(s[0]) for s in supports]
    ends = [int(s[-1]) for s in supports]

    state = np.ones((), dtype=dtype)
    active = []  # indices into kept, in axis order
    lo = []
    hi = []
    rem = []  # remaining absolute coefficient mass of each active row
    free_exponent = 0

    for col in range(p):
        for j in range(len(kept)):
            if starts[j] == col:
                state = state[..., np.newaxis]
                active.append(j)
                lo.append(0)
                hi.append(0)
                rem.append(int(np.abs(kept[j]).sum()))
        coeffs = [int(kept[j][col]) for j in active]
        if not any(coeffs):
            free_exponent += 1
            continue

        new_lo, new_hi = [], []
        for a, c in enumerate(coeffs):
            r_after = rem[a] - abs(c)
            nl = max(lo[a] - abs(c) * M, -r_after * M)
            nh = min(hi[a] + abs(c) * M, r_after * M)
            if nl > nh:
                return 0  # partial sum can no longer return to zero
            new_lo.append(nl)
            new_hi.append(nh)
        new_state = np.zeros(
            [h - l + 1 for l, h in zip(new_lo, new_hi)], dtype=dtype
        )
        for t in range(-M, M + 1):
            src, dst = [], []
            feasible = True
            for a, c in enumerate(coeffs):
                s = t * c
                d0 = max(lo[a] + s, new_lo[a])
                d1 = min(hi[a] + s, new_hi[a])
                if d0 > d1:
                    feasible = False
                    break
                dst.append(slice(d0 - new_lo[a], d1 - new_lo[a] + 1))
                src.append(slice(d0 - s - lo[a], d1 - s - lo[a] + 1))
            if feasible:
                new_state[tuple(dst)] += state[tuple(src)]
        state = new_state
        lo, hi = new_lo, new_hi
        rem = [r - abs(c) for r, c in zip(rem, coeffs)]

        for a in range(len(active) - 1, -1, -1):
            if rem[a] == 0:  # axis has collapsed onto partial sum 0
                state = state.squeeze(axis=a)
                del active[a], lo[a], hi[a], rem[a]

    count = int(state.item() if state.ndim == 0 else state.sum())
    return count * (2 * M + 1) ** free_exponent


# --- exact volume via polynomial interpolation ------------------------------


def _poly_coeffs(xs, ys):
    """Exact power-basis coefficients (ascending) through the given points."""
    xs = [Fraction(x) for x in xs]
    table = [Fraction(y) for y in ys]
    newton = [table[0]]
    for level in range(1, len(xs)):
        table = [
            (table[i + 1] - table[i]) / (xs[i + level] - xs[i])
            for i in range(len(table) - 1)
        ]
        newton.append(table[0])
    poly = [newton[-1]]
    for i in range(len(xs) - 2, -1, -1):
        shifted = [Fraction(0)] + poly
        poly = [a - xs[i] * b for a, b in zip(shifted[:-1], poly)] + [shifted[-1]]
        poly[0] += newton[i]
    return poly


def _poly_eval(coeffs, x):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def volume_exact(path: PathLike) -> VolumeResult:
    """Exact volume coefficient of a path.

    Interpolates zeta_M as a polynomial in (2M+1) through M = 0..D with
    D = p - k + 1, verifies the fit on M = D+1 and D+2, and returns the
    leading coefficient. The empty path has volume 1 by convention.
    """
    path = PartitionPath.of(path)
    if path.p == 0:
        return VolumeResult(exact=Fraction(1), degree=0, fit_points=((0, 1),))
    degree = path.p - path.k + 1
    points = [(M, zeta_count(path, M)) for M in range(degree + 1)]
    coeffs = _poly_coeffs([2 * M + 1 for M, _ in points], [z for _, z in points])
    for M in (degree + 1, degree + 2):
        z = zeta_count(path, M)
        predicted = _poly_eval(coeffs, 2 * M + 1)
        if predicted != z:
            raise IntegrityError(
                f"lattice count mismatch at M={M}: counted {z}, "
                f"degree-{degree} fit predicts {predicted}"
            )
        points.append((M, z))
    exact = coeffs[-1]
    if not 0 <= exact <= 1:
        raise IntegrityError(f"volume coefficient {exact} outside [0, 1]")
    return VolumeResult(exact=exact, degree=degree, fit_points=tuple(points))


_volume_cache: dict = {}
_cache_lock = threading.Lock()


def volume_of(path: PathLike) -> Fraction:
    """Volume coefficient of an arbitrary path, reducing first.

    Memoized on the reduced form, which collapses the bulk of an order-p
    catalog onto a short list of distinct survivors.
    """
    reduced = reduce_path(path)
    key = reduced.labels
    cached = _volume_cache.get(key)
    if cached is None:
        cached = volume_exact(reduced).exact
        with _cache_lock:
            _volume_cache[key] = cached
    return cached


def clear_volume_cache() -> None:
    with _cache_lock:
        _volume_cache.clear()


# --- independent quadrature cross-check --------------------------------------

# Grid evaluations allowed per dimension before giving up. Every refinement
# doubles the truncation half-width and halves the step, so the point count
# per axis quadruples each round.
_REFINEMENT_BUDGET = {1: 5, 2: 3, 3: 2}
_BASE_HALF_WIDTH = 8.0
_BASE_POINTS_PER_UNIT = 64
_CHUNK_ROWS = 2048


def volume_quadrature(path: PathLike, tolerance: float) -> float:
    """Volume coefficient as a truncated sinc-product integral.

    The constraint system's solution density equals the integral over
    R^(k-1) of the product of sinc(y_a - y_b) over circularly consecutive
    label pairs (a, b), with the last label's variable pinned to zero. The
    integral is evaluated on a midpoint grid over [-Y, Y]^(k-1), doubling Y
    and halving the step until two successive estimates agree within
    ``tolerance``. Only k - 1 <= 3 is supported.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    path = PartitionPath.of(path)
    if path.p == 0:
        raise ValueError("quadrature needs a non-empty path")
    if reduce_path(path).labels != path.labels:
        raise ValueError("path must be fully reduced before quadrature")
    dim = path.k - 1
    if dim > 3:
        raise ValueError(f"quadrature dimension k-1 = {dim} exceeds the supported 3")

    uni, biv = _sinc_exponents(path)
    half_width = _BASE_HALF_WIDTH
    per_unit = _BASE_POINTS_PER_UNIT
    previous = None
    for _ in range(_REFINEMENT_BUDGET[dim]):
        estimate = _grid_estimate(dim, uni, biv, half_width, per_unit)
        if previous is not None and abs(estimate - previous) < tolerance:
            return estimate
        previous = estimate
        half_width *= 2
        per_unit *= 2
    raise ConvergenceError(
        f"quadrature did not reach tolerance {tolerance} within "
        f"{_REFINEMENT_BUDGET[dim]} refinements (last estimates "
        f"{previous} and {estimate})",
        estimates=(previous, estimate),
    )


def _sinc_exponents(path):
    """Exponent of each sinc factor, keyed by unordered label pair.

    Pairs touching the pinned label k become univariate factors. Reduced
    paths never pair a label with itself (that would be an adjacency).
    """
    labels, p, k = path.labels, path.p, path.k
    uni, biv = {}, {}
    for i in range(p):
        a, b = labels[i], labels[(i + 1) % p]
        if a > b:
            a, b = b, a
        if b == k:
            uni[a] = uni.get(a, 0) + 1
        else:
            biv[(a, b)] = biv.get((a, b), 0) + 1
    return uni, biv


def _grid_estimate(dim, uni, biv, half_width, per_unit):
    h = 1.0 / per_unit
    n = int(round(2 * half_width * per_unit))
    y = -half_width + (np.arange(n) + 0.5) * h
    u = [_sinc_power(y, uni.get(var, 0)) for var in range(1, dim + 1)]

    if dim == 1:
        return h * float(u[0].sum())

    if dim == 2:
        e12 = biv.get((1, 2), 0)
        return h * h * _pair_sum(y, u[0], u[1], e12)

    e12 = biv.get((1, 2), 0)
    e13 = biv.get((1, 3), 0)
    e23 = biv.get((2, 3), 0)
    if e13 and e23:
        w23 = _sinc_power(y[:, None] - y[None, :], e23) * u[2][None, :]  # (y2, y3)
        total = 0.0
        for s in range(0, n, _CHUNK_ROWS):
            y1 = y[s : s + _CHUNK_ROWS]
            inner = _sinc_power(y1[:, None] - y[None, :], e13) @ w23.T  # (y1, y2)
            block = u[0][s : s + _CHUNK_ROWS, None] * u[1][None, :] * inner
            if e12:
                block = block * _sinc_power(y1[:, None] - y[None, :], e12)
            total += float(block.sum())
        return h**3 * total
    if e13:  # y3 couples to y1 only
        g1 = _matvec_sinc(y, u[2], e13)
        return h**3 * _pair_sum(y, u[0] * g1, u[1], e12)
    if e23:  # y3 couples to y2 only
        g2 = _matvec_sinc(y, u[2], e23)
        return h**3 * _pair_sum(y, u[0], u[1] * g2, e12)
    return h**3 * float(u[2].sum()) * _pair_sum(y, u[0], u[1], e12)


def _sinc_power(x, exponent):
    if exponent == 0:
        return np.ones_like(x)
    f = np.sinc(x)
    return f if exponent == 1 else f**exponent


def _matvec_sinc(y, weights, exponent):
    """g(s) = sum_t sinc(s - t)^exponent * weights(t), chunked over s."""
    out = np.empty_like(y)
    for s in range(0, len(y), _CHUNK_ROWS):
        block = _sinc_power(y[s : s + _CHUNK_ROWS, None] - y[None, :], exponent)
        out[s : s + _CHUNK_ROWS] = block @ weights
    return out


def _pair_sum(y, u1, u2, exponent):
    """sum over (s, t) of u1(s) u2(t) sinc(s - t)^exponent, chunked."""
    if exponent == 0:
        return float(u1.sum()) * float(u2.sum())
    total = 0.0
    for s in range(0, len(y), _CHUNK_ROWS):
        block = _sinc_power(y[s : s + _CHUNK_ROWS, None] - y[None, :], exponent)
        total += float(u1[s : s + _CHUNK_ROWS] @ block @ u2)
    return total
