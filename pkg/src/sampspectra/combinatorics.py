"""Set partitions of {1..p} encoded as restricted-growth label paths.

A partition is carried as the sequence ``(w_1, ..., w_p)`` where ``w_i`` is
the index of the block containing element ``i`` and blocks are numbered by
first appearance, so ``w_1 = 1`` and ``w_{i+1} <= 1 + max(w_1..w_i)``.
Alongside enumeration and the classical counting sequences (Bell, Stirling,
Narayana, Catalan) this module implements the volume-preserving reduction
rules that strip singleton blocks and circularly adjacent repeats from a
path. A path that reduces to the empty path is exactly a non-crossing
partition; whatever survives reduction determines the path's volume
coefficient (see :mod:`sampspectra.volumes`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from .errors import CapacityError

#: Largest partition order accepted by the enumeration entry points.
#: B(12) = 4,213,597 paths; a fully materialized catalog stays under 1 GB.
MAX_ORDER = 12

Labels = "tuple[int, ...]"
PathLike = Union["PartitionPath", Sequence[int]]


@dataclass(frozen=True)
class PartitionPath:
    """A set partition of {1..p} in restricted-growth encoding.

    ``labels`` may be empty (the partition of the empty set), which is the
    fixed point of :func:`reduce_path` for non-crossing partitions.
    """

    labels: tuple

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        running_max = 0
        for pos, v in enumerate(labels, start=1):
            if v < 1:
                raise ValueError(f"label {v} at position {pos} is not a positive integer")
            if v > running_max + 1:
                raise ValueError(
                    f"label {v} at position {pos} breaks restricted growth "
                    f"(previous maximum is {running_max})"
                )
            running_max = max(running_max, v)

    @classmethod
    def of(cls, path: PathLike) -> "PartitionPath":
        if isinstance(path, cls):
            return path
        return cls(tuple(path))

    @property
    def p(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        """Number of blocks (0 for the empty path)."""
        return max(self.labels) if self.labels else 0

    def blocks(self) -> list:
        """Positions (1-based) of each block, indexed by block label - 1."""
        out = [[] for _ in range(self.k)]
        for pos, v in enumerate(self.labels, start=1):
            out[v - 1].append(pos)
        return [tuple(b) for b in out]

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __str__(self) -> str:
        return "[" + ",".join(str(v) for v in self.labels) + "]"


@dataclass(frozen=True)
class PartitionCatalog:
    """All partitions of a given order, grouped by block count."""

    p: int
    paths: tuple

    def by_block_count(self, k: int) -> list:
        return [w for w in self.paths if w.k == k]

    def counts_by_block_count(self) -> dict:
        out = {}
        for w in self.paths:
            out[w.k] = out.get(w.k, 0) + 1
        return out

    def __len__(self) -> int:
        return len(self.paths)


def iter_partition_paths(p: int) -> Iterator[tuple]:
    """Yield every restricted-growth sequence of length ``p`` in lexicographic order."""
    if p < 0:
        raise ValueError(f"order must be non-negative, got {p}")
    if p == 0:
        yield ()
        return
    w = [1] * p
    mx = [1] * p  # mx[i] = max(w[0..i])
    while True:
        yield tuple(w)
        i = p - 1
        while i > 0 and w[i] == mx[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        w[i] += 1
        mx[i] = max(mx[i - 1], w[i])
        for j in range(i + 1, p):
            w[j] = 1
            mx[j] = mx[i]


def enumerate_partitions(p: int, max_order: int = MAX_ORDER) -> PartitionCatalog:
    """Materialize the catalog of all partitions of order ``p``.

    Raises :class:`CapacityError` beyond ``max_order``; the catalog size is
    the Bell number B(p), which grows too fast to materialize casually.
    """
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    if p > max_order:
        raise CapacityError(
            f"order {p} exceeds the configured maximum {max_order} "
            f"(B({p}) = {bell(p)} paths)"
        )
    paths = tuple(PartitionPath(w) for w in iter_partition_paths(p))
    return PartitionCatalog(p=p, paths=paths)


# --- counting sequences ---------------------------------------------------


def stirling2(p: int, k: int) -> int:
    """Stirling number of the second kind: partitions of {1..p} into k blocks."""
    _check_pk(p, k)
    total = sum(
        (-1) ** i * math.comb(k, i) * (k - i) ** p for i in range(k + 1)
    )
    return total // math.factorial(k)


def bell(p: int) -> int:
    """Bell number: partitions of {1..p} into any number of blocks."""
    if p < 0:
        raise ValueError(f"order must be non-negative, got {p}")
    if p == 0:
        return 1
    return sum(stirling2(p, k) for k in range(1, p + 1))


def narayana(p: int, k: int) -> int:
    """Narayana number: non-crossing partitions of {1..p} into k blocks."""
    _check_pk(p, k)
    num = math.comb(p - 1, k - 1) * math.comb(p, k - 1)
    q, rem = divmod(num, k)
    assert rem == 0
    return q


def catalan(p: int) -> int:
    """Catalan number: non-crossing partitions of {1..p}."""
    if p < 0:
        raise ValueError(f"order must be non-negative, got {p}")
    return math.comb(2 * p, p) // (p + 1)


def _check_pk(p, k):
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    if not 1 <= k <= p:
        raise ValueError(f"block count {k} out of range 1..{p}")


# --- crossing test --------------------------------------------------------


def is_crossing(path: PathLike) -> bool:
    """True when some a < b < c < d has a,c in one block and b,d in another."""
    path = PartitionPath.of(path)
    blocks = path.blocks()
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if _interleaved(blocks[i], blocks[j]):
                return True
    return False


def _interleaved(a, b):
    # Merge the two ascending position tuples and count membership runs;
    # four or more runs means the blocks cross.
    ia = ib = 0
    runs = 0
    last = None
    while ia < len(a) or ib < len(b):
        if ib >= len(b) or (ia < len(a) and a[ia] < b[ib]):
            cur = 0
            ia += 1
        else:
            cur = 1
            ib += 1
        if cur != last:
            runs += 1
            last = cur
            if runs >= 4:
                return True
    return False


# --- reduction ------------------------------------------------------------


@dataclass(frozen=True)
class ReductionStep:
    """One row of a reduction trace.

    ``rule``/``index`` describe the removal applied to ``path`` (1-based
    element index); both are None on the terminal step where no rule applies.
    """

    path: PartitionPath
    rule: int
    index: int


def _relabel(labels):
    """Renumber labels by first appearance so the result is restricted-growth."""
    seen = {}
    out = []
    for v in labels:
        if v not in seen:
            seen[v] = len(seen) + 1
        out.append(seen[v])
    return tuple(out)


def _find_singleton(labels):
    counts = {}
    for v in labels:
        counts[v] = counts.get(v, 0) + 1
    for pos, v in enumerate(labels, start=1):
        if counts[v] == 1:
            return pos
    return None


def _find_adjacency(labels):
    # Scan i = 2..p first and the wrap pair (p, 1) by its first element,
    # then i = 1. Removing position 1 forces a full relabel, so it is the
    # choice of last resort.
    p = len(labels)
    for i in range(2, p + 1):
        if labels[i - 1] == labels[i % p]:
            return i
    if p >= 2 and labels[0] == labels[1]:
        return 1
    return None


def reduction_trace(path: PathLike) -> list:
    """Apply the two reduction rules to exhaustion, recording every step.

    Rule 1 removes an element whose block is a singleton; rule 2 removes an
    element whose circular successor lies in the same block. Rule 1 is
    scanned first (lowest index), then rule 2, and the survivor is
    relabelled to canonical restricted-growth form after each removal. The
    final step carries the fully reduced path and no rule.
    """
    cur = PartitionPath.of(path)
    steps = []
    while True:
        idx = _find_singleton(cur.labels)
        rule = 1 if idx is not None else None
        if idx is None:
            idx = _find_adjacency(cur.labels)
            rule = 2 if idx is not None else None
        steps.append(ReductionStep(cur, rule, idx))
        if rule is None:
            return steps
        trimmed = cur.labels[: idx - 1] + cur.labels[idx:]
        cur = PartitionPath(_relabel(trimmed))


def reduce_path(path: PathLike) -> PartitionPath:
    """Fully reduced form of ``path``; empty exactly for non-crossing paths."""
    return reduction_trace(path)[-1].path
