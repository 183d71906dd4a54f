# Group structures for the SOSlasso library
"""
groups.py - Overlapping group sets, task replication and covariate duplication

A GroupSet is an ordered list of (possibly overlapping) index sets over a
coefficient space of dimension p. Coordinates are 0-based everywhere.

Covariate duplication turns the overlapping problem into a disjoint one:
every coordinate gets one copy per group containing it, and the copies of
group g occupy a contiguous segment of the duplicated space. Summing the
copies back (expand) recovers the original coordinates, and replicating the
design columns (lift_design) makes the duplicated least-squares problem
identical to the original one.

Usage:
    gs = chain_groups(p=14, B=6, shift=4)       # {0-5}, {4-9}, {8-13}
    layout = replicate_across_tasks(gs, T=3)
    dm = duplication_map(gs)
    x = expand(dm, w_dup)
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateWithinGroup,
    EmptyGroup,
    GeometryMismatch,
    IndexOutOfRange,
    InputError,
    UncoveredSupport,
)


@dataclass(frozen=True, eq=False)
class GroupSet:
    """Validated, immutable collection of index groups.

    Attributes:
        p: Coefficient-space dimension
        groups: Tuple of M strictly increasing index tuples
    """
    p: int
    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.p < 1:
            raise DimensionMismatch(f"p must be >= 1: {self.p}")
        if len(self.groups) == 0:
            raise EmptyGroup("group list is empty")
        for g, members in enumerate(self.groups):
            if len(members) == 0:
                raise EmptyGroup(f"group {g} is empty")
            if members[0] < 0 or members[-1] >= self.p:
                bad = [i for i in members if i < 0 or i >= self.p]
                raise IndexOutOfRange(
                    f"group {g} has indices outside [0, {self.p}): {bad}")
            for a, b in zip(members, members[1:]):
                if b == a:
                    raise DuplicateWithinGroup(
                        f"group {g} repeats coordinate {a}")
                if b < a:
                    raise ValueError(f"group {g} is not sorted: {members}")

    @property
    def M(self) -> int:
        """Number of groups."""
        return len(self.groups)

    @property
    def B(self) -> int:
        """Size of the largest group."""
        return max(len(members) for members in self.groups)

    @property
    def sizes(self) -> np.ndarray:
        """Group sizes in group order."""
        return np.array([len(members) for members in self.groups], dtype=np.int64)

    def multiplicity(self) -> np.ndarray:
        """Number of groups containing each coordinate."""
        counts = np.zeros(self.p, dtype=np.int64)
        for members in self.groups:
            counts[list(members)] += 1
        return counts

    def covered_mask(self) -> np.ndarray:
        """Boolean mask of coordinates inside at least one group."""
        return self.multiplicity() > 0

    def covers_all(self) -> bool:
        """True when every coordinate in [0, p) lies in some group."""
        return bool(np.all(self.covered_mask()))

    def is_disjoint(self) -> bool:
        """True when no coordinate is shared by two groups."""
        return bool(np.all(self.multiplicity() <= 1))

    def reordered(self, order: Sequence[int]) -> 'GroupSet':
        """Same groups in a different order."""
        if sorted(order) != list(range(self.M)):
            raise ValueError(f"order must be a permutation of 0..{self.M - 1}")
        return GroupSet(self.p, tuple(self.groups[g] for g in order))

    def to_dict(self) -> Dict[str, object]:
        """JSON-ready representation."""
        return {'p': self.p, 'groups': [list(members) for members in self.groups]}

    def __repr__(self) -> str:
        return f"GroupSet(p={self.p}, M={self.M}, B={self.B})"


def build_group_set(groups: Iterable[Iterable[int]], p: int) -> GroupSet:
    """Validate raw index lists and build a GroupSet.

    Indices inside a group are sorted; group order is preserved.

    Raises:
        IndexOutOfRange: Some index is negative or >= p
        EmptyGroup: A group (or the whole list) is empty
        DuplicateWithinGroup: A coordinate repeats inside one group
    """
    if p < 1:
        raise DimensionMismatch(f"p must be >= 1: {p}")
    normalized = []
    for g, members in enumerate(groups):
        members = sorted(int(i) for i in members)
        if not members:
            raise EmptyGroup(f"group {g} is empty")
        bad = [i for i in members if i < 0 or i >= p]
        if bad:
            raise IndexOutOfRange(f"group {g} has indices outside [0, {p}): {bad}")
        for a, b in zip(members, members[1:]):
            if a == b:
                raise DuplicateWithinGroup(f"group {g} repeats coordinate {a}")
        normalized.append(tuple(members))
    if not normalized:
        raise EmptyGroup("group list is empty")
    return GroupSet(p, tuple(normalized))


def chain_groups(p: int, B: int, shift: int) -> GroupSet:
    """Contiguous groups of size B whose starts advance by shift.

    Group i is {i*shift, ..., i*shift + B - 1}; the last group ends at p - 1.

    Raises:
        GeometryMismatch: (p - B) is negative or not divisible by shift
    """
    if B < 1:
        raise GeometryMismatch(f"B must be >= 1: {B}")
    if shift < 1:
        raise GeometryMismatch(f"shift must be >= 1: {shift}")
    if p < B or (p - B) % shift != 0:
        raise GeometryMismatch(
            f"(p - B) must be a nonnegative multiple of shift: p={p}, B={B}, shift={shift}")
    count = (p - B) // shift + 1
    return GroupSet(p, tuple(
        tuple(range(i * shift, i * shift + B)) for i in range(count)))


def singleton_groups(p: int) -> GroupSet:
    """One group per coordinate (the lasso layout)."""
    return GroupSet(p, tuple((j,) for j in range(p)))


def grid_groups(shape: Sequence[int], block: Sequence[int],
                shift: Sequence[int]) -> GroupSet:
    """Overlapping box neighbourhoods over a 3-D volume flattened in C order.

    Args:
        shape: Volume size per axis
        block: Box size per axis
        shift: Start spacing per axis

    Raises:
        GeometryMismatch: Axis counts differ or (n - b) is not divisible by s
    """
    if not (len(shape) == len(block) == len(shift)):
        raise GeometryMismatch(
            f"shape, block and shift must have equal length: {shape}, {block}, {shift}")
    starts_per_axis = []
    for axis, (n, b, s) in enumerate(zip(shape, block, shift)):
        if n < 1 or b < 1 or s < 1:
            raise GeometryMismatch(f"axis {axis} sizes must be >= 1: n={n}, b={b}, s={s}")
        if n < b or (n - b) % s != 0:
            raise GeometryMismatch(
                f"axis {axis}: (n - b) must be a nonnegative multiple of s: n={n}, b={b}, s={s}")
        starts_per_axis.append(range(0, n - b + 1, s))

    p = int(np.prod(shape))
    groups = []
    for corner in product(*starts_per_axis):
        ranges = [np.arange(c, c + b) for c, b in zip(corner, block)]
        mesh = np.meshgrid(*ranges, indexing='ij')
        flat = np.ravel_multi_index([m.ravel() for m in mesh], tuple(shape))
        groups.append(tuple(int(i) for i in np.sort(flat)))
    return GroupSet(p, tuple(groups))


@dataclass(frozen=True, eq=False)
class DuplicationMap:
    """Correspondence between duplicated and original coordinates.

    Attributes:
        source: GroupSet the map was built from
        total_dup: Dimension of the duplicated space (sum of group sizes)
        offsets: Segment boundaries, length M + 1; segment g is
            [offsets[g], offsets[g + 1])
        origin: Original coordinate of every duplicated coordinate
    """
    source: GroupSet
    total_dup: int
    offsets: np.ndarray
    origin: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def segments(self) -> List[Tuple[int, int]]:
        """Per-group (start, stop) ranges in duplicated space."""
        return [(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def segment_of(self, g: int) -> slice:
        return slice(int(self.offsets[g]), int(self.offsets[g + 1]))


def duplication_map(gs: GroupSet) -> DuplicationMap:
    """Lay the groups out as consecutive segments of a duplicated space."""
    sizes = gs.sizes
    offsets = np.zeros(gs.M + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    origin = np.concatenate([np.asarray(members, dtype=np.int64) for members in gs.groups])
    counts = np.bincount(origin, minlength=gs.p).astype(np.int64)
    for arr in (offsets, origin, counts):
        arr.flags.writeable = False
    return DuplicationMap(gs, int(offsets[-1]), offsets, origin, counts)


def expand(dm: DuplicationMap, w_dup: np.ndarray) -> np.ndarray:
    """Sum duplicated copies back onto their original coordinates.

    Raises:
        DimensionMismatch: w_dup does not have total_dup entries
    """
    w_dup = np.asarray(w_dup, dtype=np.float64)
    if w_dup.shape != (dm.total_dup,):
        raise DimensionMismatch(
            f"expected duplicated vector of length {dm.total_dup}, got shape {w_dup.shape}")
    return np.bincount(dm.origin, weights=w_dup, minlength=dm.p)


def restrict(dm: DuplicationMap, x: np.ndarray) -> np.ndarray:
    """Copy x onto every duplicated coordinate (the adjoint of expand)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dm.p,):
        raise DimensionMismatch(f"expected vector of length {dm.p}, got shape {x.shape}")
    return x[dm.origin]


def even_split(dm: DuplicationMap, x: np.ndarray) -> np.ndarray:
    """Feasible decomposition sharing each coordinate evenly among its groups.

    Raises:
        UncoveredSupport: x is nonzero on a coordinate in no group
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dm.p,):
        raise DimensionMismatch(f"expected vector of length {dm.p}, got shape {x.shape}")
    uncovered = np.flatnonzero((dm.counts == 0) & (x != 0))
    if uncovered.size:
        raise UncoveredSupport(f"coordinates outside every group: {uncovered.tolist()}")
    return x[dm.origin] / dm.counts[dm.origin]


def lift_design(dm: DuplicationMap, design: np.ndarray) -> np.ndarray:
    """Replicate design columns so that lifted @ w == design @ expand(w).

    Raises:
        DimensionMismatch: design does not have p columns
    """
    design = np.asarray(design, dtype=np.float64)
    if design.ndim != 2 or design.shape[1] != dm.p:
        raise DimensionMismatch(
            f"design must have {dm.p} columns, got shape {design.shape}")
    return design[:, dm.origin]


@dataclass(frozen=True, eq=False)
class TaskLayout:
    """Group structure replicated across T tasks.

    Coordinate t*p + j of the stacked vector is coordinate j of task t.

    Attributes:
        T: Number of tasks
        p: Per-task dimension
        base: Per-task GroupSet
        replicated: GroupSet over T*p coordinates, one group per base group
        dm: Duplication map of the replicated GroupSet
        base_dm: Duplication map of the base GroupSet
    """
    T: int
    p: int
    base: GroupSet
    replicated: GroupSet
    dm: DuplicationMap = field(repr=False)
    base_dm: DuplicationMap = field(repr=False)

    @property
    def M(self) -> int:
        return self.base.M

    def stack(self, matrix: np.ndarray) -> np.ndarray:
        """p x T coefficient matrix -> stacked T*p vector."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (self.p, self.T):
            raise DimensionMismatch(
                f"expected a {self.p} x {self.T} matrix, got shape {matrix.shape}")
        return matrix.T.reshape(-1)

    def unstack(self, x: np.ndarray) -> np.ndarray:
        """Stacked T*p vector -> p x T coefficient matrix."""
        return np.asarray(x, dtype=np.float64).reshape(self.T, self.p).T.copy()


def replicate_across_tasks(gs: GroupSet, T: int) -> TaskLayout:
    """Aggregate each group's rows across T tasks into one multitask group."""
    if T < 1:
        raise InputError(f"T must be >= 1: {T}")
    p = gs.p
    replicated = GroupSet(T * p, tuple(
        tuple(t * p + j for t in range(T) for j in members)
        for members in gs.groups))
    return TaskLayout(T, p, gs, replicated, duplication_map(replicated), duplication_map(gs))
