# SOSlasso penalty module
"""
penalty.py - The sparse-overlapping-sets norm, its dual bound and its prox

For groups G with weights alpha_G the norm is

    h(x) = inf { sum_G alpha_G ||w_G||_2 + ||w_G||_1 : sum_G w_G = x }

where w_G is supported on G. In duplicated coordinates the constraint is
expand(w) = x and the penalty is separable over segments, so its proximal
operator is the closed-form sparse-group-lasso prox applied per segment:
soft-threshold first, then shrink the group norm.

Modes:
- soslasso: both terms
- group_only: l2 term only (latent overlapping group lasso)
- l1_only: l1 term only (lasso)

Usage:
    cfg = PenaltyConfig()                        # alpha_G = 1, soslasso
    value = eval_disjoint(x, gs, cfg)
    dec = eval_overlapping(x, gs, cfg)           # dec.value, dec.w_dup
    w = prox_full(v, step, duplication_map(gs), cfg)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NoConvergence, OverlappingGroups, UncoveredSupport
from .groups import DuplicationMap, GroupSet, duplication_map, even_split, expand
from .proxgrad import accelerated_prox_grad

try:
    from numba import jit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

    # Fallback: no-op decorator if numba not installed
    def jit(*args, **kwargs):
        def decorator(func):
            return func
        return decorator

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6


class PenaltyMode(Enum):
    """Which terms of the per-group norm are active."""
    SOSLASSO = 'soslasso'
    GROUP_ONLY = 'group_only'
    L1_ONLY = 'l1_only'

    @classmethod
    def parse(cls, name: Union[str, 'PenaltyMode']) -> 'PenaltyMode':
        """Accept enum members, values, and the CLI short forms."""
        if isinstance(name, cls):
            return name
        aliases = {'group': cls.GROUP_ONLY, 'l1': cls.L1_ONLY, 'lasso': cls.L1_ONLY}
        key = str(name).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown penalty mode: {name}") from None


@dataclass
class PenaltyConfig:
    """Penalty weights and mode.

    Attributes:
        alpha: Weight on the l2 term, one value for all groups or one per group
        mode: Active terms
    """
    alpha: Union[float, Sequence[float]] = 1.0
    mode: PenaltyMode = PenaltyMode.SOSLASSO

    def __post_init__(self):
        self.mode = PenaltyMode.parse(self.mode)
        values = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64))
        if values.size == 0 or np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise ValueError(f"alpha must be positive: {self.alpha}")

    @property
    def l1_weight(self) -> float:
        return 0.0 if self.mode is PenaltyMode.GROUP_ONLY else 1.0

    def alphas(self, M: int) -> np.ndarray:
        """Per-group alpha_G."""
        values = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64))
        if values.size == 1:
            return np.full(M, float(values[0]))
        if values.size != M:
            raise DimensionMismatch(f"expected {M} group weights, got {values.size}")
        return values.copy()

    def group_weights(self, M: int) -> np.ndarray:
        """Per-group weight on the l2 term after applying the mode."""
        if self.mode is PenaltyMode.L1_ONLY:
            return np.zeros(M)
        return self.alphas(M)

    def to_dict(self):
        alpha = self.alpha if np.isscalar(self.alpha) else list(self.alpha)
        return {'alpha': alpha, 'mode': self.mode.value}


@dataclass
class Decomposition:
    """Optimal (to tolerance) split of x into per-group latent vectors.

    Attributes:
        dm: Duplication map the segments refer to
        w_dup: Concatenated latent vectors, exactly feasible
        value: Penalty value of w_dup
        residual: ||expand(w) - x|| of the penalty iterate before repair
        stages: Continuation stages used
        iterations: Total proximal steps across stages
    """
    dm: DuplicationMap
    w_dup: np.ndarray
    value: float
    residual: float
    stages: int = 0
    iterations: int = 0

    def latent(self, g: int) -> np.ndarray:
        """Latent vector of group g as a p-vector."""
        out = np.zeros(self.dm.p)
        seg = self.dm.segment_of(g)
        np.add.at(out, self.dm.origin[seg], self.w_dup[seg])
        return out


@dataclass
class NormBreakdown:
    """Sum of group l2 norms, l1 norm, and penalty value for disjoint groups."""
    group_norm_sum: float
    l1_norm: float
    total: float


@jit(nopython=True, cache=True)
def _prox_segments(w: np.ndarray, offsets: np.ndarray, l1_thresh: float,
                   group_thresh: np.ndarray) -> np.ndarray:
    """JIT-compiled per-segment sparse group prox, in place on w.

    Args:
        w: Duplicated vector (modified and returned)
        offsets: Segment boundaries
        l1_thresh: Soft-threshold level applied to every entry
        group_thresh: Group shrink level per segment
    """
    for g in range(len(offsets) - 1):
        start = offsets[g]
        stop = offsets[g + 1]
        sq = 0.0
        for i in range(start, stop):
            v = w[i]
            if l1_thresh > 0.0:
                if v > l1_thresh:
                    v = v - l1_thresh
                elif v < -l1_thresh:
                    v = v + l1_thresh
                else:
                    v = 0.0
                w[i] = v
            sq += v * v
        thr = group_thresh[g]
        if thr > 0.0:
            norm = np.sqrt(sq)
            if norm <= thr:
                for i in range(start, stop):
                    w[i] = 0.0
            else:
                scale = 1.0 - thr / norm
                for i in range(start, stop):
                    w[i] = w[i] * scale
    return w


def prox_group(v: np.ndarray, step: float, alpha_g: float = 1.0,
               mode: Union[str, PenaltyMode] = PenaltyMode.SOSLASSO) -> np.ndarray:
    """Prox of step * (alpha_g ||.||_2 + ||.||_1) for a single group.

    Raises:
        ValueError: step is negative
    """
    if step < 0:
        raise ValueError(f"step must be >= 0: {step}")
    mode = PenaltyMode.parse(mode)
    w = np.array(v, dtype=np.float64, copy=True).ravel()
    l1_thresh = 0.0 if mode is PenaltyMode.GROUP_ONLY else step
    group_thresh = 0.0 if mode is PenaltyMode.L1_ONLY else step * alpha_g
    offsets = np.array([0, w.size], dtype=np.int64)
    return _prox_segments(w, offsets, float(l1_thresh), np.array([group_thresh], dtype=np.float64))


def prox_full(w_dup: np.ndarray, step: float, dm: DuplicationMap,
              cfg: Optional[PenaltyConfig] = None) -> np.ndarray:
    """Prox of step * penalty over the whole duplicated space.

    Raises:
        DimensionMismatch: w_dup does not match the duplication map
    """
    cfg = cfg or PenaltyConfig()
    w = np.array(w_dup, dtype=np.float64, copy=True)
    if w.shape != (dm.total_dup,):
        raise DimensionMismatch(
            f"expected duplicated vector of length {dm.total_dup}, got shape {w.shape}")
    if step < 0:
        raise ValueError(f"step must be >= 0: {step}")
    group_thresh = step * cfg.group_weights(dm.source.M)
    return _prox_segments(w, np.array(dm.offsets), float(step * cfg.l1_weight), group_thresh)


def penalty_value(w_dup: np.ndarray, dm: DuplicationMap,
                  cfg: Optional[PenaltyConfig] = None) -> float:
    """sum_G alpha_G ||w_G||_2 + ||w_G||_1 over duplicated segments."""
    cfg = cfg or PenaltyConfig()
    w = np.asarray(w_dup, dtype=np.float64)
    if w.shape != (dm.total_dup,):
        raise DimensionMismatch(
            f"expected duplicated vector of length {dm.total_dup}, got shape {w.shape}")
    starts = dm.offsets[:-1]
    value = 0.0
    weights = cfg.group_weights(dm.source.M)
    if np.any(weights > 0):
        value += float(weights @ np.sqrt(np.add.reduceat(w * w, starts)))
    if cfg.l1_weight > 0:
        value += cfg.l1_weight * float(np.abs(w).sum())
    return value


def _check_support(x: np.ndarray, gs: GroupSet) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (gs.p,):
        raise DimensionMismatch(f"expected vector of length {gs.p}, got shape {x.shape}")
    outside = np.flatnonzero(~gs.covered_mask() & (x != 0))
    if outside.size:
        raise UncoveredSupport(f"x is nonzero outside every group at {outside.tolist()}")
    return x


def norm_breakdown(x: np.ndarray, gs: GroupSet,
                   cfg: Optional[PenaltyConfig] = None) -> NormBreakdown:
    """Group-norm sum, l1 norm and penalty value for disjoint groups.

    Raises:
        OverlappingGroups: Some coordinate is in two groups
        UncoveredSupport: x is nonzero outside every group
    """
    cfg = cfg or PenaltyConfig()
    if not gs.is_disjoint():
        raise OverlappingGroups(f"groups overlap: {gs!r}")
    x = _check_support(x, gs)
    norms = np.array([np.linalg.norm(x[list(members)]) for members in gs.groups])
    l1 = float(np.abs(x).sum())
    total = float(cfg.group_weights(gs.M) @ norms) + cfg.l1_weight * l1
    return NormBreakdown(float(norms.sum()), l1, total)


def eval_disjoint(x: np.ndarray, gs: GroupSet,
                  cfg: Optional[PenaltyConfig] = None) -> float:
    """Closed-form penalty when groups are pairwise disjoint."""
    return norm_breakdown(x, gs, cfg).total


def eval_overlapping(x: np.ndarray, gs: GroupSet, cfg: Optional[PenaltyConfig] = None,
                     tol: float = DEFAULT_TOL, max_stages: int = 12,
                     max_iters_per_stage: int = 2000) -> Decomposition:
    """Evaluate h(x) by quadratic-penalty continuation over duplicated variables.

    Each stage minimizes 0.5 * rho * ||expand(w) - x||^2 + penalty(w) with
    FISTA, warm-started from the previous stage; rho starts at 1/||x|| and
    grows tenfold until the constraint residual is below tol * ||x||.
    The leftover residual is then shared evenly among each coordinate's
    copies so the returned decomposition is exactly feasible.

    Raises:
        UncoveredSupport: x is nonzero outside every group
        NoConvergence: The residual target was not met after max_stages
    """
    cfg = cfg or PenaltyConfig()
    x = _check_support(x, gs)
    dm = duplication_map(gs)
    x_norm = float(np.linalg.norm(x))

    if x_norm == 0.0:
        return Decomposition(dm, np.zeros(dm.total_dup), 0.0, 0.0)
    if gs.is_disjoint():
        w = x[dm.origin].copy()
        return Decomposition(dm, w, penalty_value(w, dm, cfg), 0.0)

    w = even_split(dm, x)
    max_count = float(dm.counts.max())
    rho = 1.0 / x_norm
    residual = np.inf
    iterations = 0
    # scale-free target, tighter than tol * (1 + ||x||)
    target = tol * x_norm

    def nonsmooth(v):
        return penalty_value(v, dm, cfg)

    def prox(v, step):
        return prox_full(v, step, dm, cfg)

    for stage in range(1, max_stages + 1):
        def smooth(v, rho=rho):
            r = expand(dm, v) - x
            return 0.5 * rho * float(r @ r), rho * r[dm.origin]

        def settled(v_new, v_old, L):
            return float(np.linalg.norm(v_new - v_old)) <= 1e-2 * tol * float(np.linalg.norm(v_new))

        result = accelerated_prox_grad(
            smooth, nonsmooth, prox, w, lipschitz=rho * max_count,
            max_iters=max_iters_per_stage, rel_obj_tol=1e-4 * tol, stop=settled)
        w = result.x
        iterations += result.iterations
        residual = float(np.linalg.norm(expand(dm, w) - x))
        logger.debug("stage %d rho=%.3e residual=%.3e iterations=%d",
                     stage, rho, residual, result.iterations)
        if residual <= target:
            break
        rho *= 10.0
    else:
        raise NoConvergence(
            f"decomposition residual {residual:.3e} above {target:.3e} after {max_stages} stages",
            iterations=iterations, residual=residual)

    leftover = x - expand(dm, w)
    w = w + (leftover / dm.counts)[dm.origin]
    return Decomposition(dm, w, penalty_value(w, dm, cfg), residual, stage, iterations)


def dual_norm_bound(u: np.ndarray, gs: GroupSet,
                    cfg: Optional[PenaltyConfig] = None) -> float:
    """Upper bound on the dual norm h*(u).

    Without cfg (or with soslasso mode and alpha_G = 1) this is
    max_G 0.5 * ||u_G||_2, overlapped coordinates counted in every group
    containing them. Other settings use max_G ||u_G||_2 / (1 + alpha_G) for
    soslasso, the exact max_G ||u_G||_2 / alpha_G for group_only, and the
    exact max |u_j| over covered coordinates for l1_only.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (gs.p,):
        raise DimensionMismatch(f"expected vector of length {gs.p}, got shape {u.shape}")
    cfg = cfg or PenaltyConfig()
    if cfg.mode is PenaltyMode.L1_ONLY:
        covered = gs.covered_mask()
        return float(np.abs(u[covered]).max()) if covered.any() else 0.0
    dm = duplication_map(gs)
    norms = np.sqrt(np.add.reduceat(u[dm.origin] ** 2, dm.offsets[:-1]))
    alphas = cfg.alphas(gs.M)
    if cfg.mode is PenaltyMode.GROUP_ONLY:
        return float(np.max(norms / alphas))
    return float(np.max(norms / (1.0 + alphas)))
