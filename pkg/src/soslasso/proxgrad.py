# Accelerated proximal gradient core
"""
proxgrad.py - FISTA iteration shared by the solver and the penalty evaluator

Minimizes F(x) = f(x) + g(x) where f is smooth with an L-Lipschitz gradient
and g is proximable. Two step rules are supported: a fixed 1/L step, and
Beck-Teboulle backtracking that halves the step until the quadratic upper
model holds. With restart enabled the momentum is reset whenever the
objective would increase and a plain proximal step is taken from the last
accepted iterate instead, so the recorded objective never goes up.

Usage:
    result = accelerated_prox_grad(
        smooth=lambda x: (value, gradient),
        nonsmooth=lambda x: penalty_value,
        prox=lambda v, step: prox_of_step_times_g(v),
        x0=np.zeros(d), lipschitz=L)
"""

import logging
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

SmoothFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]
ProxFn = Callable[[np.ndarray, float], np.ndarray]
StopFn = Callable[[np.ndarray, np.ndarray, float], bool]


@dataclass
class ProxGradResult:
    """Outcome of an accelerated proximal gradient run.

    Attributes:
        x: Last accepted iterate, or the best one when restart is off
        objective_trace: Objective at x0 and at every accepted iterate; the
            last entry is always the objective at x
        iterations: Proximal steps taken (accepted or rejected)
        converged: Whether both stopping tests passed
        restarts: Number of momentum resets
        lipschitz: Final Lipschitz estimate (grows under backtracking)
    """
    x: np.ndarray
    objective_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    restarts: int = 0
    lipschitz: float = 0.0


def accelerated_prox_grad(
    smooth: SmoothFn,
    nonsmooth: Callable[[np.ndarray], float],
    prox: ProxFn,
    x0: np.ndarray,
    lipschitz: float,
    max_iters: int = 5000,
    rel_obj_tol: float = 1e-8,
    stop: Optional[StopFn] = None,
    restart: bool = True,
    backtracking: bool = False,
    backtrack_factor: float = 0.5,
) -> ProxGradResult:
    """Run FISTA from x0.

    Args:
        smooth: x -> (f(x), grad f(x))
        nonsmooth: x -> g(x)
        prox: (v, step) -> argmin_z 0.5||z - v||^2 + step * g(z)
        x0: Starting point (copied)
        lipschitz: Initial Lipschitz constant of grad f
        max_iters: Cap on proximal steps
        rel_obj_tol: Relative objective change that triggers the stop test
        stop: Extra test (x_new, x_old, L) -> bool, evaluated only once the
            objective has settled; None means the objective test suffices
        restart: Reset momentum on objective increase
        backtracking: Grow L until the quadratic upper model holds
        backtrack_factor: Step multiplier per backtracking trial

    Returns:
        ProxGradResult for the returned iterate
    """
    if lipschitz <= 0.0:
        lipschitz = 1e-12
    if not 0.0 < backtrack_factor < 1.0:
        raise ValueError(f"backtrack_factor must be in (0, 1): {backtrack_factor}")

    L = float(lipschitz)
    x = np.array(x0, dtype=np.float64, copy=True)
    f_x, _ = smooth(x)
    F_x = f_x + nonsmooth(x)
    trace = [F_x]
    # scale floor for the relative objective test; lets objectives decaying to zero settle
    obj_floor = 1e-4 * abs(F_x)
    best_x, best_F = x, F_x

    y = x
    t = 1.0
    plain_step = True
    restarts = 0
    converged = False
    iterations = 0

    while iterations < max_iters:
        iterations += 1
        f_y, grad_y = smooth(y)
        while True:
            x_new = prox(y - grad_y / L, 1.0 / L)
            f_new, _ = smooth(x_new)
            if not backtracking:
                break
            d = x_new - y
            model = f_y + float(grad_y @ d) + 0.5 * L * float(d @ d)
            if f_new <= model + 1e-12 * abs(f_y):
                break
            L /= backtrack_factor
        F_new = f_new + nonsmooth(x_new)

        if restart and F_new > F_x:
            if plain_step:
                # No descent even without momentum: numerically stalled.
                converged = stop is None or stop(x, x, L)
                logger.debug("stalled at iteration %d, F=%.6e", iterations, F_x)
                break
            restarts += 1
            t = 1.0
            y = x
            plain_step = True
            continue

        t_new = (1.0 + sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        # momentum weight is zero when t == 1, so the next step is plain
        plain_step = t == 1.0
        x_old, F_old = x, F_x
        x, F_x, t = x_new, F_new, t_new
        trace.append(F_x)
        if F_x <= best_F:
            best_x, best_F = x, F_x

        if abs(F_old - F_x) <= rel_obj_tol * max(abs(F_x), obj_floor):
            if stop is None or stop(x, x_old, L):
                converged = True
                break

    if not restart and best_F < F_x:
        x = best_x
        trace.append(best_F)
    return ProxGradResult(x=x, objective_trace=trace, iterations=iterations,
                          converged=converged, restarts=restarts, lipschitz=L)
