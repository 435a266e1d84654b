"""Preference estimation at termination and the final ranking.

The estimator solves the min-norm separation problem

    minimize ||p||^2   s.t.   delta_c . p >= margin  for every constraint,
                              p >= 0 componentwise

via projected gradient descent on the soft-margin objective

    ||p||^2 + soft_penalty * sum_c max(0, margin - delta_c . p)

with projection onto the nonnegative orthant after every step. Backtracking
halves the step until the objective decreases, so the objective is
nonincreasing across iterations by construction.

Feedback constraints carry deltas as small as the feature resolution
(1/|union|), and at the base penalty the soft optimum may then leave some
recorded order fact violated even though the system is feasible. When that
happens the solve is repeated warm-started with an escalated penalty until
every order fact holds or the escalation budget runs out, so a consistent
feedback record is always reproduced while genuinely inconsistent feedback
degrades gracefully through the soft term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Constraint, GeoObject, PreferenceVector, Query, ValidationError
from .scoring import f_prefer

_ORDER_EPS = 1e-9


@dataclass(frozen=True)
class EstimatorConfig:
    margin: float = 1.0
    soft_penalty: float = 10.0
    max_iters: int = 5000
    tol: float = 1e-8
    step: float = 0.05
    escalation_factor: float = 10.0
    max_escalations: int = 6

    def __post_init__(self) -> None:
        for name in ("margin", "soft_penalty", "max_iters", "tol", "step"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.escalation_factor <= 1.0:
            raise ValidationError("escalation_factor must exceed 1")
        if self.max_escalations < 0:
            raise ValidationError("max_escalations must be >= 0")


@dataclass(frozen=True)
class EstimateResult:
    preference: PreferenceVector
    objective: float  # soft objective at the base penalty
    max_margin_slack: float  # max over constraints of max(0, margin - delta.p)
    max_order_violation: float  # max over constraints of max(0, -delta.p)
    iterations: int
    converged: bool
    penalty_used: float = 0.0


def soft_objective(
    p: np.ndarray, deltas: np.ndarray, margin: float, penalty: float
) -> float:
    slack = np.maximum(0.0, margin - deltas @ p)
    return float(p @ p + penalty * slack.sum())


def _residual(grad: np.ndarray, at_orthant_wall: np.ndarray) -> np.ndarray:
    """Projected-gradient residual: wall coordinates can only push inward."""
    r = grad.copy()
    r[at_orthant_wall] = np.minimum(grad[at_orthant_wall], 0.0)
    return r


def _steepest_direction(
    p: np.ndarray, deltas: np.ndarray, margin: float, penalty: float
) -> np.ndarray:
    """Negative min-norm subgradient at a kink; near-zero means optimal.

    The subdifferential at p mixes each margin-tight constraint's gradient
    with a coefficient in [0, 1]; minimizing the projected residual norm over
    those coefficients is a small smooth box problem, solved here by an inner
    projected gradient. A zero residual certifies optimality; otherwise its
    negation descends even where single-sided subgradients do not.
    """
    # floats never sit exactly on a kink; snap the evaluation point onto the
    # nearby margin walls so the mixing model below prices crossings right
    band = 1e-4 * max(1.0, margin)
    margins = deltas @ p
    near = np.abs(margins - margin) <= band
    snapped = p
    if near.any():
        d_near = deltas[near]
        correction, *_ = np.linalg.lstsq(d_near, margin - margins[near], rcond=None)
        snapped = np.maximum(0.0, p + correction)
    snapped = np.where(snapped <= band * 1e-3, 0.0, snapped)

    margins = deltas @ snapped
    eps = 1e-9 * max(1.0, margin)
    strictly_active = margins < margin - eps
    tight = np.abs(margins - margin) <= eps
    wall = snapped <= 1e-12
    base = 2.0 * snapped
    if strictly_active.any():
        base = base - penalty * deltas[strictly_active].sum(axis=0)
    d_tight = deltas[tight]
    if d_tight.shape[0] == 0:
        return -_residual(base, wall)

    def value(s: np.ndarray) -> tuple[float, np.ndarray]:
        g = base - penalty * (d_tight.T @ s)
        r = _residual(g, wall)
        return float(r @ r), g

    s = np.full(d_tight.shape[0], 0.5)
    h, g = value(s)
    step = 1.0 / (2.0 * penalty**2 * max(1.0, float((d_tight**2).sum())))
    for _ in range(400):
        r = _residual(g, wall)
        drdg = np.ones_like(g)
        drdg[wall & (g > 0.0)] = 0.0
        grad_s = -2.0 * penalty * (d_tight @ (r * drdg))
        gmax = float(np.max(np.abs(grad_s)))
        if gmax < 1e-14:
            break
        improved = False
        trial_step = step
        for _ in range(60):
            s_new = np.clip(s - trial_step * grad_s, 0.0, 1.0)
            h_new, g_new = value(s_new)
            if h_new < h:
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
        if np.array_equal(s_new, s):
            break
        gain = h - h_new
        s, h, g = s_new, h_new, g_new
        step = trial_step * 2.0  # adapt across penalty scales
        if gain < 1e-16 * max(1.0, h):
            break
    return -_residual(g, wall)


def _pgd(
    deltas: np.ndarray,
    start: np.ndarray,
    margin: float,
    penalty: float,
    cfg: EstimatorConfig,
    debug: bool,
) -> tuple[np.ndarray, int, bool]:
    p = start.copy()
    obj = soft_objective(p, deltas, margin, penalty)
    iterations = 0
    use_steepest = False
    step_memory = cfg.step
    for iterations in range(1, cfg.max_iters + 1):
        if use_steepest:
            direction = _steepest_direction(p, deltas, margin, penalty)
            cert = 1e-5 * max(1.0, 2.0 * float(np.linalg.norm(p)))
            if float(np.linalg.norm(direction)) < cert:
                return p, iterations, True  # near-zero min-norm subgradient
        else:
            active = (deltas @ p) < margin
            grad = 2.0 * p
            if active.any():
                grad = grad - penalty * deltas[active].sum(axis=0)
            direction = -grad
        dnorm = float(np.linalg.norm(direction))
        if dnorm == 0.0:
            return p, iterations, True
        # step memory adapts across penalty scales without crawling
        step = step_memory
        trial_obj = obj
        improved = False
        for _ in range(200):
            trial = np.maximum(0.0, p + step * direction)
            trial_obj = soft_objective(trial, deltas, margin, penalty)
            if trial_obj < obj:
                improved = True
                break
            step *= 0.5
        if improved:
            # greedy expansion: long valleys reward much larger steps
            for _ in range(40):
                wider = np.maximum(0.0, p + 2.0 * step * direction)
                wider_obj = soft_objective(wider, deltas, margin, penalty)
                if wider_obj >= trial_obj:
                    break
                step *= 2.0
                trial, trial_obj = wider, wider_obj
            step_memory = step
        small_gain = improved and (obj - trial_obj) < cfg.tol
        if improved:
            if debug:
                assert trial_obj <= obj, "objective must not increase"
            p, obj = trial, trial_obj
        if not improved or small_gain:
            if use_steepest:
                return p, iterations, True
            # plain subgradient steps stall on margin kinks; switch to the
            # min-norm subgradient direction before trusting convergence
            use_steepest = True
        else:
            use_steepest = False
    return p, iterations, False


def _feasibility_repair(
    deltas: np.ndarray, p: np.ndarray, margin: float, budget: int
) -> np.ndarray:
    """Successive projection onto the most-violated margin half-space.

    Classic relaxation for consistent linear inequality systems; reaches a
    feasible point geometrically when one exists, which the gradient path
    cannot always do across thin constraint cones at high penalties.
    """
    norms_sq = (deltas * deltas).sum(axis=1)
    norms_sq[norms_sq == 0.0] = 1.0
    for _ in range(budget):
        margins = deltas @ p
        worst = int(np.argmin(margins))
        gap = margin - float(margins[worst])
        if gap <= 1e-12:
            break
        p = np.maximum(0.0, p + (gap / norms_sq[worst]) * deltas[worst])
    margins = deltas @ p
    low = float(margins.min())
    if low >= margin and low > 0.0:
        p = p / low  # shrink back onto the tightest margin
    return p


def estimate_preference(
    constraints: list[Constraint],
    dim: int,
    cfg: EstimatorConfig | None = None,
    debug: bool = False,
) -> EstimateResult:
    """Estimate the preference vector from feedback constraints.

    An empty constraint list yields the uniform vector (1, 1, ..., 1).
    """
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    cfg = cfg or EstimatorConfig()
    if not constraints:
        return EstimateResult(PreferenceVector.uniform(dim), float(dim), 0.0, 0.0, 0, True)

    deltas = np.asarray([c.delta for c in constraints], dtype=np.float64)
    if deltas.shape[1] != dim:
        raise ValidationError(
            f"constraints have dimension {deltas.shape[1]}, expected {dim}"
        )

    penalty = cfg.soft_penalty
    p = np.ones(dim)
    total_iters = 0
    converged = False
    for stage in range(cfg.max_escalations + 1):
        p, iters, converged = _pgd(deltas, p, cfg.margin, penalty, cfg, debug)
        total_iters += iters
        if float(np.min(deltas @ p)) >= -_ORDER_EPS:
            break
        penalty *= cfg.escalation_factor
    if float(np.min(deltas @ p)) < -_ORDER_EPS:
        # order facts still inverted: attempt a feasibility repair, then let a
        # final solve at the escalated penalty re-minimize from inside
        repaired = _feasibility_repair(deltas, p.copy(), cfg.margin, budget=20000)
        if float(np.min(deltas @ repaired)) >= -_ORDER_EPS:
            repaired, iters, converged = _pgd(
                deltas, repaired, cfg.margin, penalty, cfg, debug
            )
            total_iters += iters
            if float(np.min(deltas @ repaired)) >= -_ORDER_EPS:
                p = repaired

    margins = deltas @ p
    max_slack = float(np.maximum(0.0, cfg.margin - margins).max())
    max_violation = float(np.maximum(0.0, -margins).max())
    pref = PreferenceVector(float(p[0]), tuple(float(x) for x in p[1:]))
    return EstimateResult(
        preference=pref,
        objective=soft_objective(p, deltas, cfg.margin, cfg.soft_penalty),
        max_margin_slack=max_slack,
        max_order_violation=max_violation,
        iterations=total_iters,
        converged=converged,
        penalty_used=penalty,
    )


def final_topk(
    candidates: list[GeoObject],
    q: Query,
    p_hat: PreferenceVector,
    k: int,
    d_max: float,
    lon_scale: float = 1.0,
    known_superiors: dict[int, set[int]] | None = None,
) -> list[tuple[GeoObject, float]]:
    """Rank the surviving candidates by estimated preference, ties by id.

    When the session's order relation is supplied, selection respects it:
    an object is only eligible once none of its known superiors remains
    unpicked, so the result never contradicts a recorded or derived order
    fact that the estimate happens to invert.
    """
    scored = {o.id: f_prefer(q, o, p_hat, d_max, lon_scale) for o in candidates}
    by_id = {o.id: o for o in candidates}
    if known_superiors is None:
        ranked = sorted(candidates, key=lambda o: (-scored[o.id], o.id))
        return [(o, scored[o.id]) for o in ranked[: min(k, len(ranked))]]

    remaining = set(by_id)
    picked: list[tuple[GeoObject, float]] = []
    while remaining and len(picked) < k:
        eligible = [
            v for v in remaining if not (known_superiors.get(v, set()) & remaining)
        ]
        if not eligible:
            eligible = sorted(remaining)  # unreachable for an acyclic order
        best = min(eligible, key=lambda v: (-scored[v], v))
        picked.append((by_id[best], scored[best]))
        remaining.discard(best)
    return picked
