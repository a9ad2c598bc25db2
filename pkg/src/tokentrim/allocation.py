"""Integer budget allocation from redundancy signals.

Turns the scalar redundancy factor into the stage-1 total and splits that
total into per-image quotas that always sum exactly and respect both the
one-token floor and each image's token count.
"""

from __future__ import annotations

import math

from .errors import InfeasibleBudget, ShapeMismatch
from .types import round_half_away


def stage1_budget(s: float, m_min: int, m_max: int, lam: float) -> int:
    """Map the redundancy factor s to the stage-1 retention size.

    M_1 = m_min + round((m_max - m_min) * clip(lam * s, 0, 1)), rounding
    half away from zero.  Saturated (infinite) s clips to the upper bound.
    Monotone non-decreasing in both s and lam.
    """
    scaled = lam * s
    clipped = min(max(scaled, 0.0), 1.0)
    return m_min + round_half_away((m_max - m_min) * clipped)


def image_weights(
    d_intra_per_image: list[float], last_image_rule: bool = True
) -> list[float]:
    """Retention weights: per-image diversity, with the last-image promotion.

    With the rule on and more than two images, the last image's weight is
    raised to the sequence maximum so the most recent context never starves.
    An all-zero profile falls back to uniform weights.
    """
    weights = [float(w) for w in d_intra_per_image]
    n = len(weights)
    if last_image_rule and n > 2:
        weights[-1] = max(weights)
    if max(weights, default=0.0) <= 0.0:
        return [1.0 / n] * n
    return weights


def per_image_budgets(
    weights: list[float], m1: int, caps: list[int]
) -> list[int]:
    """Split m1 tokens across images proportionally to their weights.

    Ideal shares q_k = (w_k / sum w) * m1 are integerized by the largest-
    remainder method (floor everything, hand the leftover units to the
    largest fractional parts, ties to the lower index).  The result is then
    repaired against the [1, caps[k]] bounds by moving one unit at a time:
    units still owed go to the in-bounds image with the largest remaining
    ideal-share deficit, excess units are taken back from the image with
    the largest overshoot (ties to the lower index in both directions).
    The output sums to m1 exactly with 1 <= budget[k] <= caps[k].
    """
    n = len(weights)
    if len(caps) != n:
        raise ShapeMismatch(f"{n} weights but {len(caps)} caps")
    if m1 < n:
        raise InfeasibleBudget(f"m1={m1} cannot give each of {n} images a token")
    if m1 > sum(caps):
        raise InfeasibleBudget(f"m1={m1} exceeds total capacity {sum(caps)}")
    total_w = math.fsum(weights)
    if total_w <= 0.0:
        raise InfeasibleBudget("weights must have a positive sum")

    ideal = [w / total_w * m1 for w in weights]
    budget = [math.floor(q) for q in ideal]
    leftover = m1 - sum(budget)
    by_fraction = sorted(range(n), key=lambda k: (-(ideal[k] - budget[k]), k))
    for k in by_fraction[:leftover]:
        budget[k] += 1

    budget = [min(max(b, 1), caps[k]) for k, b in enumerate(budget)]
    while sum(budget) < m1:
        k = max(
            (k for k in range(n) if budget[k] < caps[k]),
            key=lambda k: (ideal[k] - budget[k], -k),
        )
        budget[k] += 1
    while sum(budget) > m1:
        k = max(
            (k for k in range(n) if budget[k] > 1),
            key=lambda k: (budget[k] - ideal[k], -k),
        )
        budget[k] -= 1
    return budget
