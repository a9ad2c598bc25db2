"""End-to-end pruning: signals, budgets, then the two selection stages.

Stage 1 prunes each image independently down to its allocated quota;
stage 2 pools the survivors, filters them globally by dispersion, scores
the candidates on (diversity, alignment) and keeps the budgeted Pareto
selection.  All indices in the result refer to positions in the original
bundle.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import allocation, metrics, selection
from .errors import SelectionMismatch
from .types import (
    PruneConfig,
    RedundancyReport,
    ResolvedBudgets,
    Selection,
    TokenBundle,
    TokenMatrix,
    build_token_matrix,
    make_bundle,
    resolve_config,
)


def _signals(
    bundle: TokenBundle, cfg: PruneConfig, budgets: ResolvedBudgets
) -> RedundancyReport:
    per_image, d_mean = metrics.intra_diversity_mean(bundle, fast=cfg.fast_path)
    if bundle.n_images >= 2:
        if cfg.inter_variant == "position_wise":
            steps = metrics.inter_variation_positionwise(bundle)
        else:
            steps = metrics.inter_variation_steps(bundle)
        d_inter = metrics.inter_variation_mean(steps)
    else:
        steps, d_inter = [], None
    s = metrics.s_factor(d_mean, d_inter)

    # The one-token floor makes n the hard minimum for the stage-1 total.
    m1 = max(
        allocation.stage1_budget(s, budgets.m_min, budgets.m_max, cfg.lam),
        bundle.n_images,
    )
    weights = allocation.image_weights(per_image, cfg.last_image_rule)
    caps = [img.rows for img in bundle.images]
    quotas = allocation.per_image_budgets(weights, m1, caps)
    return RedundancyReport(
        d_intra_per_image=tuple(per_image),
        d_intra_mean=d_mean,
        d_k_list=tuple(steps),
        d_inter=d_inter,
        s=s,
        m1=m1,
        per_image_budgets=tuple(quotas),
    )


def analyze(bundle: TokenBundle, cfg: PruneConfig) -> RedundancyReport:
    """Compute all redundancy signals and budgets without touching a token."""
    budgets = resolve_config(cfg, bundle)
    return _signals(bundle, cfg, budgets)


def _gather_rows(bundle: TokenBundle, global_indices: list[int]) -> TokenMatrix:
    """One matrix holding the given original-bundle rows, in list order."""
    offsets = bundle.offsets
    rows = np.empty((len(global_indices), bundle.dim), dtype=np.float32)
    for pos, g in enumerate(global_indices):
        k = int(np.searchsorted(offsets, g, side="right")) - 1
        rows[pos] = bundle.images[k].data[g - offsets[k]]
    return build_token_matrix(len(global_indices), bundle.dim, rows.ravel())


def prune(
    bundle: TokenBundle, cfg: PruneConfig, threads: int = 1
) -> tuple[RedundancyReport, Selection]:
    """Run the full two-stage pruning pipeline.

    Returns the redundancy report and a Selection whose indices, scores and
    stage sizes all reference the original bundle.  ``threads`` > 1 runs
    the per-image stage-1 selections in a thread pool; results are
    identical to the sequential run.
    """
    budgets = resolve_config(cfg, bundle, require_text=True)
    report = _signals(bundle, cfg, budgets)
    offsets = bundle.offsets

    def stage1(args: tuple[TokenMatrix, int]) -> list[int]:
        img, quota = args
        return selection.greedy_rep_max(img, quota, cfg.greedy_objective)

    jobs = list(zip(bundle.images, report.per_image_budgets))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stage1_local = list(pool.map(stage1, jobs))
    else:
        stage1_local = [stage1(job) for job in jobs]
    x1_global = [
        offsets[k] + i for k, local in enumerate(stage1_local) for i in local
    ]

    if budgets.m2 >= len(x1_global):
        cand_global = list(x1_global)
    else:
        pooled = _gather_rows(bundle, x1_global)
        picked = selection.greedy_rep_max(pooled, budgets.m2, cfg.greedy_objective)
        cand_global = [x1_global[p] for p in picked]

    cand = _gather_rows(bundle, cand_global)
    if cand.rows >= 2:
        div = metrics.token_diversity_fast if cfg.fast_path else metrics.token_diversity_naive
        v = div(cand)
    else:
        v = np.zeros(cand.rows, dtype=np.float64)  # lone candidate: no pairs
    if cfg.fast_path:
        ctx = metrics.build_alignment_context(bundle.text, cfg.align_on_normalized)
        a = metrics.alignment_fast(cand, ctx, cfg.align_on_normalized)
    else:
        a = metrics.alignment_naive(cand, bundle.text, cfg.align_on_normalized)

    points = [
        selection.ParetoPoint(index=p, v=float(v[p]), a=float(a[p]))
        for p in range(cand.rows)
    ]
    kept_pos = selection.pareto_budgeted(points, budgets.m_final)
    kept_global = sorted(cand_global[p] for p in kept_pos)

    kept_per_image: list[tuple[int, ...]] = []
    for k, img in enumerate(bundle.images):
        lo, hi = offsets[k], offsets[k] + img.rows
        kept_per_image.append(tuple(g - lo for g in kept_global if lo <= g < hi))

    sel = Selection(
        kept_per_image=tuple(kept_per_image),
        kept_global=tuple(kept_global),
        scores=tuple(
            (g, float(v[p]), float(a[p])) for p, g in enumerate(cand_global)
        ),
        stage_sizes=(
            budgets.m0,
            len(x1_global),
            len(cand_global),
            len(kept_global),
        ),
    )
    return report, sel


def apply_selection(bundle: TokenBundle, sel: Selection) -> TokenBundle:
    """Materialize a pruned bundle containing only the kept rows.

    Row values are copied bit-exactly in their original relative order;
    images left with zero kept tokens are dropped from the output (the
    report still records them).  Raises SelectionMismatch when the
    selection does not fit this bundle.
    """
    if sel.stage_sizes[0] != bundle.total_tokens:
        raise SelectionMismatch(
            f"selection was made for {sel.stage_sizes[0]} tokens, "
            f"bundle has {bundle.total_tokens}"
        )
    if len(sel.kept_per_image) != bundle.n_images:
        raise SelectionMismatch(
            f"selection covers {len(sel.kept_per_image)} images, "
            f"bundle has {bundle.n_images}"
        )
    offsets = bundle.offsets
    merged: list[int] = []
    for k, locals_k in enumerate(sel.kept_per_image):
        rows_k = bundle.images[k].rows
        for i in locals_k:
            if not 0 <= i < rows_k:
                raise SelectionMismatch(
                    f"image {k}: local index {i} out of range ({rows_k} rows)"
                )
        merged.extend(offsets[k] + i for i in locals_k)
    if sorted(merged) != list(sel.kept_global):
        raise SelectionMismatch("per-image and global kept indices disagree")

    images = [
        img.gather(list(locals_k))
        for img, locals_k in zip(bundle.images, sel.kept_per_image)
        if locals_k
    ]
    return make_bundle(images, bundle.text)
