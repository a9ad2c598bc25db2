"""Validated embedding containers, configuration and result records.

Embeddings are stored as 32-bit floats; every derived reduction (norms,
sums, dot products) accumulates in 64-bit.  All containers are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadConfig,
    BudgetUnsatisfiable,
    DimMismatch,
    EmptyText,
    ShapeMismatch,
    ZeroNormRow,
)

_ZERO_NORM_EPS = 1e-12


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


@dataclass(frozen=True, eq=False)
class TokenMatrix:
    """A dense row-major matrix of token embeddings.

    ``data`` holds one float32 row per token; ``norms_sq`` caches each
    row's squared Euclidean norm (float64) and ``unit_rows`` a unit-
    normalized float32 copy.  Rows with norm below 1e-12 are rejected at
    construction.
    """

    data: np.ndarray
    norms_sq: np.ndarray
    unit_rows: np.ndarray

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def raw64(self) -> np.ndarray:
        """Raw rows widened to float64."""
        return np.asarray(self.data, dtype=np.float64)

    def unit64(self) -> np.ndarray:
        """Unit rows widened to float64."""
        return np.asarray(self.unit_rows, dtype=np.float64)

    def gather(self, indices) -> "TokenMatrix":
        """New matrix holding the given rows, values bit-exact."""
        idx = np.asarray(indices, dtype=np.int64)
        return build_token_matrix(
            int(idx.size), self.dim, self.data[idx].ravel()
        )


def build_token_matrix(rows: int, dim: int, values) -> TokenMatrix:
    """Build a TokenMatrix from a flat row-major value buffer.

    Raises ShapeMismatch when the buffer length is not rows*dim (or dim < 1),
    and ZeroNormRow for the first row whose norm falls below 1e-12.
    """
    if dim < 1:
        raise ShapeMismatch(f"dim must be >= 1, got {dim}")
    if rows < 0:
        raise ShapeMismatch(f"rows must be >= 0, got {rows}")
    flat = np.asarray(values, dtype=np.float32).ravel()
    if flat.size != rows * dim:
        raise ShapeMismatch(
            f"expected {rows * dim} values for {rows}x{dim}, got {flat.size}"
        )
    data = flat.reshape(rows, dim).copy()

    wide = data.astype(np.float64)
    norms_sq = np.einsum("ij,ij->i", wide, wide)
    bad = np.flatnonzero(norms_sq < _ZERO_NORM_EPS**2)
    if bad.size:
        raise ZeroNormRow(int(bad[0]))
    if rows:
        unit = (wide / np.sqrt(norms_sq)[:, None]).astype(np.float32)
    else:
        unit = data.copy()

    for arr in (data, norms_sq, unit):
        arr.setflags(write=False)
    return TokenMatrix(data=data, norms_sq=norms_sq, unit_rows=unit)


@dataclass(frozen=True, eq=False)
class TokenBundle:
    """One pruning instance: ordered image matrices plus one text matrix.

    Every image must have at least one token; the text matrix may be empty
    for signal-only diagnostics but the full pipeline requires text rows.
    """

    images: tuple[TokenMatrix, ...]
    text: TokenMatrix

    def __post_init__(self):
        if len(self.images) < 1:
            raise ShapeMismatch("bundle needs at least one image")
        dim = self.images[0].dim
        for k, img in enumerate(self.images):
            if img.rows < 1:
                raise ShapeMismatch(f"image {k} has no tokens")
            if img.dim != dim:
                raise DimMismatch(
                    f"image {k} has dim {img.dim}, expected {dim}"
                )
        if self.text.dim != dim:
            raise DimMismatch(
                f"text has dim {self.text.dim}, expected {dim}"
            )

    @property
    def n_images(self) -> int:
        return len(self.images)

    @property
    def dim(self) -> int:
        return self.images[0].dim

    @property
    def total_tokens(self) -> int:
        """M_0, the total visual token count."""
        return sum(img.rows for img in self.images)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Global index of each image's first token."""
        out, acc = [], 0
        for img in self.images:
            out.append(acc)
            acc += img.rows
        return tuple(out)


def make_bundle(images, text: TokenMatrix) -> TokenBundle:
    return TokenBundle(images=tuple(images), text=text)


GREEDY_OBJECTIVES = ("sum_distance", "min_distance")
INTER_VARIANTS = ("global_mean", "position_wise")


@dataclass(frozen=True)
class PruneConfig:
    """All pruning hyperparameters.

    Exactly one of ``final_tokens`` (absolute count) and ``retention_ratio``
    (fraction of the original token count) must be set.  Budgets here are
    nominal; :func:`resolve_config` clamps them against a concrete bundle.
    """

    m_min: int = 294
    m_max: int = 454
    lam: float = 0.5
    m2: int = 252
    final_tokens: int | None = None
    retention_ratio: float | None = 0.2
    last_image_rule: bool = True
    inter_variant: str = "global_mean"
    align_on_normalized: bool = False
    greedy_objective: str = "sum_distance"
    fast_path: bool = True

    def __post_init__(self):
        if not (0 < self.m_min <= self.m_max):
            raise BadConfig(
                f"need 0 < m_min <= m_max, got ({self.m_min}, {self.m_max})"
            )
        if not self.lam > 0:
            raise BadConfig(f"lambda must be positive, got {self.lam}")
        if self.m2 < 1:
            raise BadConfig(f"m2 must be >= 1, got {self.m2}")
        has_abs = self.final_tokens is not None
        has_ratio = self.retention_ratio is not None
        if has_abs == has_ratio:
            raise BadConfig(
                "exactly one of final_tokens and retention_ratio must be set"
            )
        if has_abs and self.final_tokens < 1:
            raise BadConfig(f"final_tokens must be >= 1, got {self.final_tokens}")
        if has_ratio and not (0 < self.retention_ratio < 1):
            raise BadConfig(
                f"retention_ratio must lie in (0, 1), got {self.retention_ratio}"
            )
        if self.inter_variant not in INTER_VARIANTS:
            raise BadConfig(f"unknown inter_variant {self.inter_variant!r}")
        if self.greedy_objective not in GREEDY_OBJECTIVES:
            raise BadConfig(f"unknown greedy_objective {self.greedy_objective!r}")


@dataclass(frozen=True)
class ResolvedBudgets:
    """Budgets after clamping against a bundle.

    Satisfies m_final <= m2 <= m_min <= m_max <= m0 and m_final >= 1.
    """

    m0: int
    m_min: int
    m_max: int
    m2: int
    m_final: int


def resolve_config(
    cfg: PruneConfig, bundle: TokenBundle, require_text: bool = False
) -> ResolvedBudgets:
    """Clamp the configured budgets against a concrete bundle.

    Applies the chain m_max' = min(m_max, M0), m_min' = min(m_min, m_max'),
    m2' = min(m2, m_min'), m_final' = min(final, m2'), with m_final' >= 1.
    Idempotent: resolving already-resolved budgets changes nothing.
    """
    m0 = bundle.total_tokens
    if m0 < bundle.n_images:
        raise BudgetUnsatisfiable(
            f"{m0} tokens cannot cover {bundle.n_images} images"
        )
    if require_text and bundle.text.rows == 0:
        raise EmptyText("full pipeline needs at least one text token")

    m_max = min(cfg.m_max, m0)
    m_min = min(cfg.m_min, m_max)
    m2 = min(cfg.m2, m_min)
    if cfg.final_tokens is not None:
        final = cfg.final_tokens
    else:
        final = round_half_away(cfg.retention_ratio * m0)
    final = max(1, min(final, m2))
    return ResolvedBudgets(m0=m0, m_min=m_min, m_max=m_max, m2=m2, m_final=final)


@dataclass(frozen=True)
class RedundancyReport:
    """Redundancy signals and the budgets derived from them."""

    d_intra_per_image: tuple[float, ...]
    d_intra_mean: float
    d_k_list: tuple[float, ...]
    d_inter: float | None
    s: float
    m1: int
    per_image_budgets: tuple[int, ...]


@dataclass(frozen=True)
class Selection:
    """Final pruning result.

    ``kept_per_image`` holds sorted local indices per image (possibly empty
    for an image fully removed at the final stage); ``kept_global`` the
    merged sorted global indices; ``scores`` one (global_index, diversity,
    alignment) triple per token that survived global filtering; and
    ``stage_sizes`` the (M0, M1, M2, M_final) counts, non-increasing.
    """

    kept_per_image: tuple[tuple[int, ...], ...]
    kept_global: tuple[int, ...]
    scores: tuple[tuple[int, float, float], ...] = field(repr=False)
    stage_sizes: tuple[int, int, int, int]
