"""On-disk formats and the synthetic bundle generator.

Embeddings travel in TTB1, a little-endian binary layout:

    magic "TTB1" | u32 version=1 | u32 n_images | u32 n_text | u32 dim
    | n_images x u32 token counts | image rows | text rows

with all rows stored row-major as 32-bit floats, images first (in order),
then text.  Reports and selections are serialized as JSON with a fixed key
order so documents diff cleanly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    BadSpec,
    BadVersion,
    IoFailure,
    TruncatedFile,
)
from .types import (
    PruneConfig,
    RedundancyReport,
    ResolvedBudgets,
    Selection,
    TokenBundle,
    TokenMatrix,
    build_token_matrix,
    make_bundle,
)

MAGIC = b"TTB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_bundle(bundle: TokenBundle, path) -> None:
    """Serialize a bundle to TTB1; read_bundle(write_bundle(b)) is bit-exact."""
    counts = [img.rows for img in bundle.images]
    parts = [
        _HEADER.pack(MAGIC, VERSION, bundle.n_images, bundle.text.rows, bundle.dim),
        struct.pack(f"<{len(counts)}I", *counts),
    ]
    parts.extend(
        np.ascontiguousarray(img.data, dtype="<f4").tobytes()
        for img in bundle.images
    )
    parts.append(np.ascontiguousarray(bundle.text.data, dtype="<f4").tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise IoFailure(f"cannot write bundle to {path}: {exc}") from exc


def _take(buf: bytes, offset: int, nbytes: int, what: str) -> tuple[bytes, int]:
    if offset + nbytes > len(buf):
        raise TruncatedFile(
            f"file ends inside {what}: need {offset + nbytes} bytes, have {len(buf)}"
        )
    return buf[offset : offset + nbytes], offset + nbytes


def read_bundle(path) -> TokenBundle:
    """Load a TTB1 bundle, validating magic, version and exact payload size."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read bundle from {path}: {exc}") from exc

    raw, offset = _take(buf, 0, _HEADER.size, "header")
    magic, version, n_images, n_text, dim = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported format version {version}")

    raw, offset = _take(buf, offset, 4 * n_images, "per-image counts")
    counts = struct.unpack(f"<{n_images}I", raw)

    def read_matrix(rows: int, what: str) -> TokenMatrix:
        nonlocal offset
        raw, offset = _take(buf, offset, 4 * rows * dim, what)
        values = np.frombuffer(raw, dtype="<f4")
        return build_token_matrix(rows, dim, values)

    images = [read_matrix(m, f"image {k} rows") for k, m in enumerate(counts)]
    text = read_matrix(n_text, "text rows")
    if offset != len(buf):
        raise TruncatedFile(
            f"{len(buf) - offset} trailing bytes after declared payload"
        )
    return make_bundle(images, text)


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the synthetic bundle generator.

    Each image draws its tokens around ``clusters`` latent unit prototypes
    (orthonormal whenever clusters <= dim); ``noise`` is the Gaussian
    perturbation scale around a prototype and ``drift`` how far prototypes
    shift between consecutive images.  Low noise means high intra-image
    redundancy, low drift high inter-image redundancy.
    """

    n_images: int
    tokens_per_image: int
    dim: int
    seed: int
    clusters: int = 1
    noise: float = 0.0
    drift: float = 0.0
    text_tokens: int = 8

    def __post_init__(self):
        if self.n_images < 1:
            raise BadSpec(f"n_images must be >= 1, got {self.n_images}")
        if self.tokens_per_image < 1:
            raise BadSpec(
                f"tokens_per_image must be >= 1, got {self.tokens_per_image}"
            )
        if self.dim < 1:
            raise BadSpec(f"dim must be >= 1, got {self.dim}")
        if self.seed < 0:
            raise BadSpec(f"seed must be >= 0, got {self.seed}")
        if not 1 <= self.clusters <= self.tokens_per_image:
            raise BadSpec(
                f"clusters must be in [1, tokens_per_image], got {self.clusters}"
            )
        if self.noise < 0:
            raise BadSpec(f"noise must be >= 0, got {self.noise}")
        if self.drift < 0:
            raise BadSpec(f"drift must be >= 0, got {self.drift}")
        if self.text_tokens < 0:
            raise BadSpec(f"text_tokens must be >= 0, got {self.text_tokens}")


def _unit(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def generate_synthetic(spec: SyntheticSpec) -> TokenBundle:
    """Deterministic bundle with controllable redundancy structure.

    Token i of every image belongs to prototype i mod clusters; each token
    is the unit-normalized prototype plus noise.  After each image the
    prototypes move by a drift-scaled Gaussian step and are re-normalized.
    The same spec always produces byte-identical bundles.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.clusters <= spec.dim:
        # Orthonormal prototypes: with noise=0 and clusters == tokens_per_image
        # an image's diversity is exactly 1.
        q, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.clusters)))
        protos = q.T.copy()
    else:
        protos = _unit(rng.standard_normal((spec.clusters, spec.dim)))

    images = []
    for _ in range(spec.n_images):
        perturb = rng.standard_normal((spec.tokens_per_image, spec.dim))
        assign = np.arange(spec.tokens_per_image) % spec.clusters
        rows = _unit(protos[assign] + spec.noise * perturb)
        images.append(
            build_token_matrix(
                spec.tokens_per_image, spec.dim, rows.astype(np.float32).ravel()
            )
        )
        step = rng.standard_normal(protos.shape)
        protos = _unit(protos + spec.drift * step)

    text_rows = rng.standard_normal((spec.text_tokens, spec.dim))
    text = build_token_matrix(
        spec.text_tokens, spec.dim, text_rows.astype(np.float32).ravel()
    )
    return make_bundle(images, text)


def _config_block(
    cfg: PruneConfig | None, budgets: ResolvedBudgets | None
) -> dict | None:
    if cfg is None:
        return None
    block = {
        "m_min": cfg.m_min,
        "m_max": cfg.m_max,
        "lambda": cfg.lam,
        "m2": cfg.m2,
        "final_tokens": cfg.final_tokens,
        "retention_ratio": cfg.retention_ratio,
        "last_image_rule": cfg.last_image_rule,
        "inter_variant": cfg.inter_variant,
        "align_on_normalized": cfg.align_on_normalized,
        "greedy_objective": cfg.greedy_objective,
        "fast_path": cfg.fast_path,
    }
    if budgets is not None:
        block["resolved"] = {
            "m0": budgets.m0,
            "m_min": budgets.m_min,
            "m_max": budgets.m_max,
            "m2": budgets.m2,
            "m_final": budgets.m_final,
        }
    return block


def report_document(
    report: RedundancyReport,
    cfg: PruneConfig | None = None,
    budgets: ResolvedBudgets | None = None,
) -> dict:
    """JSON-ready document for a redundancy report (no selection)."""
    return {
        "config": _config_block(cfg, budgets),
        "report": {
            "d_intra_per_image": list(report.d_intra_per_image),
            "d_intra_mean": report.d_intra_mean,
            "d_k": list(report.d_k_list),
            "d_inter": report.d_inter,
            "s": report.s,
            "m1": report.m1,
            "per_image_budgets": list(report.per_image_budgets),
        },
    }


def result_document(
    report: RedundancyReport,
    sel: Selection,
    cfg: PruneConfig | None = None,
    budgets: ResolvedBudgets | None = None,
) -> dict:
    """JSON-ready document for a full pruning result."""
    doc = report_document(report, cfg, budgets)
    doc["selection"] = {
        "kept_per_image": [list(loc) for loc in sel.kept_per_image],
        "kept_global": list(sel.kept_global),
        "stage_sizes": list(sel.stage_sizes),
        "scores": [[g, v, a] for g, v, a in sel.scores],
    }
    return doc


def write_result(
    report: RedundancyReport,
    sel: Selection,
    path,
    cfg: PruneConfig | None = None,
    budgets: ResolvedBudgets | None = None,
) -> None:
    """Write a result document as stable-key-order JSON (UTF-8)."""
    doc = result_document(report, sel, cfg, budgets)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write result to {path}: {exc}") from exc
