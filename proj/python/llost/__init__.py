"""Lesion-to-mutation dual-VAE toolkit.

Thin wrapper over the C++ core: dataset synthesis, mask ingestion, training,
prediction, and evaluation are all reachable through ``cli`` or the direct
helpers re-exported here.
"""

from ._core import (
    __version__,
    chamfer,
    cli,
    evaluate,
    ingest_mask,
    predict_profile,
    read_ply,
    shared_embedding,
    tsne_embed,
    write_ply,
)

__all__ = [
    "__version__",
    "chamfer",
    "cli",
    "evaluate",
    "ingest_mask",
    "predict_profile",
    "read_ply",
    "shared_embedding",
    "tsne_embed",
    "write_ply",
]
