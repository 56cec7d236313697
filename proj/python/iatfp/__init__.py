"""Device fingerprinting from packet inter-arrival times.

Thin re-export of the compiled core: pcap ingestion, fingerprint rendering,
augmentation, traffic simulation, and trained-model inference.
"""

from ._core import (
    Model,
    augment_image,
    default_profiles,
    generate_pcap,
    hflip,
    ingest,
    rasterize,
    run_cli,
    sample_iats,
    train_count,
)

__all__ = [
    "Model",
    "augment_image",
    "default_profiles",
    "generate_pcap",
    "hflip",
    "ingest",
    "rasterize",
    "run_cli",
    "sample_iats",
    "train_count",
]
