from .encoders import DEFAULT_ENCODER, EncoderUnavailable, HashingEncoder, resolve_encoder
from .exporter import ExportManifest, export_embeddings, read_prompts

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ENCODER",
    "EncoderUnavailable",
    "ExportManifest",
    "HashingEncoder",
    "export_embeddings",
    "read_prompts",
    "resolve_encoder",
]
