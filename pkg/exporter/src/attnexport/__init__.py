"""Checkpoint-to-tensor exporter for the attention-based discovery engine."""

from .export import (
    ATTENTION_MODES,
    ExportError,
    ExportJob,
    VerifyReport,
    export,
    frame_shift_ms,
    load_audio,
    load_model,
    verify_export,
)
from .tensorio import append_manifest_line, read_tensor, write_tensor

__version__ = "0.1.0"
