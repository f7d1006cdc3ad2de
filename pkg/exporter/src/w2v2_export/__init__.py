from .exporter import (
    DEFAULT_CHECKPOINT,
    ExportError,
    ExportJob,
    ExportRecord,
    ExportResult,
    export,
    load_model,
    parse_layer_selection,
    read_audio_manifest,
)

__version__ = "0.1.0"
