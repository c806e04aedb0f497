"""Video-to-session ingestion adapter.

Converts a video file, camera, or directory of frames into the line-delimited
session format consumed by the tsribe pipeline, using a pluggable
hand-landmark extractor (MediaPipe Hands when installed).
"""

from .adapter import IngestConfig, ingest, iter_frames
from .extractors import HandLandmarkExtractor, MediaPipeHandsExtractor, load_extractor

__all__ = [
    "IngestConfig",
    "ingest",
    "iter_frames",
    "HandLandmarkExtractor",
    "MediaPipeHandsExtractor",
    "load_extractor",
]
