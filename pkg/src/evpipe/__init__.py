"""Neuromorphic (DVS) event streams to labeled, encoded action-recognition clips."""

from .events import (Event, EventStream, ParameterError, SensorGeometry, TimeWindow,
                     slice_window, validate_stream)
from .encoders import EncodingParams, encode_sequence, frequency_encode, sae_encode
from .ingest import CLASSES, ClassLabel, load_manifest, parse_binary_events, parse_text_events, read_events
from .metrics import ConfusionMatrix, compute_metrics, confusion_from_pairs, render_report

__version__ = "0.1.0"
