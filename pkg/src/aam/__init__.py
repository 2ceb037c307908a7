"""Area angle monitoring: offline study, fast threshold update, real-time
monitor, and the service layer that exposes them to operators."""

from . import errors
from .area import (AreaDefinition, BoundaryWeights, area_angle, compute_weights,
                   kron_reduce, load_area, weights_for)
from .monitor import AreaMonitor, ChannelMap, MonitorConfig, classify_status
from .netmodel import (Branch, Bus, NetworkModel, build_susceptance, is_islanding,
                       line_flows, load_model, solve_dc)
from .study import (ContingencyResult, MaxTransferResult, ThresholdSet,
                    TransferPattern, compensate_thresholds, contingency_sweep,
                    emergency_threshold, max_transfer, warning_threshold)
from .update import TopologyChange, fast_thresholds, original_thresholds, updated_weights
from .wire import PhasorFrame, Quality, decode_frame, encode_frame

__version__ = "0.1.0"

__all__ = [
    "AreaDefinition", "AreaMonitor", "BoundaryWeights", "Branch", "Bus",
    "ChannelMap", "ContingencyResult", "MaxTransferResult", "MonitorConfig",
    "NetworkModel", "PhasorFrame", "Quality", "ThresholdSet", "TopologyChange",
    "TransferPattern", "area_angle", "build_susceptance", "classify_status",
    "compensate_thresholds", "compute_weights", "contingency_sweep",
    "decode_frame", "emergency_threshold", "encode_frame", "errors",
    "fast_thresholds", "is_islanding", "kron_reduce", "line_flows", "load_area",
    "load_model", "max_transfer", "original_thresholds", "solve_dc",
    "updated_weights", "warning_threshold", "weights_for",
]
