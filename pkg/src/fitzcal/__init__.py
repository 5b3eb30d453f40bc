"""fitzcal: per-group decision-threshold calibration for binary
segmentation probability maps.

Sweeps Dice and binary-IoU over a fixed 990-point threshold grid, selects
global and group-stratified operating points on a tuning split, and
evaluates the frozen thresholds on a held-out split.
"""

from .calibration import (EvaluationRow, ImageCurves, OperatingPointSet,
                          evaluate_frozen, select_optima, tuning_dominance_check)
from .data_model import (BinaryMask, DatasetManifest, GroupLabel, ImageRecord,
                         ProbMap, load_manifest, load_mask, load_probmap,
                         save_manifest, save_mask, save_probmap)
from .metrics import (KERNEL_BACKEND, ConfusionCounts, MetricCurve,
                      aggregate_curves, biou, confusion_at, curve_fast,
                      curve_naive, dice, threshold_grid)
from .splitting import SplitConfig, split, verify_split
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"
