"""Multi-label atomic activity recognition, downstream of backbone training:
frame sampling plans, a slot-attention scorer, weighted score fusion with
weight search, and mAP evaluation with agent-group breakdowns."""

__version__ = "0.1.0"

from .dataset_io import (  # noqa: E402
    ClipMeta,
    LabelMatrix,
    ScoreMatrix,
    align,
    load_labels,
    load_scores,
    write_labels,
    write_report,
    write_scores,
)
from .errors import AlignmentError, AtomfuseError, FormatError, ShapeError, TaxonomyError, WeightsError  # noqa: E402
from .fusion import FusionWeights, fuse, normalize_scores, optimize_weights  # noqa: E402
from .metrics import EvalReport, average_precision, evaluate  # noqa: E402
from .sampling import ResolutionPlan, SamplingPlan, plan_fixed, plan_jitter, plan_resolution  # noqa: E402
from .slotattn import (  # noqa: E402
    SlotModelParams,
    SlotOutput,
    load_model,
    predict_multilabel,
    save_model,
    slot_attention_forward,
)
from .taxonomy import AgentGroup, ClassDef, Taxonomy, group_indices, load_taxonomy  # noqa: E402
