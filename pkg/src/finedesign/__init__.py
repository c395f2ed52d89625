"""finedesign: dataset fine-design toolkit with an uncertainty class.

Partitions labeled samples into positive / negative / uncertain classes by
extracting named ambiguity categories, trains a small softmax classifier,
and measures how each extraction design changes the false alarm rate.
"""

__version__ = "0.1.0"

from .errors import (
    ManifestParseError,
    NumericalError,
    ToolkitError,
    TrainingDivergedError,
    ValidationError,
)
from .manifest import (
    CategoryKind,
    FineCategory,
    Manifest,
    Polarity,
    Sample,
    Split,
    canonical_float,
    load_manifest,
    save_manifest,
    summarize,
    validate_manifest,
)
from .synthgen import (
    CategoryGeometry,
    SynthConfig,
    generate_test,
    generate_train,
    mask_taxonomy,
    synth_config_from_dict,
)
from .design import (
    DesignConfig,
    LabeledDataset,
    apply_design,
    design_name,
    enumerate_designs,
    load_dataset_csv,
    save_dataset_csv,
    table_row_name,
)
from .trainer import (
    AdamState,
    MLPParams,
    TrainConfig,
    TrainedModel,
    adam_step,
    cosine_lr,
    load_model,
    predict,
    predict_batch,
    save_model,
    softmax_xent,
    train,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    confusion,
    evaluate,
    false_alarm_rate,
    percent,
    positive_precision,
    positive_recall,
)
from .ablation import (
    AblationConfig,
    AblationReport,
    cell_seed,
    render_report,
    report_from_json_dict,
    report_to_json_dict,
    run_ablation,
)
