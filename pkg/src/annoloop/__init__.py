"""Human-LLM collaborative re-annotation toolkit for multilingual
speaker-attribute labels.

Pipeline pieces: a JSONL corpus store with named annotation layers, a
rule-bearing label schema, a deterministic LLM gateway speaking the
RATIONALE/SCORE protocol, a versioned prompt registry with human-gated
rationale drafting, disagreement-focused sampling, agreement metrics, and
an event-sourced re-annotation workflow exposed over HTTP and a CLI.
"""

from .corpus import (
    Corpus,
    Instance,
    LabelAssignment,
    export_jsonl,
    filter_corpus,
    ingest_jsonl,
)
from .errors import (
    AnnoloopError,
    ClassificationError,
    ClosureConflictError,
    ConfigError,
    CorpusError,
    GatingError,
    MetricsError,
    ParseError,
    RegistryError,
    SamplingError,
    SchemaError,
    TransportError,
    WorkflowError,
)
from .gateway import (
    Backend,
    BackendConfig,
    ChatMessage,
    HttpChatBackend,
    ModelJudgment,
    StubBackend,
    assemble_prompt,
    classify,
    classify_batch,
    judgments_to_layer,
    parse_response,
    read_judgments_jsonl,
    render_response,
    write_judgments_jsonl,
)
from .metrics import (
    ConfusionCounts,
    MetricReport,
    UNDEFINED,
    accuracy,
    agreement_report,
    classification_report,
    cohen_kappa,
    counts_from_pairs,
    fleiss_kappa,
    kappa_csv,
    macro_f1,
    prf1,
)
from .prompts import (
    PromptRegistry,
    PromptSpec,
    RationaleDraft,
    accept_draft,
    draft_rationale_summary,
    reject_draft,
    seed_default_prompts,
)
from .sampling import (
    ConfusionPartition,
    SampleSet,
    balanced_split,
    confusion_partition,
    disagreement_sample,
)
from .schema import (
    LabelDefinition,
    LabelRule,
    LabelSchema,
    Violation,
    default_schema,
    implication_closure,
    load_schema,
    save_schema,
    validate_assignment,
)
from .workflow import (
    BATCH_GROUP_DEMOGRAPHIC,
    BATCH_GROUP_DIET_PERSONALITY,
    Batch,
    EventLog,
    TaskRecord,
    Workflow,
    WorkflowEvent,
)

__version__ = "0.1.0"
