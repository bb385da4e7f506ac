"""Agent cognition: emotion dynamics, memory, and the belief/desire/intention pipeline."""
from .beliefs import (
    ACTION_TYPES,
    INTENSITY_VALUES,
    ActionDraft,
    AgentKind,
    BeliefState,
    Desire,
    DesireSet,
    IntentionPlan,
    OpinionEntry,
    identity_digest,
)
from .emotion import (
    EMOTIONS,
    EmotionDynamicsConfig,
    EmotionVector,
    contagion_blend,
    decay_emotion,
    mean_emotion,
    stimulate_emotion,
)
from .memory import MemoryBank, MemoryConfig, MemoryEntry, retrieve_memories
from .pipeline import (
    Agent,
    CognitionContext,
    EventNotice,
    FeedEntry,
    Perception,
    PipelineResult,
    generate_desires,
    plan_intentions,
    run_pipeline,
    store_memory,
    update_beliefs,
)
from .prompts import TemplateSet, default_templates, trait_pool
