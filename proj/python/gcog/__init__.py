"""gCOG benchmark engine: task trees, oracle, stimulus synthesis, shards."""

from ._core import (
    CLASS_COUNT,
    COLOR_NAMES,
    RULE_TOKEN_WIDTH,
    STIMULUS_TOKEN_COUNT,
    STIMULUS_TOKEN_WIDTH,
    GcogError,
    TaskTree,
    answer_to_class,
    build_manifest,
    chance_level,
    class_to_answer,
    count_task_structures,
    encode_rule_sequence,
    encode_stimulus,
    evaluate,
    generate_dataset,
    generate_sample,
    parse_instruction,
    read_shard,
    render_instruction,
    sample_tree,
    validate,
    verify_sample,
    verify_shard,
)

__all__ = [
    "CLASS_COUNT",
    "COLOR_NAMES",
    "RULE_TOKEN_WIDTH",
    "STIMULUS_TOKEN_COUNT",
    "STIMULUS_TOKEN_WIDTH",
    "GcogError",
    "TaskTree",
    "answer_to_class",
    "build_manifest",
    "chance_level",
    "class_to_answer",
    "count_task_structures",
    "encode_rule_sequence",
    "encode_stimulus",
    "evaluate",
    "generate_dataset",
    "generate_sample",
    "parse_instruction",
    "read_shard",
    "render_instruction",
    "sample_tree",
    "validate",
    "verify_sample",
    "verify_shard",
]
