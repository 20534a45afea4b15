"""Mutation-testing and test-suite-utility toolkit.

Generates first-order mutants of Python subject code, builds kill matrices
by sandboxed execution, scores candidate test suites with an incremental
marginal-utility reward, normalizes trajectory rewards into group-relative
advantages, selects and minimizes suites greedily, reranks code candidates
by consensus voting, and repairs truncated generated code.
"""

from .advantage import AdvantageGroup, group_advantages
from .errors import (
    DuplicateTest,
    EmptyGroup,
    EmptyMutantPool,
    InfrastructureError,
    MissingWeight,
    MistError,
    RepairFailed,
)
from .execution import (
    ExecutionLimits,
    KillMatrix,
    Status,
    Verdict,
    build_kill_matrix,
    discover_test_methods,
    prefilter_vulnerable,
    run_test,
)
from .mutation import (
    CATEGORIES,
    Mutant,
    SourceUnit,
    assign_difficulty_weight,
    generate_mutants,
    manifest_to_mutants,
    map_mutant_line,
    mutants_to_manifest,
    parse_source,
    passes_equivalence_heuristics,
)
from .repair import backtrack_repair, extract_code_block, render_prompt
from .rerank import ConsensusMatrix, build_consensus, select_best
from .reward import (
    RewardConfig,
    RewardTrace,
    StepCase,
    StepRecord,
    dynamic_penalty,
    marginal_utility,
    quality_score,
    score_trajectory,
    step_reward,
    trace_to_json,
    trajectory_reward,
)
from .suites import (
    SelectionResult,
    greedy_select,
    minimize_suite,
    mutation_score,
    utility_curve,
)

__version__ = "0.1.0"
