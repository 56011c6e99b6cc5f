"""Analysis engines: well-formedness, dynamic monitoring and attack search."""

from loo_verifier.core.analyzers.adversary import (
    AttackProgram,
    AttackSchema,
    Exhausted,
    attack_search,
    enumerate_attacks,
    replay_attack,
)
from loo_verifier.core.analyzers.module_wellformedness import (
    ModuleWellFormednessAnalyzer,
    wf_module_syntax,
)
from loo_verifier.core.analyzers.monitor import (
    SpecMonitor,
    check_invariant_dyn,
    check_methodspec_dyn,
    check_quadruple_dyn,
    instantiations,
    monitor_scenario,
)
from loo_verifier.core.analyzers.spec_wellformedness import (
    SpecWellFormednessAnalyzer,
    rename_spec,
    wf_spec,
)

__all__ = [
    "AttackProgram",
    "AttackSchema",
    "Exhausted",
    "ModuleWellFormednessAnalyzer",
    "SpecMonitor",
    "SpecWellFormednessAnalyzer",
    "attack_search",
    "check_invariant_dyn",
    "check_methodspec_dyn",
    "check_quadruple_dyn",
    "enumerate_attacks",
    "instantiations",
    "monitor_scenario",
    "rename_spec",
    "replay_attack",
    "wf_module_syntax",
    "wf_spec",
]
