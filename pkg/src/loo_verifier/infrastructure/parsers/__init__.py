"""Parsers for the Loo file formats."""

from loo_verifier.infrastructure.parsers.detector import (
    detect_file_type,
    file_digest,
    get_file_info,
)
from loo_verifier.infrastructure.parsers.module_parser import (
    ModuleParser,
    parse_module,
    parse_module_file,
)
from loo_verifier.infrastructure.parsers.proof_parser import (
    ProofParser,
    parse_proof,
    parse_proof_file,
    read_proof_header,
)
from loo_verifier.infrastructure.parsers.scenario_parser import (
    ScenarioParser,
    parse_scenario_file,
    parse_scenarios,
)
from loo_verifier.infrastructure.parsers.spec_parser import (
    SpecParser,
    parse_assertion,
    parse_spec,
    parse_spec_file,
)

__all__ = [
    # Detection
    "detect_file_type",
    "file_digest",
    "get_file_info",
    # Modules
    "ModuleParser",
    "parse_module",
    "parse_module_file",
    # Specifications and assertions
    "SpecParser",
    "parse_assertion",
    "parse_spec",
    "parse_spec_file",
    # Scenarios
    "ScenarioParser",
    "parse_scenario_file",
    "parse_scenarios",
    # Proofs
    "ProofParser",
    "parse_proof",
    "parse_proof_file",
    "read_proof_header",
]
