"""Shipped Loo sources: the shop and bank modules, their specifications,
seed scenarios and proof bundles.

Files are looked up by name inside the kind's directory (`modules`,
`specs`, `scenarios`, `proofs`).
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

from loo_verifier.core.models.enums import FileType
from loo_verifier.core.models.proof import ProofBundle
from loo_verifier.core.models.spec import Scenario, Spec
from loo_verifier.core.models.syntax import ModuleDef
from loo_verifier.core.semantics.program import body_resolver
from loo_verifier.infrastructure.parsers import (
    parse_module_file,
    parse_proof_file,
    parse_scenario_file,
    parse_spec_file,
    read_proof_header,
)

_DIRECTORIES = {
    FileType.MODULE: "modules",
    FileType.SPEC: "specs",
    FileType.SCENARIO: "scenarios",
    FileType.PROOF: "proofs",
}

# Parse-only texts: no module implements them
PARSE_ONLY = frozenset({"case_studies.spec"})


def corpus_root() -> Path:
    return Path(str(files(__name__)))


def list_corpus(file_type: FileType | None = None) -> list[tuple[FileType, Path]]:
    """Every shipped file of `file_type` (all kinds when None), sorted by kind then name."""
    kinds = [file_type] if file_type is not None else list(_DIRECTORIES)
    out: list[tuple[FileType, Path]] = []
    for kind in kinds:
        directory = corpus_root() / _DIRECTORIES[kind]
        out.extend((kind, p) for p in sorted(directory.glob(f"*.{kind.value}")))
    return out


def corpus_path(name: str) -> Path:
    """Path of a shipped file given its name with suffix, e.g. `m_good.loo`.

    Raises:
        FileNotFoundError: If no shipped file has that name
    """
    suffix = Path(name).suffix.lstrip(".")
    for kind, directory in _DIRECTORIES.items():
        if kind.value == suffix:
            path = corpus_root() / directory / name
            if path.is_file():
                return path
    raise FileNotFoundError(f"no corpus file named {name}")


def resolve_reference(name: str, base_dir: Path | None = None) -> Path:
    """A file named by a proof header: next to the proof first, then in the corpus."""
    if base_dir is not None and (base_dir / name).is_file():
        return base_dir / name
    return corpus_path(name)


def load_module(name: str) -> ModuleDef:
    return parse_module_file(corpus_path(name))


def load_spec(name: str) -> Spec:
    return parse_spec_file(corpus_path(name))


def load_scenarios(name: str) -> tuple[Scenario, ...]:
    return parse_scenario_file(corpus_path(name))


def load_scenario(file_name: str, scenario: str | None = None) -> Scenario:
    """One scenario of a `.scn` file; the first when `scenario` is None.

    Raises:
        KeyError: If the file has no scenario of that name
    """
    found = load_scenarios(file_name)
    if scenario is None:
        return found[0]
    for s in found:
        if s.name == scenario:
            return s
    raise KeyError(f"{file_name} has no scenario {scenario}")


def load_bundle(path: Path) -> tuple[ModuleDef, Spec, ProofBundle]:
    """Parse a proof script with the module and specification its header names."""
    _, module_ref, spec_ref = read_proof_header(path.read_text(encoding="utf-8"), path.name)
    module = parse_module_file(resolve_reference(module_ref, path.parent))
    spec = parse_spec_file(resolve_reference(spec_ref, path.parent))
    bundle = parse_proof_file(path, body_resolver(module))
    return module, spec, bundle


def load_proof(name: str) -> tuple[ModuleDef, Spec, ProofBundle]:
    return load_bundle(corpus_path(name))


__all__ = [
    "PARSE_ONLY",
    "corpus_path",
    "corpus_root",
    "list_corpus",
    "load_bundle",
    "load_module",
    "load_proof",
    "load_scenario",
    "load_scenarios",
    "load_spec",
    "resolve_reference",
]
