"""Main Typer application for loo-verifier."""

import time
from pathlib import Path
from typing import Annotated, Optional

import typer
from pydantic import ValidationError
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from loo_verifier import __version__
from loo_verifier.cli.console import console, print_error, print_info, print_success, print_warning
from loo_verifier.core.analyzers import (
    AttackSchema,
    Exhausted,
    SpecMonitor,
    attack_search,
    wf_module_syntax,
    wf_spec,
)
from loo_verifier.core.logic.obligations import check_module
from loo_verifier.core.models.config import AttackBounds, VerifierSettings
from loo_verifier.core.models.enums import FileType, Severity, TraceStatus
from loo_verifier.core.models.results import Diagnostic, Report, TraceRecord, Verdict
from loo_verifier.core.models.spec import MethodSpec, Scenario, Spec
from loo_verifier.core.models.syntax import ModuleDef
from loo_verifier.core.rules.defaults import (
    DEFAULT_EXTERNAL_CLASSES,
    DEFAULT_FUZZ_BUDGET,
    DEFAULT_GHOST_FUEL,
    DEFAULT_INSTANTIATION_CAP,
    DEFAULT_MAX_CALLBACK_STMTS,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_OBJECTS,
    DEFAULT_MAX_STMTS,
    DEFAULT_MONITOR_BUDGET,
    DEFAULT_RUN_BUDGET,
    EXIT_BUDGET,
    EXIT_DATA,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_STUCK,
    EXIT_USAGE,
)
from loo_verifier.core.semantics.assertion_ops import binder_context, classify
from loo_verifier.core.semantics.machine import complete_state, run_to_completion
from loo_verifier.core.semantics.program import LinkedProgram, link
from loo_verifier.core.semantics.scoped import is_external
from loo_verifier.corpus import PARSE_ONLY, list_corpus, load_bundle, resolve_reference
from loo_verifier.infrastructure.parsers import (
    detect_file_type,
    file_digest,
    parse_module_file,
    parse_scenario_file,
    parse_spec_file,
    read_proof_header,
)
from loo_verifier.infrastructure.reports.json_report import write_json_report, write_trace_jsonl
from loo_verifier.shared.exceptions import LooError, ReportError
from loo_verifier.shared.formatters import (
    format_module,
    format_scenario,
    format_spec,
    format_state,
    trace_records,
)
from loo_verifier.shared.log import configure_logging

app = typer.Typer(
    name="loo",
    help="Interpreter, protection monitor, attack search and proof checker for the Loo language",
    add_completion=True,
    no_args_is_help=True,
)

_VERDICT_STYLE = {"verified": "verified", "inconclusive": "inconclusive", "violated": "violated"}


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        console.print(f"loo-verifier v{__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        Optional[bool],
        typer.Option(
            "--version",
            "-V",
            help="Show the version and exit",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
    verbose: Annotated[
        bool,
        typer.Option("--verbose", "-v", help="Log every step and solver answer"),
    ] = False,
) -> None:
    """loo - check object-capability specifications of Loo modules."""
    configure_logging(console, verbose)


# ============================================================
# Shared options and helpers
# ============================================================

SourceFile = Annotated[
    Path,
    typer.Argument(exists=True, file_okay=True, dir_okay=False, readable=True),
]
ExternalOption = Annotated[
    Optional[list[Path]],
    typer.Option(
        "--external",
        "-e",
        help="External module linked with the internal one (repeatable)",
        exists=True,
        dir_okay=False,
        readable=True,
    ),
]
ScenarioOption = Annotated[
    Optional[str],
    typer.Option("--scenario", "-s", help="Scenario to use when the file holds several"),
]
JsonOption = Annotated[
    Optional[Path],
    typer.Option("--json", help="Write a machine-readable report to this file"),
]
FuelOption = Annotated[
    int,
    typer.Option("--fuel", envvar="LOO_FUEL", help="Ghost-field unfoldings per expression"),
]
ConjunctOption = Annotated[
    Optional[list[str]],
    typer.Option("--conjunct", "-c", help="Only these conjuncts or groups (repeatable)"),
]


def _exit(code: int, message: str) -> typer.Exit:
    print_error(message)
    return typer.Exit(code)


def _inputs(*paths: Path) -> dict[str, str]:
    return {p.name: file_digest(p) for p in paths}


def _link(module_path: Path, externals: list[Path] | None) -> tuple[ModuleDef, LinkedProgram]:
    module = parse_module_file(module_path)
    others = [parse_module_file(p) for p in externals or []]
    errors = [d for m in (module, *others) for d in wf_module_syntax(m) if d.severity == Severity.ERROR]
    if errors:
        _print_diagnostics(errors)
        raise _exit(EXIT_DATA, f"{module_path.name} is not well-formed")
    return module, link(module, others)


def _scenario(path: Path, name: str | None) -> Scenario:
    scenarios = parse_scenario_file(path)
    if name is None:
        return scenarios[0]
    for s in scenarios:
        if s.name == name:
            return s
    known = ", ".join(s.name for s in scenarios)
    raise _exit(EXIT_USAGE, f"{path.name} has no scenario {name} (has: {known})")


def _select(spec: Spec, conjuncts: list[str] | None) -> Spec:
    if not conjuncts:
        return spec
    unknown = [c for c in conjuncts if not spec.resolve(c)]
    if unknown:
        raise _exit(EXIT_USAGE, f"unknown conjunct {unknown[0]}")
    return spec.select(conjuncts)


def _well_formed_spec(module: ModuleDef, spec: Spec, spec_path: Path) -> None:
    errors = [d for d in wf_spec(module, spec) if d.severity == Severity.ERROR]
    if errors:
        _print_diagnostics(errors)
        raise _exit(EXIT_DATA, f"{spec_path.name} is not well-formed for module {module.name}")


def _print_diagnostics(diagnostics: list[Diagnostic]) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Where", style="dim")
    table.add_column("Code", style="highlight")
    table.add_column("Message", overflow="fold")
    for d in diagnostics:
        table.add_row(d.location or "-", d.code, escape(d.message))
    console.print(table)


def _print_verdicts(verdicts: list[Verdict]) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Conjunct", style="cyan")
    table.add_column("Verdict")
    table.add_column("Instantiation")
    table.add_column("Steps", justify="right")
    table.add_column("Reason", overflow="fold")
    for v in verdicts:
        style = _VERDICT_STYLE[v.kind.value]
        inst = ", ".join(f"{k}={val}" for k, val in v.instantiation.items()) or "-"
        table.add_row(v.conjunct, f"[{style}]{v.kind.value}[/{style}]", inst, str(v.steps), escape(v.reason))
    console.print(table)


def _write_report(report: Report, json_path: Path | None) -> None:
    if json_path is None:
        return
    try:
        write_json_report(report, json_path)
    except ReportError as e:
        raise _exit(EXIT_DATA, str(e)) from e
    console.print(f"[muted]Report written to {json_path}[/muted]")


def _write_counterexample(program: str, path: Path | None) -> None:
    if path is None:
        return
    try:
        path.write_text(program, encoding="utf-8")
    except OSError as e:
        raise _exit(EXIT_DATA, f"cannot write counterexample to {path}: {e}") from e
    console.print(f"[muted]Counterexample written to {path}[/muted]")


def _report(command: str, started: float, **fields: object) -> Report:
    elapsed = round((time.perf_counter() - started) * 1000, 3)
    return Report(tool_version=__version__, command=command, elapsed_ms=elapsed, **fields)  # type: ignore[arg-type]


# ============================================================
# Commands
# ============================================================


@app.command()
def run(
    module_file: SourceFile,
    scenario_file: SourceFile,
    external: ExternalOption = None,
    scenario: ScenarioOption = None,
    budget: Annotated[
        int,
        typer.Option("--budget", "-b", envvar="LOO_BUDGET", help="Maximum number of steps"),
    ] = DEFAULT_RUN_BUDGET,
    trace: Annotated[
        Optional[Path],
        typer.Option("--trace", help="Dump every step as JSON lines to this file"),
    ] = None,
    json_output: JsonOption = None,
) -> None:
    """Run a scenario's statement to completion (exit 0), until stuck (2) or out of budget (3)."""
    started = time.perf_counter()
    try:
        if budget <= 0:
            raise _exit(EXIT_USAGE, "--budget must be positive")
        module, prog = _link(module_file, external)
        seed = _scenario(scenario_file, scenario)
        state = complete_state(prog, seed.state)
        keep = trace is not None or json_output is not None
        outcome = run_to_completion(prog, state, budget, keep_trace=keep)

        console.print()
        console.print(
            Panel.fit(
                f"[header]Module:[/header] {module.name}\n"
                f"[header]Scenario:[/header] {seed.name}\n"
                f"[header]Status:[/header] {outcome.status.value}\n"
                f"[header]Steps:[/header] {outcome.steps}",
                title="Run",
                border_style="blue",
            )
        )
        console.print(escape(format_state(outcome.final)))

        records: list[TraceRecord] = []
        if keep:
            steps = [(state, None, is_external(module, state))]
            steps += [(s, kind, is_external(module, s)) for s, kind in outcome.trace]
            records = trace_records(steps)
        if trace is not None:
            write_trace_jsonl(records, trace)

        match outcome.status:
            case TraceStatus.FINAL:
                code = EXIT_OK
                print_success("Terminated")
            case TraceStatus.STUCK:
                code = EXIT_STUCK
                print_warning(f"Stuck: {outcome.stuck}")
            case _:
                code = EXIT_BUDGET
                print_warning(f"Budget of {budget} steps exhausted")

        inputs = _inputs(module_file, scenario_file, *(external or []))
        notes = [f"stuck: {outcome.stuck}"] if outcome.stuck is not None else []
        _write_report(
            _report("run", started, inputs=inputs, settings={"run_budget": budget}, exit_code=code, trace=records, notes=notes),
            json_output,
        )
        raise typer.Exit(code)

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def monitor(
    module_file: SourceFile,
    spec_file: SourceFile,
    scenario_file: SourceFile,
    external: ExternalOption = None,
    scenario: ScenarioOption = None,
    conjunct: ConjunctOption = None,
    deep: Annotated[
        bool,
        typer.Option("--deep", help="Check post- and mid-conditions from every frame upward"),
    ] = False,
    budget: Annotated[
        int,
        typer.Option("--budget", "-b", envvar="LOO_BUDGET", help="Steps per obligation"),
    ] = DEFAULT_MONITOR_BUDGET,
    fuel: FuelOption = DEFAULT_GHOST_FUEL,
    cap: Annotated[
        int,
        typer.Option("--cap", help="Binder instantiations tried per conjunct"),
    ] = DEFAULT_INSTANTIATION_CAP,
    json_output: JsonOption = None,
) -> None:
    """Check a specification dynamically on the scoped runs of a scenario."""
    started = time.perf_counter()
    try:
        try:
            settings = VerifierSettings(monitor_budget=budget, fuel=fuel, instantiation_cap=cap, deep=deep)
        except ValidationError as e:
            raise _exit(EXIT_USAGE, f"invalid limits: {e.errors()[0]['msg']}") from e
        module, prog = _link(module_file, external)
        spec = _select(parse_spec_file(spec_file), conjunct)
        _well_formed_spec(module, spec, spec_file)
        seed = _scenario(scenario_file, scenario)

        console.print()
        console.print(f"[muted]Monitoring {len(spec.conjuncts)} conjuncts on {seed.name}...[/muted]")
        checker = SpecMonitor(prog, spec, seed, settings)
        verdicts = checker.analyze()
        if verdicts:
            _print_verdicts(verdicts)

        code = EXIT_FAILED if checker.violated else EXIT_OK
        if checker.violated:
            print_error("Specification violated")
        else:
            print_success(f"No violation within {budget} steps per obligation")

        inputs = _inputs(module_file, spec_file, scenario_file, *(external or []))
        _write_report(
            _report(
                "monitor",
                started,
                inputs=inputs,
                settings=settings.as_report_dict(),
                exit_code=code,
                verdicts=verdicts,
            ),
            json_output,
        )
        raise typer.Exit(code)

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def fuzz(
    module_file: SourceFile,
    spec_file: SourceFile,
    scenario_file: SourceFile,
    scenario: ScenarioOption = None,
    conjunct: ConjunctOption = None,
    max_stmts: Annotated[int, typer.Option("--max-stmts", help="Driver statements")] = DEFAULT_MAX_STMTS,
    max_objects: Annotated[int, typer.Option("--max-objects", help="Fresh objects")] = DEFAULT_MAX_OBJECTS,
    max_depth: Annotated[int, typer.Option("--max-depth", help="Attacker call depth")] = DEFAULT_MAX_DEPTH,
    max_callback_stmts: Annotated[
        int, typer.Option("--max-callback-stmts", help="Statements per attacker callback")
    ] = DEFAULT_MAX_CALLBACK_STMTS,
    external_classes: Annotated[
        int, typer.Option("--external-classes", help="Attacker classes a driver may instantiate")
    ] = DEFAULT_EXTERNAL_CLASSES,
    prune: Annotated[
        bool, typer.Option("--prune/--no-prune", help="Skip candidates equivalent to one already tried")
    ] = True,
    budget: Annotated[
        int,
        typer.Option("--budget", "-b", envvar="LOO_BUDGET", help="Steps per replayed candidate"),
    ] = DEFAULT_FUZZ_BUDGET,
    fuel: FuelOption = DEFAULT_GHOST_FUEL,
    json_output: JsonOption = None,
    emit_cex: Annotated[
        Optional[Path], typer.Option("--emit-cex", help="Write the counterexample program to this file")
    ] = None,
) -> None:
    """Search attacker programs, smallest first, for one that violates the specification."""
    started = time.perf_counter()
    try:
        try:
            bounds = AttackBounds(
                max_stmts=max_stmts,
                max_objects=max_objects,
                max_depth=max_depth,
                max_callback_stmts=max_callback_stmts,
                max_external_classes=external_classes,
            )
            settings = VerifierSettings(fuzz_budget=budget, fuel=fuel)
        except ValidationError as e:
            raise _exit(EXIT_USAGE, f"invalid bounds: {e.errors()[0]['msg']}") from e
        module = parse_module_file(module_file)
        spec = _select(parse_spec_file(spec_file), conjunct)
        _well_formed_spec(module, spec, spec_file)
        seed = _scenario(scenario_file, scenario)

        console.print()
        console.print(
            f"[muted]Searching attacks on {module.name}: {bounds.max_stmts} statements, "
            f"{bounds.max_objects} fresh objects, depth {bounds.max_depth}...[/muted]"
        )
        result = attack_search(module, spec, AttackSchema(module, seed, bounds, prune=prune), budget, settings)

        inputs = _inputs(module_file, spec_file, scenario_file)
        if isinstance(result, Exhausted):
            code = EXIT_OK
            print_success(f"Exhausted: {result.candidates} candidates ({result.pruned} pruned), no counterexample")
            report = _report(
                "fuzz",
                started,
                inputs=inputs,
                settings=settings.as_report_dict() | bounds.model_dump(),
                exit_code=code,
                notes=[f"exhausted after {result.candidates} candidates, {result.pruned} pruned"],
            )
        else:
            code = EXIT_FAILED
            console.print(
                Panel.fit(
                    escape(result.program.rstrip()),
                    title=f"Counterexample to {result.conjunct} (candidate {result.candidate_index})",
                    border_style="red",
                )
            )
            _print_verdicts([result.verdict])
            _write_counterexample(result.program, emit_cex)
            report = _report(
                "fuzz",
                started,
                inputs=inputs,
                settings=settings.as_report_dict() | bounds.model_dump(),
                exit_code=code,
                verdicts=[result.verdict],
                counterexample=result,
            )
        _write_report(report, json_output)
        raise typer.Exit(code)

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def check(
    proof_file: SourceFile,
    json_output: JsonOption = None,
) -> None:
    """Check a proof bundle; exit 0 only when every derivation holds and no goal is open."""
    started = time.perf_counter()
    try:
        module, spec, bundle = load_bundle(proof_file)
        console.print()
        console.print(f"[muted]Checking {bundle.name}: {len(bundle.nodes)} derivations...[/muted]")
        result = check_module(module, spec, bundle)

        table = Table(show_header=True, header_style="bold")
        table.add_column("Derivation", style="cyan")
        table.add_column("Rule")
        table.add_column("Result")
        for o in result.obligations:
            mark = "[success]ok[/success]" if o.accepted else "[error]rejected[/error]"
            table.add_row(o.name, o.rule, mark)
        console.print(table)

        problems = [d for o in result.obligations for d in o.diagnostics] + result.diagnostics
        if problems:
            _print_diagnostics(problems)
        for name in result.open_obligations:
            print_warning(f"open obligation {name}")

        code = EXIT_OK if result.accepted else EXIT_FAILED
        if result.accepted:
            print_success(f"{bundle.name}: accepted")
        else:
            print_error(f"{bundle.name}: rejected")

        _, module_ref, spec_ref = read_proof_header(proof_file.read_text(encoding="utf-8"), proof_file.name)
        base = proof_file.parent
        inputs = _inputs(proof_file, resolve_reference(module_ref, base), resolve_reference(spec_ref, base))
        _write_report(_report("check", started, inputs=inputs, exit_code=code, check=result), json_output)
        raise typer.Exit(code)

    except FileNotFoundError as e:
        raise _exit(EXIT_DATA, str(e)) from e
    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def fmt(
    source_file: SourceFile,
    check_only: Annotated[
        bool,
        typer.Option("--check", help="Exit 1 when the file is not in canonical form"),
    ] = False,
) -> None:
    """Print a module, specification or scenario file in canonical form."""
    try:
        file_type = detect_file_type(source_file)
        match file_type:
            case FileType.MODULE:
                canonical = format_module(parse_module_file(source_file))
            case FileType.SPEC:
                canonical = format_spec(parse_spec_file(source_file))
            case FileType.SCENARIO:
                canonical = "\n".join(format_scenario(s) for s in parse_scenario_file(source_file))
            case _:
                raise _exit(EXIT_USAGE, "proof scripts are not reformatted; their abbreviations would be lost")

        if check_only:
            if source_file.read_text(encoding="utf-8") != canonical:
                print_warning(f"{source_file.name} is not in canonical form")
                raise typer.Exit(EXIT_FAILED)
            print_success(f"{source_file.name} is in canonical form")
            return
        console.print(escape(canonical), end="", highlight=False, soft_wrap=True)

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def corpus(
    kind: Annotated[
        Optional[FileType],
        typer.Option("--kind", "-k", help="Only files of this kind: loo, spec, scn, proof"),
    ] = None,
) -> None:
    """List the modules, specifications, scenarios and proofs shipped with the tool."""
    if kind == FileType.UNKNOWN:
        raise _exit(EXIT_USAGE, "choose one of loo, spec, scn, proof")
    table = Table(show_header=True, header_style="bold")
    table.add_column("Kind", style="dim")
    table.add_column("Name", style="cyan")
    table.add_column("Path", overflow="fold")
    for file_type, path in list_corpus(kind):
        name = path.name + (" (parse only)" if path.name in PARSE_ONLY else "")
        table.add_row(file_type.value, name, str(path))
    console.print(table)


@app.command()
def info(
    source_file: SourceFile,
) -> None:
    """Show what a Loo source file contains without running or checking it."""
    try:
        file_type = detect_file_type(source_file)
        console.print()
        console.print(
            Panel.fit(
                f"[header]File:[/header] {source_file.name}\n"
                f"[header]Type:[/header] {file_type.value}\n"
                f"[header]Size:[/header] {source_file.stat().st_size:,} bytes\n"
                f"[header]SHA-256:[/header] {file_digest(source_file)}",
                title="File information",
                border_style="blue",
            )
        )
        table = Table(show_header=True, header_style="bold")
        match file_type:
            case FileType.MODULE:
                module = parse_module_file(source_file)
                table.add_column("Class", style="cyan")
                table.add_column("Fields")
                table.add_column("Methods")
                for name in sorted(module.classes):
                    cdef = module.classes[name]
                    table.add_row(
                        name,
                        ", ".join(f"{f.name}: {f.type}" for f in cdef.fields) or "-",
                        ", ".join(f"{m.privacy.value} {m.name}" for m in cdef.methods) or "-",
                    )
            case FileType.SPEC:
                spec = parse_spec_file(source_file)
                table.add_column("Conjunct", style="cyan")
                table.add_column("Kind")
                table.add_column("About")
                for c in spec.conjuncts:
                    if isinstance(c, MethodSpec):
                        table.add_row(c.name, "method", f"{c.privacy.value} {c.cls}::{c.method}")
                    else:
                        table.add_row(c.name, "invariant", ", ".join(f"{b.name}: {b.type}" for b in c.binders))
                for group, members in spec.groups.items():
                    table.add_row(group, "group", " /\\ ".join(members))
            case FileType.SCENARIO:
                table.add_column("Scenario", style="cyan")
                table.add_column("Objects", justify="right")
                table.add_column("Frame")
                for s in parse_scenario_file(source_file):
                    frame = ", ".join(s.state.frames[0].vars)
                    table.add_row(s.name, str(len(s.state.heap)), frame)
            case _:
                name, module_ref, spec_ref = read_proof_header(
                    source_file.read_text(encoding="utf-8"), source_file.name
                )
                table.add_column("Bundle", style="cyan")
                table.add_column("Module")
                table.add_column("Specification")
                table.add_row(name, module_ref, spec_ref)
        console.print(table)

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e


@app.command()
def classify_spec(
    module_file: SourceFile,
    spec_file: SourceFile,
) -> None:
    """Show whether each invariant of a specification is Stable, Pos and encapsulated."""
    try:
        module = parse_module_file(module_file)
        spec = parse_spec_file(spec_file)
        table = Table(show_header=True, header_style="bold")
        table.add_column("Conjunct", style="cyan")
        table.add_column("Stable")
        table.add_column("Pos")
        table.add_column("Enc")
        for inv in spec.invariants:
            gamma = binder_context([(b.name, b.type) for b in inv.binders])
            c = classify(module, inv.body, gamma)
            table.add_row(inv.name, str(c.stable).lower(), str(c.pos).lower(), c.enc.value)
        console.print(table)
        errors = [d for d in wf_spec(module, spec) if d.severity == Severity.ERROR]
        if errors:
            _print_diagnostics(errors)
            raise typer.Exit(EXIT_FAILED)
        print_info(f"{spec_file.name} is well-formed for {module.name}")

    except LooError as e:
        raise _exit(EXIT_DATA, str(e)) from e
