"""File type detection for Loo source files."""

import hashlib
from pathlib import Path

from loo_verifier.core.models.enums import FileType
from loo_verifier.shared.exceptions import UnsupportedFileError

_SUFFIXES = {
    ".loo": FileType.MODULE,
    ".spec": FileType.SPEC,
    ".scn": FileType.SCENARIO,
    ".proof": FileType.PROOF,
}


def detect_file_type(file_path: Path) -> FileType:
    """
    Detect the kind of a source file from its suffix.

    Args:
        file_path: Path to the file

    Returns:
        FileType enum value

    Raises:
        UnsupportedFileError: If the suffix is not one of .loo, .spec, .scn, .proof
    """
    file_type = _SUFFIXES.get(file_path.suffix.lower())
    if file_type is None:
        raise UnsupportedFileError(
            f"unsupported file type {file_path.suffix or '(none)'}; "
            "use .loo, .spec, .scn or .proof files",
            source=file_path.name,
        )
    return file_type


def file_digest(file_path: Path) -> str:
    """SHA-256 of the file contents, as recorded in reports."""
    return hashlib.sha256(file_path.read_bytes()).hexdigest()


def get_file_info(file_path: Path) -> dict[str, str | int]:
    """
    Get basic information about a source file.

    Args:
        file_path: Path to the file

    Returns:
        Dictionary with file information
    """
    file_type = detect_file_type(file_path)
    return {
        "path": str(file_path),
        "name": file_path.name,
        "type": file_type.value,
        "size_bytes": file_path.stat().st_size,
        "sha256": file_digest(file_path),
    }
