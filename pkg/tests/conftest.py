import pytest
from pathlib import Path

from minicpa.cfa import build_cfa
from minicpa.frontend import parse_program, typecheck

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def load_cfa(name: str, entry: str = "main"):
    path = PROGRAMS / name
    source = path.read_text()
    program = parse_program(source, str(path))
    typecheck(program, entry)
    return build_cfa(program, entry, str(path), source)


def cfa_from_source(source: str, entry: str = "main", path: str = "<test>"):
    program = parse_program(source, path)
    typecheck(program, entry)
    return build_cfa(program, entry, path, source)


@pytest.fixture(scope="session")
def programs_dir() -> Path:
    return PROGRAMS
