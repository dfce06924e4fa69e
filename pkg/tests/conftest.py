from functools import lru_cache

from grady.cli import resolve_path
from grady.syntax import parse_program
from grady.typecheck import check_program


@lru_cache(maxsize=None)
def load(name: str):
    """Parse and check a bundled corpus program (or mutant) by stem."""
    stem, src = resolve_path(name)
    return check_program(parse_program(src), stem)


@lru_cache(maxsize=None)
def source(name: str) -> str:
    return resolve_path(name)[1]
