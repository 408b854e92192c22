"""SMT-LIB v2 parsing, printing, sort checking and term utilities."""

from .ast import *  # noqa: F401,F403
from .ast import SortError
from .atoms import (
    binders_on_path,
    enumerate_atoms,
    free_vars,
    fresh_name,
    get_at,
    rename_free,
    replace_at,
    symbols_in,
)
from .parser import ParseError, parse_command, parse_script, parse_sort, parse_term
from .printer import PlaceholderError, print_command, print_script, print_term
from .sorts import CONNECTIVES, check_script, sort_of, theories_of
