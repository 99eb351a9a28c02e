"""Dense linear-programming core: two-phase bounded revised simplex."""
from .model import LinearProgram, LpError, LpSolution, read_lp_text, solve_lp, write_lp_text
from .simplex import BACKEND, solve_standard

__all__ = [
    "BACKEND",
    "LinearProgram",
    "LpError",
    "LpSolution",
    "read_lp_text",
    "solve_lp",
    "solve_standard",
    "write_lp_text",
]
