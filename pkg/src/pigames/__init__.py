"""π-calculus processes, their game semantics and fair testing."""
from .explore import Budget, Verdict
from .process import parse, pretty
from .reduction import fair_equiv_pi, normalize, passes
from .sd import SDState, bot_d, fair_equiv_d
from .strategy import translate

__all__ = ["Budget", "Verdict", "parse", "pretty", "normalize", "passes", "fair_equiv_pi",
           "SDState", "bot_d", "fair_equiv_d", "translate"]
__version__ = "0.1.0"
