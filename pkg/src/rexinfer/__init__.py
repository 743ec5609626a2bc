"""Inference of concise deterministic regular expressions from example words.

The pipeline: fit a probabilistic automaton to the sample (``training``),
make it deterministic by pruning low-mass competing edges, translate it
to an expression (``rewrite``), and pick the best candidate across
occurrence bounds and restarts (``infer``, ``measures``).  ``glushkov``
supplies position automata, equivalence, counting, and coverage;
``generate`` produces synthetic targets and samples; ``cli`` is the
command-line surface.
"""

from .automaton import SINK, SRC, Koa, Sample, complete_koa, det_run, nfa_accepts, prune
from .generate import (
    GenConfig,
    SampleGenConfig,
    covering_sample,
    gen_expression,
    gen_sample,
    hard_family,
)
from .glushkov import (
    Dfa,
    accepts,
    count_words,
    coverage,
    determinize,
    equivalent,
    glushkov_automaton,
    is_deterministic,
    language_subset,
)
from .infer import idregex, oracle_learn, prefix_tree_expression
from .measures import Candidate, best, language_size, make_candidate, mdl_cost
from .regex import (
    EMPTY,
    EPSILON,
    Regex,
    atoms,
    expr_length,
    normalize,
    parse,
    render,
    simplify,
)
from .rewrite import koa_to_kore, marking, soa_to_sore
from .training import (
    DisambiguationFailed,
    Pomm,
    TrainConfig,
    ZeroProbabilityWord,
    baum_welch,
    default_bw_iters,
    disambiguate,
    init,
    learn_koa,
)

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "Dfa",
    "DisambiguationFailed",
    "EMPTY",
    "EPSILON",
    "GenConfig",
    "Koa",
    "Pomm",
    "Regex",
    "SINK",
    "SRC",
    "Sample",
    "SampleGenConfig",
    "TrainConfig",
    "ZeroProbabilityWord",
    "accepts",
    "atoms",
    "baum_welch",
    "best",
    "complete_koa",
    "count_words",
    "coverage",
    "covering_sample",
    "default_bw_iters",
    "det_run",
    "determinize",
    "disambiguate",
    "equivalent",
    "expr_length",
    "gen_expression",
    "gen_sample",
    "glushkov_automaton",
    "hard_family",
    "idregex",
    "init",
    "is_deterministic",
    "koa_to_kore",
    "language_size",
    "language_subset",
    "learn_koa",
    "make_candidate",
    "marking",
    "mdl_cost",
    "nfa_accepts",
    "normalize",
    "oracle_learn",
    "parse",
    "prefix_tree_expression",
    "prune",
    "render",
    "simplify",
    "soa_to_sore",
]
