"""Label propagation on Erdős–Rényi graphs: simulation, the ALAP coupling and binomial lemmas."""

from .errors import CapacityError, ContractError, ParameterError, RegimeError
from .graph import Graph, GnpParams, sample_gnp
from .dynamics import LabelVector, RunResult, TiePolicy, lpa_round, round1_minindex, run_lpa
from .theory import DerivedParams, derive_params

__all__ = [
    "CapacityError", "ContractError", "ParameterError", "RegimeError",
    "Graph", "GnpParams", "sample_gnp",
    "LabelVector", "RunResult", "TiePolicy", "lpa_round", "round1_minindex", "run_lpa",
    "DerivedParams", "derive_params",
]
