"""Field-dynamics sampling for ferromagnetic Ising and random cluster models, with exact oracles."""

from .model import (
    ContractViolation,
    DomainError,
    GSWParams,
    Graph,
    InvalidInputError,
    IsingParams,
    ParseError,
    RCParams,
    UnsupportedInputError,
)
from .exact import enumerate_distribution, tv_distance
from .field import sample_ising, sample_rc, schedule_paper, schedule_practical

__all__ = [
    "ContractViolation",
    "DomainError",
    "GSWParams",
    "Graph",
    "InvalidInputError",
    "IsingParams",
    "ParseError",
    "RCParams",
    "UnsupportedInputError",
    "enumerate_distribution",
    "sample_ising",
    "sample_rc",
    "schedule_paper",
    "schedule_practical",
    "tv_distance",
]
