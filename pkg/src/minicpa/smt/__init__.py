"""SMT layer: term DAG, SMT-LIB2 rendering, solver client, bundled solver."""

from minicpa.smt import terms
from minicpa.smt.client import SmtResult, SolverClient, shared_client

__all__ = ["terms", "SmtResult", "SolverClient", "shared_client"]
