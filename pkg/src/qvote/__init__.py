"""Simulator for GHZ-based anonymous quantum e-voting."""
from .engine import (BulletinBoard, ElectionConfig, Tally, compute_election_vectors,
                     compute_tally, run_election, run_pools)
from .params import plan
from .quantum_sim import NoiseModel, make_ghz

__all__ = [
    "BulletinBoard", "ElectionConfig", "NoiseModel", "Tally", "compute_election_vectors",
    "compute_tally", "make_ghz", "plan", "run_election", "run_pools",
]
