"""Exact simulation and design of heralded linear-optical two-qubit gates."""
from .cascade import ChainSpec, OutcomeRecord, chain_summary, corrected_metrics, migration_check, run_chain
from .fock import (
    DEFAULT_PHOTON_CAP,
    BeamSplitter,
    ElementError,
    FockBasis,
    PhaseShifter,
    PhotonCapError,
    QuantumState,
    evolve,
    permanent,
    single_photon_unitary,
)
from .ga import FitnessSpec, GAConfig, GAReport, GenomeEvaluator, run_ga
from .genome import Genome, GenomeLayout, crossover, decode, encode, mutate, random_genome
from .mesh import DescentConfig, HeraldSpec, MeshDesign, build_mesh, descend, fit_unitary
from .metrics import PNR, THRESHOLD, DetectorModel, MetricsReport, metrics_report
from .schemes import BUILTINS, CX, CZ, TARGETS, Scheme, SchemeError, builtin, load_scheme, resolve_scheme, save_scheme

__version__ = "0.1.0"

__all__ = [
    "BUILTINS", "CX", "CZ", "DEFAULT_PHOTON_CAP", "PNR", "TARGETS", "THRESHOLD",
    "BeamSplitter", "ChainSpec", "DescentConfig", "DetectorModel", "ElementError", "FitnessSpec", "FockBasis",
    "GAConfig", "GAReport", "Genome", "GenomeEvaluator", "GenomeLayout", "HeraldSpec", "MeshDesign",
    "MetricsReport", "OutcomeRecord", "PhaseShifter", "PhotonCapError", "QuantumState", "Scheme", "SchemeError",
    "build_mesh", "builtin", "chain_summary", "corrected_metrics", "crossover", "decode", "descend", "encode",
    "evolve", "fit_unitary", "load_scheme", "metrics_report", "migration_check", "mutate", "permanent",
    "random_genome", "resolve_scheme", "run_chain", "run_ga", "save_scheme", "single_photon_unitary",
]
