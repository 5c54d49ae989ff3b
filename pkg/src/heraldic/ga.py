"""Generational genetic search for heralded two-qubit gates.

Each generation evaluates every genome, keeps the best ``parents`` by
fitness (ties: higher P, then lower population index), and breeds a full
new generation by crossover of two distinct parents followed by mutation.
No parent survives unless ``elitism`` asks for it.

Two fitness functions are provided. ``f1`` raises the actuation probability
up to ``P_min`` and then optimizes fidelity; ``f2`` raises fidelity up to
``F_min`` and then optimizes probability, optionally discarding schemes
whose heralding is not perfectly reliable.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import _kernels as K
from .fock import DEFAULT_PHOTON_CAP, FockBasis, PhotonCapError
from .genome import (SINGLE_POINT, UNIFORM, Genome, GenomeLayout, crossover, decode, encode, mutate,
                     random_genome)
from .metrics import PNR, DetectorModel, fidelity
from .schemes import TARGETS, Scheme, TargetGate, resolve_scheme

F1 = "f1"
F2 = "f2"
PB_TOL = 1e-6


def fitness_f1(P: float, F: float, P_min: float) -> float:
    """Probability until it reaches ``P_min``, then a thousand times the fidelity."""
    if P < P_min:
        return P
    return 1000.0 * F


def fitness_f2(P: float, F: float, F_min: float, pb_min: float = 1.0, require_pb_one: bool = False) -> float:
    """Fidelity until it reaches ``F_min``, then a thousand times the probability.

    With ``require_pb_one`` a scheme whose worst-input Pb falls short of 1
    is held just below ``F_min`` whatever its fidelity.
    """
    if require_pb_one and pb_min < 1.0 - PB_TOL:
        return min(F, math.nextafter(F_min, 0.0))
    if F < F_min:
        return F
    return 1000.0 * P


@dataclass(frozen=True)
class FitnessSpec:
    kind: str = F1
    P_min: float = 0.1
    F_min: float = 0.9999
    require_pb_one: bool = False

    def __post_init__(self):
        if self.kind not in (F1, F2):
            raise ValueError(f"unknown fitness {self.kind!r}")
        if not 0 < self.P_min < 1:
            raise ValueError("P_min must lie in (0, 1)")
        if not 0 < self.F_min < 1:
            raise ValueError("F_min must lie in (0, 1)")

    def value(self, P: float, F: float, pb_min: float) -> float:
        if self.kind == F1:
            return fitness_f1(P, F, self.P_min)
        return fitness_f2(P, F, self.F_min, pb_min, self.require_pb_one)

    def past_threshold(self, P: float, F: float, pb_min: float) -> bool:
        """Whether the specie sits on the second branch of its fitness."""
        if self.kind == F1:
            return P >= self.P_min
        if self.require_pb_one and pb_min < 1.0 - PB_TOL:
            return False
        return F >= self.F_min


@dataclass(frozen=True)
class GAConfig:
    population: int = 500
    parents: int = 80
    mutation_rate: float = 0.5
    mutation_per_gene: bool = False
    layout: GenomeLayout = GenomeLayout(depth=3, mode_count=6)
    crossover: str = SINGLE_POINT
    fitness: FitnessSpec = FitnessSpec()
    target: str = "cz"
    detector: DetectorModel = PNR
    fidelity_goal: float = 0.999
    probability_goal: Optional[float] = None
    max_generations: int = 500
    seed: int = 0
    elitism: int = 0
    hall_of_fame: int = 10
    seed_schemes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "detector", DetectorModel(self.detector))
        object.__setattr__(self, "seed_schemes", tuple(self.seed_schemes))
        if not 1 <= self.parents <= self.population:
            raise ValueError("need 1 <= parents <= population")
        if not 0 <= self.elitism <= self.parents:
            raise ValueError("elitism must lie in [0, parents]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.crossover not in (SINGLE_POINT, UNIFORM):
            raise ValueError(f"unknown crossover kind {self.crossover!r}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; choose from {sorted(TARGETS)}")
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")
        if len(self.seed_schemes) > self.population:
            raise ValueError("more seed schemes than population slots")

    @property
    def target_gate(self) -> TargetGate:
        return TARGETS[self.target]

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["detector"] = self.detector.value
        doc["seed_schemes"] = list(self.seed_schemes)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "GAConfig":
        doc = dict(doc)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        if "layout" in doc:
            doc["layout"] = GenomeLayout(**doc["layout"])
        if "fitness" in doc:
            doc["fitness"] = FitnessSpec(**doc["fitness"])
        return cls(**doc)


def load_config(path) -> GAConfig:
    """Read a GA config from a ``.json`` or ``.toml`` file."""
    path = Path(path)
    if path.suffix == ".toml":
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        doc = json.loads(path.read_text(encoding="utf-8"))
    return GAConfig.from_dict(doc)


@dataclass(frozen=True)
class EvaluatedSpecie:
    genome: Genome
    fitness: float
    F: float
    P: float
    Pb_min: float
    index: int = 0

    def to_dict(self) -> dict:
        return {"genes": self.genome.genes.tolist(), "fitness": self.fitness, "F": self.F, "P": self.P,
                "Pb_min": self.Pb_min, "index": self.index}

    @classmethod
    def from_dict(cls, doc: dict, layout: GenomeLayout) -> "EvaluatedSpecie":
        genome = Genome(layout, np.array(doc["genes"], dtype=np.float64))
        return cls(genome, doc["fitness"], doc["F"], doc["P"], doc["Pb_min"], doc["index"])


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    best_F: float
    best_P: float
    best_Pb_min: float
    best_ever_fitness: float
    valid: int


@dataclass
class GAReport:
    history: list = field(default_factory=list)
    best_per_generation: list = field(default_factory=list)
    hall_of_fame: list = field(default_factory=list)
    evaluations: int = 0
    stopped: str = ""
    best_scheme: Optional[Scheme] = None

    @property
    def generations(self) -> int:
        return len(self.history)

    def to_dict(self) -> dict:
        from .schemes import scheme_to_dict

        return {
            "generations": self.generations,
            "evaluations": self.evaluations,
            "stopped": self.stopped,
            "history": [asdict(h) for h in self.history],
            "best_per_generation": [s.to_dict() for s in self.best_per_generation],
            "hall_of_fame": [s.to_dict() for s in self.hall_of_fame],
            "best_scheme": scheme_to_dict(self.best_scheme) if self.best_scheme is not None else None,
        }


class GenomeEvaluator:
    """Metrics of a genome computed straight from its genes.

    Decoding to a :class:`Scheme` is skipped in the loop: element arrays are
    packed from the genes and every mode pair's partner table is prepared
    once per layout.
    """

    def __init__(self, layout: GenomeLayout, target: TargetGate, detector=PNR,
                 photon_cap: int = DEFAULT_PHOTON_CAP):
        photons = 2 + layout.ancilla_photons
        if photons > photon_cap:
            raise PhotonCapError(f"{photons} photons exceeds cap {photon_cap}")
        self.layout = layout
        self.target = target
        self.detector = DetectorModel(detector)
        self.basis = basis = FockBasis.get(layout.mode_count, photons)
        m = layout.mode_count
        self._partners = np.full((m, m, basis.dim, photons + 1), -1, dtype=np.int64)
        for a in range(m):
            for b in range(m):
                if a != b:
                    self._partners[a, b] = basis.partner(a, b)
        d = layout.depth
        order = []
        for i in range(d):
            order.append((K.BS, i))
            order += [(K.PS, j) for j in range(layout.ps_count) if j % d == i]
        self._kinds = np.array([k for k, _ in order], dtype=np.int64)
        self._slot = np.array([s for _, s in order], dtype=np.int64)
        self._is_bs = self._kinds == K.BS
        self._phi_index = np.where(self._is_bs, self._slot, d + self._slot)
        self._readouts = {}

    def _readout(self, anc_in: tuple, anc_out: tuple):
        key = (anc_in, anc_out)
        cached = self._readouts.get(key)
        if cached is not None:
            return cached
        basis, occ = self.basis, self.basis.occ
        signal = [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]
        inputs = np.array([basis.index(s + anc_in) for s in signal], dtype=np.int64)
        logical = np.array([basis.index(s + anc_out) for s in signal], dtype=np.int64)
        mask = np.ones(basis.dim, dtype=bool)
        for k, n in enumerate(anc_out):
            col = occ[:, 4 + k]
            if self.detector is DetectorModel.PNR:
                mask &= col == n
            elif n > 0:
                mask &= col >= 1
            else:
                mask &= col == 0
        cached = (inputs, logical, mask)
        self._readouts[key] = cached
        return cached

    def _anc(self, genes: np.ndarray, part: slice) -> tuple:
        counts = np.bincount(genes[part].astype(np.int64), minlength=self.layout.ancilla_modes)
        return tuple(int(c) for c in counts)

    def pack(self, genes: np.ndarray):
        """Kernel element arrays ``(kinds, mode_a, mode_b, thetas, phis)`` of a genome."""
        layout = self.layout
        bs, ps = self._is_bs, ~self._is_bs
        pairs = genes[layout.bs_modes].astype(np.int64).reshape(-1, 2)
        n = self._kinds.shape[0]
        mode_a = np.empty(n, dtype=np.int64)
        mode_b = np.zeros(n, dtype=np.int64)
        thetas = np.zeros(n)
        mode_a[bs] = pairs[self._slot[bs], 0]
        mode_b[bs] = pairs[self._slot[bs], 1]
        mode_a[ps] = genes[layout.ps_modes].astype(np.int64)[self._slot[ps]]
        thetas[bs] = np.radians(genes[layout.theta][self._slot[bs]])
        phis = np.radians(genes[layout.phi][self._phi_index])
        return self._kinds, mode_a, mode_b, thetas, phis

    def __call__(self, genes: np.ndarray):
        """``(F, P, Pb_min, Pa)`` for one genome."""
        kinds, mode_a, mode_b, thetas, phis = self.pack(genes)
        inputs, logical, mask = self._readout(self._anc(genes, self.layout.ancilla_in),
                                              self._anc(genes, self.layout.ancilla_out))
        vecs = np.zeros((self.basis.dim, 4), dtype=np.complex128)
        vecs[inputs, np.arange(4)] = 1.0
        partners = self._partners[mode_a, mode_b]
        out = K.evolve_dense(vecs, self.basis.occ, partners, kinds, mode_a, mode_b, thetas, phis, self.basis.photons)
        m = out[logical]
        pa = np.sum(np.abs(out[mask]) ** 2, axis=0)
        p = float(np.vdot(m, m).real / 4)
        correct = np.abs(np.sum(self.target.matrix.conj() * m, axis=0)) ** 2
        pb = np.divide(correct, pa, out=np.zeros(4), where=pa > 0)
        return fidelity(m, self.target), p, float(pb.min()), pa


def _sort_key(specie: EvaluatedSpecie):
    return (-specie.fitness, -specie.P, specie.index)


class _Engine:
    def __init__(self, config: GAConfig, threads: int = 1, photon_cap: int = DEFAULT_PHOTON_CAP):
        self.config = config
        self.threads = max(1, int(threads))
        self.evaluator = GenomeEvaluator(config.layout, config.target_gate, config.detector, photon_cap)

    def evaluate(self, population) -> list:
        fit = self.config.fitness

        def one(item):
            index, genome = item
            F, P, pb_min, _ = self.evaluator(genome.genes)
            return EvaluatedSpecie(genome, fit.value(P, F, pb_min), F, P, pb_min, index)

        items = list(enumerate(population))
        if self.threads == 1:
            return [one(it) for it in items]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(one, items, chunksize=max(1, len(items) // (4 * self.threads))))

    def initial_population(self, rng: np.random.Generator) -> list:
        cfg = self.config
        population = [encode(resolve_scheme(ref), cfg.layout) for ref in cfg.seed_schemes]
        while len(population) < cfg.population:
            population.append(random_genome(cfg.layout, rng))
        return population

    def breed(self, ranked: list, rng: np.random.Generator) -> list:
        cfg = self.config
        pool = [s.genome for s in ranked[: cfg.parents]]
        children = [g.copy() for g in pool[: cfg.elitism]]
        while len(children) < cfg.population:
            if len(pool) > 1:
                i, j = rng.choice(len(pool), 2, replace=False)
            else:
                i = j = 0
            child = crossover(pool[i], pool[j], cfg.crossover, rng)
            children.append(mutate(child, rng, cfg.mutation_rate, cfg.mutation_per_gene))
        return children

    def reached_goal(self, specie: EvaluatedSpecie) -> bool:
        cfg = self.config
        if not cfg.fitness.past_threshold(specie.P, specie.F, specie.Pb_min):
            return False
        if specie.F < cfg.fidelity_goal:
            return False
        return cfg.probability_goal is None or specie.P >= cfg.probability_goal - 1e-12


def _comparable(config: GAConfig) -> dict:
    doc = config.to_dict()
    doc.pop("max_generations")
    return doc


def _save_checkpoint(path, config, generation, population, rng, report, best_ever, hall):
    doc = {
        "config": config.to_dict(),
        "generation": generation,
        "population": [g.genes.tolist() for g in population],
        "rng_state": rng.bit_generator.state,
        "history": [asdict(h) for h in report.history],
        "best_per_generation": [s.to_dict() for s in report.best_per_generation],
        "hall": [s.to_dict() for s in hall.values()],
        "best_ever": best_ever,
        "evaluations": report.evaluations,
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc), encoding="utf-8")
    tmp.replace(path)


def _load_checkpoint(path, config: GAConfig):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    saved = GAConfig.from_dict(doc["config"])
    if _comparable(saved) != _comparable(config):
        raise ValueError("checkpoint was written by a different configuration")
    layout = config.layout
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = doc["rng_state"]
    population = [Genome(layout, np.array(g, dtype=np.float64)) for g in doc["population"]]
    report = GAReport(
        history=[GenerationStats(**h) for h in doc["history"]],
        best_per_generation=[EvaluatedSpecie.from_dict(s, layout) for s in doc["best_per_generation"]],
        evaluations=doc["evaluations"],
    )
    hall = {}
    for s in doc["hall"]:
        specie = EvaluatedSpecie.from_dict(s, layout)
        hall[specie.genome.genes.tobytes()] = specie
    return doc["generation"], population, rng, report, doc["best_ever"], hall


def _hall_order(specie: EvaluatedSpecie):
    return (-specie.fitness, -specie.P, tuple(specie.genome.genes))


def run_ga(config: GAConfig, telemetry=None, checkpoint=None, resume: bool = False, threads: int = 1,
           photon_cap: int = DEFAULT_PHOTON_CAP) -> GAReport:
    """Run the generational loop until the goal is met or generations run out.

    ``telemetry`` is a path or text stream receiving one JSON line per
    generation. ``checkpoint`` names a file rewritten after every generation;
    with ``resume`` the run continues from it and ends exactly as an
    uninterrupted run with the same seed would.
    """
    engine = _Engine(config, threads, photon_cap)
    if resume and checkpoint is not None and Path(checkpoint).exists():
        generation, population, rng, report, best_ever, hall = _load_checkpoint(checkpoint, config)
    else:
        rng = np.random.default_rng(config.seed)
        population = engine.initial_population(rng)
        generation, report, best_ever, hall = 0, GAReport(), -math.inf, {}

    sink, close = None, False
    if telemetry is not None:
        if hasattr(telemetry, "write"):
            sink = telemetry
        else:
            sink, close = open(telemetry, "a" if resume else "w", encoding="utf-8"), True
    started = time.perf_counter()
    stopped = "max_generations"
    try:
        while generation < config.max_generations:
            ranked = sorted(engine.evaluate(population), key=_sort_key)
            report.evaluations += len(population)
            best = ranked[0]
            best_ever = max(best_ever, best.fitness)
            valid = [s for s in ranked if config.fitness.past_threshold(s.P, s.F, s.Pb_min)]
            for s in valid[: config.hall_of_fame]:
                hall.setdefault(s.genome.genes.tobytes(), s)
            if len(hall) > config.hall_of_fame:
                keep = sorted(hall.values(), key=_hall_order)[: config.hall_of_fame]
                hall = {s.genome.genes.tobytes(): s for s in keep}
            stats = GenerationStats(generation, best.fitness, best.F, best.P, best.Pb_min, best_ever, len(valid))
            report.history.append(stats)
            report.best_per_generation.append(best)
            if sink is not None:
                line = asdict(stats) | {"evaluations": report.evaluations,
                                        "wall_time": round(time.perf_counter() - started, 6)}
                sink.write(json.dumps(line) + "\n")
                sink.flush()
            if any(engine.reached_goal(s) for s in valid):
                stopped = "goal"
                break
            population = engine.breed(ranked, rng)
            generation += 1
            if checkpoint is not None:
                _save_checkpoint(checkpoint, config, generation, population, rng, report, best_ever, hall)
    finally:
        if close:
            sink.close()
    report.stopped = stopped
    report.hall_of_fame = sorted(hall.values(), key=_hall_order)
    if report.hall_of_fame:
        report.best_scheme = decode(report.hall_of_fame[0].genome, name="ga_best")
    return report


def evaluate_genome(genome: Genome, target: TargetGate, detector=PNR):
    """Convenience wrapper: ``(F, P, Pb_min)`` of one genome."""
    F, P, pb_min, _ = GenomeEvaluator(genome.layout, target, detector)(genome.genes)
    return F, P, pb_min

