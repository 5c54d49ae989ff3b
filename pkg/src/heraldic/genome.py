"""Flat numeric encoding of schemes for genetic search.

Gene order: beam-splitter thetas, then phis (beam splitters first, then
phase shifters), then beam-splitter mode pairs, phase-shifter modes, ancilla
input modes and ancilla output modes. Modes 0-3 are the signal rails
(c0, c1, t0, t1); the remaining ``mode_count - 4`` modes are ancillas, and
ancilla genes index into that ancilla block.

Invalid offspring are repaired rather than rejected: index genes wrap into
range and a beam splitter with a == b gets b = (a + 1) mod mode_count.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from decimal import Decimal
from functools import cached_property

import numpy as np

from .fock import BeamSplitter, PhaseShifter
from .schemes import Scheme

SINGLE_POINT = "single_point"
UNIFORM = "uniform"


@dataclass(frozen=True)
class GenomeLayout:
    depth: int
    mode_count: int
    ps_count: int = 0
    ancilla_photons: int = 0
    fix_ancilla_io: bool = False
    theta_decimals: int = 2
    phi_decimals: int = 2

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.mode_count < 4:
            raise ValueError("need at least the 4 signal modes")
        if not 0 <= self.ps_count <= 2 * self.depth:
            raise ValueError("ps_count must lie in [0, 2 * depth]")
        if self.ancilla_photons and self.ancilla_modes == 0:
            raise ValueError("ancilla photons need ancilla modes")

    @property
    def ancilla_modes(self) -> int:
        return self.mode_count - 4

    # slice boundaries in gene order
    @cached_property
    def _bounds(self):
        d, p, n = self.depth, self.ps_count, self.ancilla_photons
        edges = list(itertools.accumulate([d, d + p, 2 * d, p, n, n], initial=0))
        return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]

    @property
    def size(self) -> int:
        return self._bounds[-1].stop

    @property
    def theta(self):
        return self._bounds[0]

    @property
    def phi(self):
        return self._bounds[1]

    @property
    def bs_modes(self):
        return self._bounds[2]

    @property
    def ps_modes(self):
        return self._bounds[3]

    @property
    def ancilla_in(self):
        return self._bounds[4]

    @property
    def ancilla_out(self):
        return self._bounds[5]

    def angle_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[: self.bs_modes.start] = True
        return mask

    def index_range(self) -> np.ndarray:
        """Exclusive upper bound of each index gene (0 for angle genes); read-only."""
        return self._index_range

    @cached_property
    def _index_range(self) -> np.ndarray:
        hi = np.zeros(self.size, dtype=np.int64)
        hi[self.bs_modes] = self.mode_count
        hi[self.ps_modes] = self.mode_count
        hi[self.ancilla_in] = self.ancilla_modes
        hi[self.ancilla_out] = self.ancilla_modes
        hi.flags.writeable = False
        return hi

    def mutable_mask(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        if self.fix_ancilla_io:
            mask[self.ancilla_out] = False
        return mask


@dataclass(eq=False)
class Genome:
    layout: GenomeLayout
    genes: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, Genome) and self.layout == other.layout
                and np.array_equal(self.genes, other.genes))

    def copy(self) -> "Genome":
        return Genome(self.layout, self.genes.copy())

    @property
    def theta(self):
        return self.genes[self.layout.theta]

    @property
    def phi(self):
        return self.genes[self.layout.phi]

    @property
    def bs_modes(self):
        return self.genes[self.layout.bs_modes].astype(np.int64).reshape(-1, 2)

    @property
    def ps_modes(self):
        return self.genes[self.layout.ps_modes].astype(np.int64)

    @property
    def ancilla_in(self):
        return self.genes[self.layout.ancilla_in].astype(np.int64)

    @property
    def ancilla_out(self):
        return self.genes[self.layout.ancilla_out].astype(np.int64)

    def to_json(self) -> str:
        return json.dumps({"layout": asdict(self.layout), "genes": self.genes.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Genome":
        doc = json.loads(text)
        layout = GenomeLayout(**doc["layout"])
        return cls(layout, repair(np.array(doc["genes"], dtype=np.float64), layout))


def repair(genes: np.ndarray, layout: GenomeLayout) -> np.ndarray:
    """Quantize angles, wrap indices and fix degenerate beam-splitter pairs (in place)."""
    th, ph = layout.theta, layout.phi
    genes[th] = np.round(np.mod(genes[th], 360.0), layout.theta_decimals) % 360.0
    genes[ph] = np.round(np.mod(genes[ph], 360.0), layout.phi_decimals) % 360.0
    hi = layout.index_range()
    idx = hi > 0
    genes[idx] = np.mod(np.round(genes[idx]), hi[idx])
    pairs = genes[layout.bs_modes].reshape(-1, 2)
    same = pairs[:, 0] == pairs[:, 1]
    pairs[same, 1] = (pairs[same, 1] + 1) % layout.mode_count
    genes[layout.bs_modes] = pairs.ravel()
    if layout.fix_ancilla_io:
        genes[layout.ancilla_out] = genes[layout.ancilla_in]
    return genes


def _random_values(layout: GenomeLayout, rng: np.random.Generator, positions: np.ndarray) -> np.ndarray:
    hi = layout.index_range()[positions]
    values = rng.uniform(0.0, 360.0, positions.size)
    is_index = hi > 0
    values[is_index] = rng.integers(0, hi[is_index])
    return values


def random_genome(layout: GenomeLayout, rng: np.random.Generator) -> Genome:
    genes = _random_values(layout, rng, np.arange(layout.size))
    pairs = genes[layout.bs_modes].reshape(-1, 2)
    # second mode drawn from the other m - 1 modes keeps pairs uniform
    offset = rng.integers(1, layout.mode_count, layout.depth)
    pairs[:, 1] = (pairs[:, 0] + offset) % layout.mode_count
    genes[layout.bs_modes] = pairs.ravel()
    return Genome(layout, repair(genes, layout))


def _ps_slot(j: int, depth: int) -> int:
    """Beam splitter after which phase shifter j sits."""
    return j % depth


def decode(genome: Genome, name: str = "") -> Scheme:
    layout = genome.layout
    theta, phi = genome.theta, genome.phi
    pairs, ps_modes = genome.bs_modes, genome.ps_modes
    tfmt, pfmt = f".{layout.theta_decimals}f", f".{layout.phi_decimals}f"
    elements = []
    for i in range(layout.depth):
        elements.append(BeamSplitter(int(pairs[i, 0]), int(pairs[i, 1]),
                                     Decimal(format(theta[i], tfmt)), Decimal(format(phi[i], pfmt))))
        for j in range(layout.ps_count):
            if _ps_slot(j, layout.depth) == i:
                elements.append(PhaseShifter(int(ps_modes[j]), Decimal(format(phi[layout.depth + j], pfmt))))
    anc_in, anc_out = ancilla_counts(genome)
    return Scheme(
        mode_count=layout.mode_count,
        elements=tuple(elements),
        signal_modes=(0, 1, 2, 3),
        ancilla_modes=tuple(range(4, layout.mode_count)),
        ancilla_input=anc_in,
        herald_pattern=anc_out,
        name=name,
    )


def ancilla_counts(genome: Genome):
    n = genome.layout.ancilla_modes
    anc_in = np.bincount(genome.ancilla_in, minlength=n)
    anc_out = np.bincount(genome.ancilla_out, minlength=n)
    return tuple(int(k) for k in anc_in), tuple(int(k) for k in anc_out)


def encode(scheme: Scheme, layout: GenomeLayout) -> Genome:
    """Inverse of :func:`decode` for schemes with the layout's structure."""
    if scheme.mode_count != layout.mode_count or scheme.signal_modes != (0, 1, 2, 3):
        raise ValueError("scheme does not match the genome layout")
    bs = [e for e in scheme.elements if isinstance(e, BeamSplitter)]
    ps = [e for e in scheme.elements if isinstance(e, PhaseShifter)]
    if len(bs) != layout.depth or len(ps) != layout.ps_count:
        raise ValueError(f"layout expects {layout.depth} beam splitters and {layout.ps_count} phase shifters")
    if sum(scheme.ancilla_input) != layout.ancilla_photons or sum(scheme.herald_pattern) != layout.ancilla_photons:
        raise ValueError("ancilla photon count does not match the layout")
    genes = np.zeros(layout.size)
    genes[layout.theta] = [float(e.theta) for e in bs]
    genes[layout.phi] = [float(e.phi) for e in bs] + [float(e.phi) for e in ps]
    genes[layout.bs_modes] = [m for e in bs for m in (e.a, e.b)]
    genes[layout.ps_modes] = [e.mode for e in ps]
    offset = {mode: k for k, mode in enumerate(scheme.ancilla_modes)}
    genes[layout.ancilla_in] = [offset[m] for m, n in zip(scheme.ancilla_modes, scheme.ancilla_input) for _ in range(n)]
    genes[layout.ancilla_out] = [offset[m] for m, n in zip(scheme.ancilla_modes, scheme.herald_pattern) for _ in range(n)]
    genome = Genome(layout, repair(genes, layout))
    if _shape(decode(genome).elements) != _shape(scheme.elements):
        raise ValueError("phase shifter j must follow beam splitter j mod depth to fit the layout")
    return genome


def _shape(elements) -> list:
    return [(type(e).__name__, e.modes) for e in elements]


def mutate(genome: Genome, rng: np.random.Generator, rate: float = 0.5, per_gene: bool = False) -> Genome:
    """Reassign a random quarter of the genes.

    By default the whole specie mutates with probability ``rate``; with
    ``per_gene`` each gene of the chosen quarter mutates with that probability.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    layout = genome.layout
    candidates = np.flatnonzero(layout.mutable_mask())
    count = math.ceil(candidates.size / 4)
    if per_gene:
        picked = rng.choice(candidates, count, replace=False)
        picked = picked[rng.random(count) < rate]
    elif rng.random() < rate:
        picked = rng.choice(candidates, count, replace=False)
    else:
        return genome.copy()
    genes = genome.genes.copy()
    genes[picked] = _random_values(layout, rng, picked)
    return Genome(layout, repair(genes, layout))


def crossover(parent1: Genome, parent2: Genome, kind: str, rng: np.random.Generator) -> Genome:
    if parent1.layout != parent2.layout:
        raise ValueError("parents have different genome layouts")
    layout = parent1.layout
    if kind == SINGLE_POINT:
        cut = int(rng.integers(0, layout.size + 1))
        genes = np.concatenate([parent1.genes[:cut], parent2.genes[cut:]])
    elif kind == UNIFORM:
        take_first = rng.random(layout.size) < 0.5
        genes = np.where(take_first, parent1.genes, parent2.genes)
    else:
        raise ValueError(f"unknown crossover kind {kind!r}")
    return Genome(layout, repair(genes, layout))


def single_point_at(parent1: Genome, parent2: Genome, cut: int) -> Genome:
    genes = np.concatenate([parent1.genes[:cut], parent2.genes[cut:]])
    return Genome(parent1.layout, repair(genes, parent1.layout))
