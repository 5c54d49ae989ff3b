import math

import numpy as np
import pytest
from scipy import stats

from heraldic.fock import evolve
from heraldic.genome import (
    SINGLE_POINT,
    UNIFORM,
    Genome,
    GenomeLayout,
    crossover,
    decode,
    encode,
    mutate,
    random_genome,
    repair,
    single_point_at,
)
from heraldic.schemes import builtin

FULL = GenomeLayout(8, 8, ps_count=4, ancilla_photons=3)


def test_random_genome_structure():
    rng = np.random.default_rng(0)
    layout = GenomeLayout(3, 6)
    g = random_genome(layout, rng)
    assert g.theta.shape == (3,)
    assert np.all(g.bs_modes[:, 0] != g.bs_modes[:, 1])
    assert np.all((g.theta >= 0) & (g.theta < 360))
    assert np.all(np.round(g.theta, 2) == g.theta)


def test_fixed_ancilla_io():
    rng = np.random.default_rng(1)
    layout = GenomeLayout(6, 6, ps_count=2, ancilla_photons=2, fix_ancilla_io=True)
    for _ in range(100):
        g = random_genome(layout, rng)
        assert np.array_equal(g.ancilla_in, g.ancilla_out)
        m = mutate(g, rng, rate=1.0)
        assert np.array_equal(m.ancilla_in, m.ancilla_out)
        assert not layout.mutable_mask()[layout.ancilla_out].any()


def test_mode_indices_uniform():
    rng = np.random.default_rng(2)
    layout = GenomeLayout(3, 6, ps_count=2)
    bs, ps = [], []
    for _ in range(10_000):
        g = random_genome(layout, rng)
        bs.append(g.bs_modes.ravel())
        ps.append(g.ps_modes)
    for sample in (np.concatenate(bs), np.concatenate(ps)):
        counts = np.bincount(sample, minlength=6)
        assert counts.min() > 0 and counts.size == 6
        assert stats.chisquare(counts).pvalue > 0.001


def test_cz_1_9_round_trip():
    layout = GenomeLayout(3, 6)
    scheme = builtin("CZ_1_9")
    g = encode(scheme, layout)
    again = encode(decode(g), layout)
    assert again == g
    assert decode(again).census() == {"bs": 3, "ps": 0}


def test_repair_degenerate_pair():
    layout = GenomeLayout(1, 6)
    genes = np.zeros(layout.size)
    genes[layout.bs_modes] = [2, 2]
    assert list(repair(genes, layout)[layout.bs_modes]) == [2, 3]
    genes[layout.bs_modes] = [5, 5]
    assert list(repair(genes, layout)[layout.bs_modes]) == [5, 0]


def test_zero_angles_are_identity():
    rng = np.random.default_rng(3)
    g = random_genome(FULL, rng)
    genes = g.genes.copy()
    genes[FULL.angle_mask()] = 0.0
    scheme = decode(Genome(FULL, repair(genes, FULL)))
    for _ in range(5):
        occ = tuple(int(n) for n in rng.integers(0, 2, 8))
        state = evolve(scheme.elements, occ, photon_cap=8)
        assert abs(state.amplitude(occ) - 1) < 1e-14


def test_decode_interleaves_phase_shifters():
    rng = np.random.default_rng(4)
    layout = GenomeLayout(3, 6, ps_count=5)
    kinds = [type(e).__name__[0] for e in decode(random_genome(layout, rng)).elements]
    assert "".join(kinds) == "BPPBPPBP"


def test_encode_rejects_unplaceable_phase_shifter():
    layout = GenomeLayout(4, 6, ps_count=2, ancilla_photons=2)
    with pytest.raises(ValueError):
        encode(builtin("CZ_2_27"), layout)


def test_mutate_rate_zero_is_identity():
    rng = np.random.default_rng(5)
    g = random_genome(FULL, rng)
    for per_gene in (False, True):
        assert mutate(g, rng, rate=0.0, per_gene=per_gene) == g


def test_mutate_rate_one_touches_a_quarter():
    rng = np.random.default_rng(6)
    quarter = math.ceil(FULL.size / 4)
    for _ in range(200):
        g = random_genome(FULL, rng)
        m = mutate(g, rng, rate=1.0)
        changed = np.count_nonzero(m.genes != g.genes)
        # a repaired partner gene can shift beyond the quarter only via the a == b rule
        assert changed <= quarter + FULL.depth
        hi = FULL.index_range()
        idx = hi > 0
        assert np.all((m.genes[idx] >= 0) & (m.genes[idx] < hi[idx]))
        decode(m)


def test_mutation_probability():
    rng = np.random.default_rng(7)
    g = random_genome(FULL, rng)
    changed = sum(mutate(g, rng, rate=0.5) != g for _ in range(4000))
    assert abs(changed / 4000 - 0.5) < 0.03


def test_crossover_idempotent():
    rng = np.random.default_rng(8)
    g = random_genome(FULL, rng)
    for kind in (SINGLE_POINT, UNIFORM):
        assert crossover(g, g, kind, rng) == g


def test_single_point_boundaries():
    rng = np.random.default_rng(9)
    a, b = random_genome(FULL, rng), random_genome(FULL, rng)
    assert single_point_at(a, b, 0) == b
    assert single_point_at(a, b, FULL.size) == a


def test_uniform_crossover_frequency():
    rng = np.random.default_rng(10)
    layout = GenomeLayout(6, 6, ps_count=4)
    a, b = random_genome(layout, rng), random_genome(layout, rng)
    angles = np.flatnonzero(layout.angle_mask() & (a.genes != b.genes))
    hits = np.zeros(angles.size)
    for _ in range(10_000):
        child = crossover(a, b, UNIFORM, rng)
        hits += child.genes[angles] == a.genes[angles]
    assert np.all(np.abs(hits / 10_000 - 0.5) < 0.02)


def test_crossover_layout_mismatch():
    rng = np.random.default_rng(11)
    with pytest.raises(ValueError):
        crossover(random_genome(GenomeLayout(3, 6), rng), random_genome(GenomeLayout(4, 6), rng), UNIFORM, rng)


def test_closure_fuzz():
    rng = np.random.default_rng(12)
    layouts = [FULL, GenomeLayout(3, 6), GenomeLayout(6, 6, ps_count=2, ancilla_photons=2, fix_ancilla_io=True)]
    pools = [[random_genome(layout, rng) for _ in range(8)] for layout in layouts]
    ops = 0
    while ops < 100_000:
        pool = pools[ops % len(pools)]
        i, j = rng.integers(len(pool), size=2)
        child = crossover(pool[i], pool[j], UNIFORM if rng.random() < 0.5 else SINGLE_POINT, rng)
        child = mutate(child, rng, rate=0.7, per_gene=bool(rng.random() < 0.3))
        pool[int(rng.integers(len(pool)))] = child
        if ops % 50 == 0:
            decode(child)
        ops += 2
    for pool in pools:
        for g in pool:
            decode(g)


def test_genome_streams_deterministic():
    def stream(seed):
        rng = np.random.default_rng(seed)
        g = random_genome(FULL, rng)
        out = [g.genes]
        for _ in range(50):
            g = mutate(crossover(g, random_genome(FULL, rng), UNIFORM, rng), rng)
            out.append(g.genes)
        return np.array(out)

    assert np.array_equal(stream(3), stream(3))
    assert not np.array_equal(stream(3), stream(4))


def test_json_round_trip():
    g = random_genome(FULL, np.random.default_rng(13))
    assert Genome.from_json(g.to_json()) == g
