import numpy as np
from hypothesis import strategies as st

from heraldic.fock import BeamSplitter, PhaseShifter


def random_elements(rng: np.random.Generator, mode_count: int, depth: int) -> list:
    """Random mix of beam splitters and phase shifters with 3-decimal angles."""
    elements = []
    for _ in range(depth):
        if mode_count > 1 and rng.random() < 0.7:
            a, b = rng.choice(mode_count, 2, replace=False)
            elements.append(BeamSplitter(int(a), int(b), f"{rng.uniform(0, 360):.3f}", f"{rng.uniform(0, 360):.3f}"))
        else:
            elements.append(PhaseShifter(int(rng.integers(mode_count)), f"{rng.uniform(0, 360):.3f}"))
    return elements


def random_occupation(rng: np.random.Generator, mode_count: int, photons: int) -> tuple:
    occ = np.bincount(rng.integers(mode_count, size=photons), minlength=mode_count)
    return tuple(int(n) for n in occ)


@st.composite
def circuits(draw, max_modes: int = 5, max_photons: int = 3, max_depth: int = 6):
    """(mode_count, elements, input occupation) drawn through a seeded generator."""
    modes = draw(st.integers(2, max_modes))
    photons = draw(st.integers(0, max_photons))
    depth = draw(st.integers(0, max_depth))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return modes, random_elements(rng, modes, depth), random_occupation(rng, modes, photons)
