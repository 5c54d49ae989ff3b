"""Multimode Fock-state evolution through beam splitters and phase shifters.

Conventions
-----------
A beam splitter ``BS(theta, phi)`` on modes (a, b) maps creation operators as::

    a_a^+ -> cos(theta) a_a^+ + exp(-i phi) sin(theta) a_b^+
    a_b^+ -> -exp(i phi) sin(theta) a_a^+ + cos(theta) a_b^+

so its single-photon matrix ``U[out, in]`` is ``[[c, -e^{i phi} s], [e^{-i phi} s, c]]``.
A phase shifter multiplies each photon in its mode by ``exp(i phi)``; a mode
holding n photons picks up ``exp(i n phi)``. Angles are kept in degrees as
:class:`~decimal.Decimal` and converted to radians only for evaluation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels as K

DEFAULT_PHOTON_CAP = 6

FockBasisState = tuple  # occupation numbers per mode, e.g. (1, 0, 2)


class ElementError(ValueError):
    """An optical element refers to a mode that does not exist."""


class PhotonCapError(ValueError):
    """Total photon number exceeds the configured cap."""


def to_degrees(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (str, int)):
        return Decimal(value)
    return Decimal(repr(float(value)))


@dataclass(frozen=True)
class BeamSplitter:
    a: int
    b: int
    theta: Decimal
    phi: Decimal = Decimal(0)

    def __post_init__(self):
        object.__setattr__(self, "theta", to_degrees(self.theta))
        object.__setattr__(self, "phi", to_degrees(self.phi))
        if self.a == self.b:
            raise ElementError(f"{self}: beam splitter needs two distinct modes")

    @property
    def modes(self):
        return (self.a, self.b)

    def matrix(self) -> np.ndarray:
        """2x2 single-photon matrix ``U[out, in]`` over (a, b)."""
        uaa, uba, uab, ubb = K.bs_coefficients(radians(self.theta), radians(self.phi))
        return np.array([[uaa, uab], [uba, ubb]])


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phi: Decimal

    def __post_init__(self):
        object.__setattr__(self, "phi", to_degrees(self.phi))

    @property
    def modes(self):
        return (self.mode,)


OpticalElement = Union[BeamSplitter, PhaseShifter]


def radians(deg: Decimal) -> float:
    return math.radians(float(deg))


def check_elements(elements: Iterable[OpticalElement], mode_count: int) -> None:
    for el in elements:
        for idx in el.modes:
            if not 0 <= idx < mode_count:
                raise ElementError(f"{el}: mode index {idx} out of range for {mode_count} modes")


class FockBasis:
    """All occupation vectors of ``photons`` photons over ``modes`` modes.

    Ordering: mode 0 occupation descending, then mode 1, and so on, so the
    first state is ``(N, 0, ..., 0)``. Obtain instances with :meth:`get`,
    which caches them.
    """

    def __init__(self, modes: int, photons: int):
        self.modes = modes
        self.photons = photons
        ways = np.zeros((photons + 1, modes + 1), dtype=np.int64)
        ways[0, 0] = 1
        for r in range(photons + 1):
            for k in range(1, modes + 1):
                ways[r, k] = math.comb(r + k - 1, k - 1)
        self.ways = ways
        self.occ = np.array(list(_compositions(photons, modes)), dtype=np.int64).reshape(-1, modes)
        self.dim = self.occ.shape[0]
        self._partners = {}

    @staticmethod
    @lru_cache(maxsize=None)
    def get(modes: int, photons: int) -> "FockBasis":
        return FockBasis(modes, photons)

    def index(self, occupation: Sequence[int]) -> int:
        return int(K.rank_occupation(np.asarray(occupation, dtype=np.int64), self.ways))

    def partner(self, a: int, b: int) -> np.ndarray:
        key = (a, b)
        table = self._partners.get(key)
        if table is None:
            table = K.partner_table(self.occ, self.ways, a, b, self.photons)
            self._partners[key] = table
        return table

    def __repr__(self):
        return f"FockBasis(modes={self.modes}, photons={self.photons}, dim={self.dim})"


def _compositions(n, m):
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state with a fixed total photon number.

    Amplitudes are held densely over ``basis``; :meth:`items` gives the
    sparse (occupation -> amplitude) view.
    """

    basis: FockBasis
    vector: np.ndarray

    @classmethod
    def from_fock(cls, occupation: Sequence[int]) -> "QuantumState":
        occupation = tuple(int(n) for n in occupation)
        if any(n < 0 for n in occupation):
            raise ValueError(f"negative occupation in {occupation}")
        basis = FockBasis.get(len(occupation), sum(occupation))
        vec = np.zeros(basis.dim, dtype=np.complex128)
        vec[basis.index(occupation)] = 1.0
        return cls(basis, vec)

    @classmethod
    def from_amplitudes(cls, amplitudes: dict) -> "QuantumState":
        keys = list(amplitudes)
        if not keys:
            raise ValueError("empty superposition")
        totals = {sum(k) for k in keys}
        sizes = {len(k) for k in keys}
        if len(totals) != 1 or len(sizes) != 1:
            raise ValueError("all components must share mode count and photon number")
        basis = FockBasis.get(sizes.pop(), totals.pop())
        vec = np.zeros(basis.dim, dtype=np.complex128)
        for k, amp in amplitudes.items():
            vec[basis.index(k)] += amp
        return cls(basis, vec)

    @property
    def mode_count(self) -> int:
        return self.basis.modes

    @property
    def photons(self) -> int:
        return self.basis.photons

    def amplitude(self, occupation: Sequence[int]) -> complex:
        occupation = tuple(occupation)
        if len(occupation) != self.mode_count:
            raise ValueError(f"{occupation} has {len(occupation)} modes, state has {self.mode_count}")
        if sum(occupation) != self.photons or min(occupation, default=0) < 0:
            return 0j
        return complex(self.vector[self.basis.index(occupation)])

    def items(self, tol: float = 0.0):
        for i in np.flatnonzero(np.abs(self.vector) > tol):
            yield tuple(int(n) for n in self.basis.occ[i]), complex(self.vector[i])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def element_arrays(elements: Sequence[OpticalElement]):
    """Pack elements into the flat arrays the kernels consume."""
    n = len(elements)
    kinds = np.empty(n, dtype=np.int64)
    mode_a = np.empty(n, dtype=np.int64)
    mode_b = np.zeros(n, dtype=np.int64)
    thetas = np.zeros(n)
    phis = np.empty(n)
    for i, el in enumerate(elements):
        if isinstance(el, BeamSplitter):
            kinds[i] = K.BS
            mode_a[i], mode_b[i] = el.a, el.b
            thetas[i] = radians(el.theta)
        else:
            kinds[i] = K.PS
            mode_a[i] = el.mode
        phis[i] = radians(el.phi)
    return kinds, mode_a, mode_b, thetas, phis


def evolve_vectors(elements: Sequence[OpticalElement], basis: FockBasis, vecs: np.ndarray,
                   packed=None) -> np.ndarray:
    """Evolve the columns of ``vecs`` (shape ``(basis.dim, k)``) through ``elements``."""
    kinds, mode_a, mode_b, thetas, phis = packed if packed is not None else element_arrays(elements)
    nmax = basis.photons
    if kinds.shape[0] == 0:
        return vecs.copy()
    partners = np.empty((kinds.shape[0], basis.dim, nmax + 1), dtype=np.int64)
    for e in range(kinds.shape[0]):
        if kinds[e] == K.BS:
            partners[e] = basis.partner(int(mode_a[e]), int(mode_b[e]))
    vecs = np.ascontiguousarray(vecs, dtype=np.complex128).copy()
    return K.evolve_dense(vecs, basis.occ, partners, kinds, mode_a, mode_b, thetas, phis, nmax)


def apply_element(state: QuantumState, element: OpticalElement) -> QuantumState:
    check_elements([element], state.mode_count)
    out = evolve_vectors([element], state.basis, state.vector[:, None])
    return QuantumState(state.basis, out[:, 0])


def evolve(elements: Sequence[OpticalElement], initial, photon_cap: int = DEFAULT_PHOTON_CAP) -> QuantumState:
    """Apply ``elements`` in order to a Fock basis state or :class:`QuantumState`."""
    state = initial if isinstance(initial, QuantumState) else QuantumState.from_fock(initial)
    if state.photons > photon_cap:
        raise PhotonCapError(f"{state.photons} photons exceeds cap {photon_cap}")
    check_elements(elements, state.mode_count)
    out = evolve_vectors(elements, state.basis, state.vector[:, None])
    return QuantumState(state.basis, out[:, 0])


def amplitude(state: QuantumState, occupation: Sequence[int]) -> complex:
    return state.amplitude(occupation)


def single_photon_unitary(elements: Sequence[OpticalElement], mode_count: int) -> np.ndarray:
    """Compose the m x m single-photon matrix ``U[out, in]`` of an element list."""
    check_elements(elements, mode_count)
    u = np.eye(mode_count, dtype=np.complex128)
    for el in elements:
        if isinstance(el, BeamSplitter):
            u[[el.a, el.b], :] = el.matrix() @ u[[el.a, el.b], :]
        else:
            u[el.mode, :] *= np.exp(1j * radians(el.phi))
    return u


def permanent(a: np.ndarray) -> complex:
    """Matrix permanent by Ryser's inclusion-exclusion formula."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for size in range(1, n + 1):
        sign = (-1) ** size
        for cols in itertools.combinations(range(n), size):
            total += sign * np.prod(a[:, cols].sum(axis=1))
    return (-1) ** n * total


def permanent_oracle(elements: Sequence[OpticalElement], initial: Sequence[int], final: Sequence[int],
                     mode_count: int | None = None) -> complex:
    """Transition amplitude <final| U |initial> from permanents of the single-photon matrix."""
    initial, final = tuple(initial), tuple(final)
    if sum(initial) != sum(final):
        raise ValueError(f"photon number differs: {initial} vs {final}")
    m = mode_count or len(initial)
    u = single_photon_unitary(elements, m)
    cols = [k for k, n in enumerate(initial) for _ in range(n)]
    rows = [k for k, n in enumerate(final) for _ in range(n)]
    norm = math.prod(math.factorial(n) for n in initial) * math.prod(math.factorial(n) for n in final)
    return complex(permanent(u[np.ix_(rows, cols)]) / math.sqrt(norm))
