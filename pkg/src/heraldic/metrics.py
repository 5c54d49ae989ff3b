"""Heralded-gate figures of merit under photon-number-resolving or threshold detectors.

For a scheme, the conditional map ``M[k, x]`` is the amplitude for logical
input x to leave the signal modes in logical state k while the ancillas show
exactly the herald pattern. From it::

    F = |Tr(U^+ M)|^2 / (4 Tr(M^+ M))      P = Tr(M^+ M) / 4

Per input, ``Pa(x)`` is the probability the detectors report the herald and
``Pb(x) = P_correct(x) / Pa(x)`` with ``P_correct(x) = |<U x|M x>|^2``.
The basis means are ``Pa_mean = mean(Pa)`` and ``Pb_mean = P / Pa_mean``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .fock import DEFAULT_PHOTON_CAP, FockBasis, PhotonCapError, element_arrays, evolve_vectors
from .schemes import HERALD_COINCIDENCE, Scheme, TargetGate, dual_rail_encode


class DetectorModel(str, enum.Enum):
    PNR = "pnr"
    THRESHOLD = "threshold"


PNR = DetectorModel.PNR
THRESHOLD = DetectorModel.THRESHOLD


@dataclass(frozen=True)
class ConditionalMap:
    m: np.ndarray


@dataclass(frozen=True)
class MetricsReport:
    fidelity: float
    P: float
    Pa_per_input: tuple
    Pb_per_input: tuple  # None where Pa(x) == 0
    Pa_mean: float
    Pb_mean: Optional[float]
    detector: DetectorModel
    corrected: bool = False

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "P": self.P,
            "Pa": list(self.Pa_per_input),
            "Pb": list(self.Pb_per_input),
            "Pa_mean": self.Pa_mean,
            "Pb_mean": self.Pb_mean,
            "detector": self.detector.value,
            "corrected": self.corrected,
        }


@dataclass(frozen=True)
class _Readout:
    basis: FockBasis
    inputs: np.ndarray  # basis index of each logical input
    logical: np.ndarray  # basis index of each logical output with exact herald
    herald: np.ndarray  # bool mask over the basis


def _layout_key(scheme: Scheme):
    return (scheme.mode_count, scheme.signal_modes, scheme.ancilla_modes,
            scheme.ancilla_input, scheme.herald_pattern)


@lru_cache(maxsize=4096)
def _readout(layout, detector: DetectorModel, coincidence: bool) -> _Readout:
    mode_count, signal, anc, anc_in, pattern = layout
    probe = Scheme(mode_count, (), signal, anc, anc_in, pattern)
    inputs = [dual_rail_encode(x, probe) for x in range(4)]
    basis = FockBasis.get(mode_count, sum(inputs[0]))
    outputs = [list(dual_rail_encode(k, probe)) for k in range(4)]
    for occ in outputs:
        for mode, n in zip(anc, pattern):
            occ[mode] = n
    occ = basis.occ
    mask = np.ones(basis.dim, dtype=bool)
    for mode, n in zip(anc, pattern):
        if detector is DetectorModel.PNR:
            mask &= occ[:, mode] == n
        elif n > 0:
            mask &= occ[:, mode] >= 1
        else:
            mask &= occ[:, mode] == 0
    if coincidence:
        c0, c1, t0, t1 = signal
        mask &= (occ[:, c0] + occ[:, c1] >= 1) & (occ[:, t0] + occ[:, t1] >= 1)
    logical = np.array([basis.index(o) if sum(o) == basis.photons else -1 for o in outputs])
    return _Readout(basis, np.array([basis.index(i) for i in inputs]), logical, mask)


def _output_vectors(scheme: Scheme, readout: _Readout, photon_cap: int) -> np.ndarray:
    if readout.basis.photons > photon_cap:
        raise PhotonCapError(f"{readout.basis.photons} photons exceeds cap {photon_cap}")
    vecs = np.zeros((readout.basis.dim, 4), dtype=np.complex128)
    vecs[readout.inputs, np.arange(4)] = 1.0
    return evolve_vectors(scheme.elements, readout.basis, vecs, element_arrays(scheme.elements))


def _map_from(out: np.ndarray, readout: _Readout) -> np.ndarray:
    m = np.zeros((4, 4), dtype=np.complex128)
    ok = readout.logical >= 0
    m[ok] = out[readout.logical[ok]]
    return m


def _require_qubits(scheme: Scheme):
    if len(scheme.signal_modes) != 4:
        raise ValueError(f"{scheme.name or 'scheme'} is a single-mode gadget, not a two-qubit gate")


def conditional_map(scheme: Scheme, photon_cap: int = DEFAULT_PHOTON_CAP) -> ConditionalMap:
    _require_qubits(scheme)
    readout = _readout(_layout_key(scheme), PNR, False)
    return ConditionalMap(_map_from(_output_vectors(scheme, readout, photon_cap), readout))


def fidelity(cmap, target: TargetGate) -> float:
    m = getattr(cmap, "m", cmap)
    norm = np.vdot(m, m).real
    if norm == 0:
        return 0.0
    overlap = np.vdot(target.matrix, m)  # Tr(U^+ M)
    return float(min(abs(overlap) ** 2 / (4 * norm), 1.0))


def actuation_probability(cmap) -> float:
    m = getattr(cmap, "m", cmap)
    return float(np.vdot(m, m).real / 4)


def _herald_kind(scheme: Scheme, coincidence: Optional[bool]) -> bool:
    return scheme.herald_kind == HERALD_COINCIDENCE if coincidence is None else coincidence


def herald_probability(scheme: Scheme, logical_input, detector=PNR, coincidence: Optional[bool] = None,
                       photon_cap: int = DEFAULT_PHOTON_CAP) -> float:
    """Probability the detectors announce success for one input.

    ``logical_input`` is a basis index 0..3 or a length-4 amplitude vector
    over |00>, |01>, |10>, |11>.
    """
    _require_qubits(scheme)
    readout = _readout(_layout_key(scheme), DetectorModel(detector), _herald_kind(scheme, coincidence))
    out = _output_vectors(scheme, readout, photon_cap)
    if np.ndim(logical_input) == 0:
        psi = out[:, int(logical_input)]
    else:
        psi = out @ np.asarray(logical_input, dtype=np.complex128)
    return float(np.sum(np.abs(psi[readout.herald]) ** 2))


def evaluate(scheme: Scheme, target: TargetGate, detector=PNR, coincidence: Optional[bool] = None,
             photon_cap: int = DEFAULT_PHOTON_CAP):
    """One evolution of the four logical inputs, reduced to raw per-input arrays.

    Returns ``(M, Pa, P_correct)``.
    """
    _require_qubits(scheme)
    key = _layout_key(scheme)
    detector = DetectorModel(detector)
    exact = _readout(key, PNR, False)
    readout = _readout(key, detector, _herald_kind(scheme, coincidence))
    out = _output_vectors(scheme, exact, photon_cap)
    m = _map_from(out, exact)
    pa = np.sum(np.abs(out[readout.herald]) ** 2, axis=0)
    # logical outputs with the exact pattern pass every herald variant
    correct = np.abs(np.sum(target.matrix.conj() * m, axis=0)) ** 2
    return m, pa, correct


def metrics_report(scheme: Scheme, target: TargetGate, detector=PNR, coincidence: Optional[bool] = None,
                   photon_cap: int = DEFAULT_PHOTON_CAP) -> MetricsReport:
    m, pa, correct = evaluate(scheme, target, detector, coincidence, photon_cap)
    p = actuation_probability(m)
    pa_mean = float(np.mean(pa))
    return MetricsReport(
        fidelity=fidelity(m, target),
        P=p,
        Pa_per_input=tuple(float(a) for a in pa),
        Pb_per_input=tuple(float(c / a) if a > 0 else None for c, a in zip(correct, pa)),
        Pa_mean=pa_mean,
        Pb_mean=p / pa_mean if pa_mean > 0 else None,
        detector=DetectorModel(detector),
        corrected=bool(_herald_kind(scheme, coincidence)),
    )


def single_mode_response(scheme: Scheme, max_photons: int = 2) -> np.ndarray:
    """Heralded amplitude for n = 0..max_photons photons entering a one-mode gadget."""
    if len(scheme.signal_modes) != 1:
        raise ValueError("single_mode_response needs a scheme with one signal mode")
    (signal,) = scheme.signal_modes
    amps = []
    for n in range(max_photons + 1):
        occ = [0] * scheme.mode_count
        occ[signal] = n
        for mode, k in zip(scheme.ancilla_modes, scheme.ancilla_input):
            occ[mode] = k
        basis = FockBasis.get(scheme.mode_count, sum(occ))
        vec = np.zeros((basis.dim, 1), dtype=np.complex128)
        vec[basis.index(occ)] = 1.0
        out = evolve_vectors(scheme.elements, basis, vec)
        for mode, k in zip(scheme.ancilla_modes, scheme.herald_pattern):
            occ[mode] = k
        amps.append(out[basis.index(occ), 0] if sum(occ) == basis.photons else 0j)
    return np.array(amps)
