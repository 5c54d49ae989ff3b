"""Gate chains, per-stage ancilla measurement branching and the coincidence correction.

A chain feeds the four signal modes of one scheme into the next; each stage
brings fresh ancilla photons. After every stage the ancillas are measured.
Photons absorbed by a detector are physically counted even when the detector
only reports a click, so branches are split on exact ancilla counts and the
detector model decides which branches announce success.

Each branch carries its signal amplitudes split in two: the part that stayed
inside the dual-rail logical subspace at every intermediate stage, and the
"leak" part that passed through a non-logical signal state (photon bunching,
migration or loss) somewhere along the way. A final coincidence check cannot
tell these apart; records with accepted outcome and non-zero leak are the
false positives that defeat end-of-chain correction.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .fock import DEFAULT_PHOTON_CAP, FockBasis, PhotonCapError, element_arrays, evolve_vectors
from .metrics import PNR, THRESHOLD, DetectorModel, MetricsReport, _readout, _layout_key, metrics_report
from .schemes import SchemeError, Scheme, TargetGate, resolve_scheme

COINCIDENCE = "coincidence"
FINAL_CHECKS = (None, COINCIDENCE)

# squared-amplitude floor below which a branch is dropped
_PRUNE = 1e-28


@dataclass(frozen=True)
class ChainSpec:
    stages: tuple
    input: object = 0  # logical index 0..3 or 4 amplitudes over |00>..|11>
    detector: DetectorModel = PNR
    final_check: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "detector", DetectorModel(self.detector))
        if not self.stages:
            raise ValueError("a chain needs at least one stage")
        for k, stage in enumerate(self.stages):
            if len(stage.signal_modes) != 4:
                raise ValueError(f"stage {k} does not have four signal modes")
        if self.final_check not in FINAL_CHECKS:
            raise ValueError(f"unknown final check {self.final_check!r}")
        vec = _input_vector(self.input)
        if not np.isclose(np.vdot(vec, vec).real, 1.0, atol=1e-12):
            raise ValueError("chain input must be normalized")


@dataclass(frozen=True)
class OutcomeRecord:
    """One measurement history of a chain.

    ``ancilla_counts[k]`` holds the photon counts on stage k's ancilla modes
    and ``clicks[k]`` the matching click pattern. ``signal`` is the final
    occupation of (c0, c1, t0, t1). ``amplitude`` is the total amplitude of
    the outcome and ``leak_amplitude`` the contribution of paths that left
    the logical subspace at an intermediate stage. The two parts interfere,
    so ``leak_probability`` may exceed ``probability``.
    """

    ancilla_counts: tuple
    clicks: tuple
    signal: tuple
    amplitude: complex
    leak_amplitude: complex
    herald_ok: bool
    coincidence_ok: bool
    accepted: bool

    @property
    def probability(self) -> float:
        return abs(self.amplitude) ** 2

    @property
    def leak_probability(self) -> float:
        return abs(self.leak_amplitude) ** 2

    @property
    def false_positive(self) -> bool:
        return self.accepted and self.leak_probability > 1e-20


def _input_vector(value) -> np.ndarray:
    if np.ndim(value) == 0:
        x = int(value)
        if not 0 <= x < 4:
            raise ValueError(f"logical input {x} out of range 0..3")
        vec = np.zeros(4, dtype=np.complex128)
        vec[x] = 1.0
        return vec
    vec = np.asarray(value, dtype=np.complex128)
    if vec.shape != (4,):
        raise ValueError("chain input needs 4 amplitudes")
    return vec


_LOGICAL = ((1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1))


def _logical_vector(amps: np.ndarray) -> np.ndarray:
    basis = FockBasis.get(4, 2)
    vec = np.zeros(basis.dim, dtype=np.complex128)
    for occ, a in zip(_LOGICAL, amps):
        vec[basis.index(occ)] = a
    return vec


@lru_cache(maxsize=None)
def _logical_mask() -> np.ndarray:
    basis = FockBasis.get(4, 2)
    mask = np.zeros(basis.dim, dtype=bool)
    for occ in _LOGICAL:
        mask[basis.index(occ)] = True
    return mask


@lru_cache(maxsize=1024)
def _stage_layout(layout, signal_photons: int):
    """Index maps between a stage's full basis and its (ancilla, signal) split."""
    mode_count, signal, anc, anc_in, _ = layout
    photons = signal_photons + sum(anc_in)
    full = FockBasis.get(mode_count, photons)
    sig_basis = FockBasis.get(4, signal_photons)
    embed = np.empty(sig_basis.dim, dtype=np.int64)
    occ = np.zeros(mode_count, dtype=np.int64)
    occ[list(anc)] = anc_in
    for i, s in enumerate(sig_basis.occ):
        occ[list(signal)] = s
        embed[i] = full.index(occ)
    anc_occ = full.occ[:, list(anc)] if anc else np.zeros((full.dim, 0), dtype=np.int64)
    groups = {}
    for key in sorted({tuple(int(n) for n in row) for row in anc_occ}, reverse=True):
        rows = np.flatnonzero(np.all(anc_occ == np.array(key, dtype=np.int64), axis=1)) if anc else np.arange(full.dim)
        remaining = photons - sum(key)
        out_basis = FockBasis.get(4, remaining)
        cols = np.array([out_basis.index(full.occ[r, list(signal)]) for r in rows], dtype=np.int64)
        groups[key] = (rows, remaining, cols)
    return full, embed, groups


def _herald_passes(counts, pattern, detector: DetectorModel) -> bool:
    if detector is DetectorModel.PNR:
        return tuple(counts) == tuple(pattern)
    return all((n >= 1) if p >= 1 else (n == 0) for n, p in zip(counts, pattern))


def _coincidence(signal) -> bool:
    c0, c1, t0, t1 = signal
    return c0 + c1 >= 1 and t0 + t1 >= 1


def _run_stage(scheme: Scheme, branches, photon_cap: int, split_leak: bool):
    """Evolve every branch through one stage and split on ancilla counts."""
    key = _layout_key(scheme)
    packed = element_arrays(scheme.elements)
    out = []
    for history, photons, clean, leak in branches:
        total = photons + scheme.ancilla_photons
        if total > photon_cap:
            raise PhotonCapError(f"{total} photons exceeds cap {photon_cap}")
        full, embed, groups = _stage_layout(key, photons)
        vecs = np.zeros((full.dim, 2), dtype=np.complex128)
        vecs[embed, 0] = clean
        vecs[embed, 1] = leak
        evolved = evolve_vectors(scheme.elements, full, vecs, packed)
        for counts, (rows, remaining, cols) in groups.items():
            dim = FockBasis.get(4, remaining).dim
            parts = np.zeros((dim, 2), dtype=np.complex128)
            parts[cols] = evolved[rows]
            if np.sum(np.abs(parts) ** 2) < _PRUNE:
                continue
            new_clean, new_leak = parts[:, 0], parts[:, 1]
            if split_leak:
                if remaining == 2:
                    inside = _logical_mask()
                    new_leak = new_leak + np.where(inside, 0, new_clean)
                    new_clean = np.where(inside, new_clean, 0)
                else:
                    new_leak = new_leak + new_clean
                    new_clean = np.zeros_like(new_clean)
            out.append((history + (counts,), remaining, new_clean, new_leak))
    return out


def run_chain(spec: ChainSpec, photon_cap: int = DEFAULT_PHOTON_CAP) -> list:
    """All outcome records of the chain, sorted by outcome key."""
    branches = [((), 2, _logical_vector(_input_vector(spec.input)), np.zeros(FockBasis.get(4, 2).dim, complex))]
    last = len(spec.stages) - 1
    for k, stage in enumerate(spec.stages):
        branches = _run_stage(stage, branches, photon_cap, split_leak=k < last)
    records = []
    for history, photons, clean, leak in branches:
        herald_ok = all(_herald_passes(c, s.herald_pattern, spec.detector) for c, s in zip(history, spec.stages))
        clicks = tuple(tuple(int(n > 0) for n in c) for c in history)
        basis = FockBasis.get(4, photons)
        total = clean + leak
        for i in np.flatnonzero(np.abs(total) ** 2 + np.abs(leak) ** 2 > _PRUNE):
            signal = tuple(int(n) for n in basis.occ[i])
            coincidence_ok = _coincidence(signal)
            accepted = herald_ok and (coincidence_ok or spec.final_check is None)
            records.append(OutcomeRecord(history, clicks, signal, complex(total[i]), complex(leak[i]),
                                         herald_ok, coincidence_ok, accepted))
    records.sort(key=lambda r: (r.ancilla_counts, tuple(-n for n in r.signal)))
    return records


def chain_summary(records, spec: ChainSpec, target: TargetGate) -> dict:
    """Heralded probability, correct-actuation probability and their ratio.

    The expected output is the target applied once per stage. Overlaps are
    taken coherently within each accepted measurement history.
    """
    expected = _input_vector(spec.input)
    for _ in spec.stages:
        expected = target.matrix @ expected
    want = dict(zip(_LOGICAL, expected))
    pa = sum(r.probability for r in records if r.accepted)
    overlaps = {}
    for r in records:
        if r.accepted and r.signal in want:
            overlaps[r.ancilla_counts] = overlaps.get(r.ancilla_counts, 0j) + np.conj(want[r.signal]) * r.amplitude
    correct = sum(abs(v) ** 2 for v in overlaps.values())
    return {
        "Pa": pa,
        "P_correct": correct,
        "Pb": correct / pa if pa > 0 else None,
        "false_positive_probability": sum(r.probability for r in records if r.false_positive),
        "total_probability": sum(r.probability for r in records),
    }


def migration_check(scheme: Scheme, detector=THRESHOLD, photon_cap: int = DEFAULT_PHOTON_CAP,
                    tol: float = 1e-20) -> bool:
    """True when no herald-passing output puts photons into an unfed signal mode.

    Every logical basis input is examined; a signal mode that received no
    photon at the input must stay empty in every output consistent with the
    herald under ``detector``.
    """
    if len(scheme.signal_modes) != 4:
        raise ValueError("migration check needs four signal modes")
    readout = _readout(_layout_key(scheme), DetectorModel(detector), False)
    basis = readout.basis
    if basis.photons > photon_cap:
        raise PhotonCapError(f"{basis.photons} photons exceeds cap {photon_cap}")
    vecs = np.zeros((basis.dim, 4), dtype=np.complex128)
    vecs[readout.inputs, np.arange(4)] = 1.0
    out = evolve_vectors(scheme.elements, basis, vecs)
    signal = list(scheme.signal_modes)
    for x in range(4):
        fed = basis.occ[readout.inputs[x], signal] > 0
        reached = (np.abs(out[:, x]) ** 2 > tol) & readout.herald
        if np.any(basis.occ[np.ix_(reached, signal)][:, ~fed] > 0):
            return False
    return True


def corrected_metrics(scheme: Scheme, target: TargetGate, detector=THRESHOLD,
                      photon_cap: int = DEFAULT_PHOTON_CAP) -> MetricsReport:
    """Metrics under the ancilla pattern plus signal coincidence herald.

    The coincidence check only certifies a gate when photons cannot migrate
    between signal modes; otherwise a later check cannot reveal the failure,
    so the uncorrected report is returned with ``corrected = False``.
    """
    if migration_check(scheme, detector, photon_cap):
        return metrics_report(scheme, target, detector, coincidence=True, photon_cap=photon_cap)
    return metrics_report(scheme, target, detector, coincidence=False, photon_cap=photon_cap)


# -- persistence --------------------------------------------------------------


def chain_from_dict(doc, base_dir=None) -> ChainSpec:
    if not isinstance(doc, dict):
        raise SchemeError("expected an object")
    stages = doc.get("stages")
    if not isinstance(stages, list) or not stages:
        raise SchemeError("expected a non-empty list", "$.stages")
    resolved = []
    for i, ref in enumerate(stages):
        try:
            resolved.append(resolve_scheme(ref, base_dir))
        except SchemeError as exc:
            raise SchemeError(str(exc), f"$.stages[{i}]") from None
    detector = doc.get("detector", "pnr")
    if detector not in {d.value for d in DetectorModel}:
        raise SchemeError(f"unknown detector {detector!r}", "$.detector")
    final_check = doc.get("final_check")
    if final_check not in FINAL_CHECKS:
        raise SchemeError(f"unknown final check {final_check!r}", "$.final_check")
    value = doc.get("input", 0)
    try:
        if isinstance(value, list):
            value = [complex(v) if not isinstance(v, list) else complex(v[0], v[1]) for v in value]
        spec = ChainSpec(tuple(resolved), value, DetectorModel(detector), final_check)
    except (TypeError, ValueError) as exc:
        raise SchemeError(str(exc), "$.input") from None
    return spec


def load_chain(text: str, base_dir=None) -> ChainSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    return chain_from_dict(doc, base_dir)


def _join(values) -> str:
    return "|".join(str(v) for v in values)


def records_to_csv(records) -> str:
    stages = max((len(r.ancilla_counts) for r in records), default=0)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = []
    for k in range(stages):
        header += [f"stage{k + 1}_counts", f"stage{k + 1}_clicks"]
    header += ["signal", "amplitude_re", "amplitude_im", "probability", "leak_probability",
               "herald_ok", "coincidence_ok", "accepted", "false_positive"]
    writer.writerow(header)
    for r in records:
        row = []
        for counts, clicks in zip(r.ancilla_counts, r.clicks):
            row += [_join(counts), _join(clicks)]
        row += [_join(r.signal), repr(r.amplitude.real), repr(r.amplitude.imag), repr(r.probability),
                repr(r.leak_probability), int(r.herald_ok), int(r.coincidence_ok), int(r.accepted),
                int(r.false_positive)]
        writer.writerow(row)
    return buf.getvalue()
