"""Scheme data model, JSON persistence and the built-in gate library."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
import numpy as np

from .fock import BeamSplitter, ElementError, OpticalElement, PhaseShifter, check_elements

HERALD_PATTERN = "pattern"
HERALD_COINCIDENCE = "pattern+coincidence"
HERALD_KINDS = (HERALD_PATTERN, HERALD_COINCIDENCE)


class SchemeError(ValueError):
    """Malformed scheme document or inconsistent scheme; ``path`` locates the fault."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class TargetGate:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=np.complex128)
        if u.shape != (4, 4) or not np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12):
            raise ValueError(f"target {self.name} is not a 4x4 unitary")
        object.__setattr__(self, "matrix", u)


CZ = TargetGate("cz", np.diag([1, 1, 1, -1]))
CX = TargetGate("cx", np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
TARGETS = {"cz": CZ, "cx": CX}


@dataclass(frozen=True)
class Scheme:
    """Linear-optical circuit with dual-rail signal modes and heralding ancillas.

    ``signal_modes`` lists (c0, c1, t0, t1): the |0> and |1> rails of the
    control and target qubits. A single entry describes a one-mode gadget
    such as the nonlinear sign gate. ``ancilla_input`` and ``herald_pattern``
    are photon counts on ``ancilla_modes`` at input and at detection.
    """

    mode_count: int
    elements: tuple
    signal_modes: tuple
    ancilla_modes: tuple = ()
    ancilla_input: tuple = ()
    herald_pattern: tuple = ()
    herald_kind: str = HERALD_PATTERN
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for attr in ("elements", "signal_modes", "ancilla_modes", "ancilla_input", "herald_pattern"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        self.validate()

    def validate(self) -> None:
        if len(self.signal_modes) not in (1, 4):
            raise SchemeError(f"expected 4 signal modes, got {len(self.signal_modes)}", "$.signal_modes")
        roles = list(self.signal_modes) + list(self.ancilla_modes)
        if sorted(roles) != list(range(self.mode_count)):
            raise SchemeError("signal and ancilla modes must partition the modes", "$.ancilla_modes")
        if len(self.ancilla_input) != len(self.ancilla_modes):
            raise SchemeError("one input count per ancilla mode", "$.ancilla_input")
        if len(self.herald_pattern) != len(self.ancilla_modes):
            raise SchemeError("one herald count per ancilla mode", "$.herald_pattern")
        if min(self.ancilla_input + self.herald_pattern, default=0) < 0:
            raise SchemeError("photon counts must be non-negative", "$.ancilla_input")
        if self.herald_kind not in HERALD_KINDS:
            raise SchemeError(f"unknown herald kind {self.herald_kind!r}", "$.herald_kind")
        try:
            check_elements(self.elements, self.mode_count)
        except ElementError as exc:
            raise SchemeError(str(exc), "$.elements") from exc

    @property
    def ancilla_photons(self) -> int:
        return sum(self.ancilla_input)

    def census(self) -> dict:
        bs = sum(isinstance(e, BeamSplitter) for e in self.elements)
        return {"bs": bs, "ps": len(self.elements) - bs}


def dual_rail_encode(logical: int, scheme: Scheme) -> tuple:
    """Occupation vector for logical basis state ``logical`` (0..3 = |00>..|11>)."""
    occ = [0] * scheme.mode_count
    c0, c1, t0, t1 = scheme.signal_modes
    occ[c1 if logical & 2 else c0] = 1
    occ[t1 if logical & 1 else t0] = 1
    for mode, n in zip(scheme.ancilla_modes, scheme.ancilla_input):
        occ[mode] = n
    return tuple(occ)


def _element_doc(el: OpticalElement) -> dict:
    if isinstance(el, BeamSplitter):
        return {"type": "bs", "a": el.a, "b": el.b, "theta": str(el.theta), "phi": str(el.phi)}
    return {"type": "ps", "mode": el.mode, "phi": str(el.phi)}


def scheme_to_dict(scheme: Scheme) -> dict:
    doc = {
        "modes": scheme.mode_count,
        "signal_modes": list(scheme.signal_modes),
        "ancilla_modes": list(scheme.ancilla_modes),
        "ancilla_input": list(scheme.ancilla_input),
        "herald_pattern": list(scheme.herald_pattern),
        "herald_kind": scheme.herald_kind,
        "elements": [_element_doc(e) for e in scheme.elements],
    }
    if scheme.name:
        doc["name"] = scheme.name
    return doc


def save_scheme(scheme: Scheme) -> str:
    return json.dumps(scheme_to_dict(scheme), indent=2)


def _int(doc, key, path):
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemeError("expected an integer", f"{path}.{key}")
    return value


def _ints(doc, key, path, required=True):
    if key not in doc and not required:
        return []
    value = doc.get(key)
    if not isinstance(value, list):
        raise SchemeError("expected a list of integers", f"{path}.{key}")
    for i, v in enumerate(value):
        if not isinstance(v, int) or isinstance(v, bool):
            raise SchemeError("expected an integer", f"{path}.{key}[{i}]")
    return value


def _angle(doc, key, path):
    value = doc.get(key)
    if not isinstance(value, str):
        raise SchemeError("angle must be a decimal string", f"{path}.{key}")
    try:
        angle = Decimal(value)
    except InvalidOperation:
        raise SchemeError(f"not a decimal number: {value!r}", f"{path}.{key}") from None
    if not angle.is_finite():
        raise SchemeError("angle must be finite", f"{path}.{key}")
    return angle


def scheme_from_dict(doc) -> Scheme:
    if not isinstance(doc, dict):
        raise SchemeError("expected an object")
    modes = _int(doc, "modes", "$")
    signal = _ints(doc, "signal_modes", "$")
    if len(signal) not in (1, 4):
        raise SchemeError(f"expected 4 signal modes, got {len(signal)}", "$.signal_modes")
    kind = doc.get("herald_kind", HERALD_PATTERN)
    if kind not in HERALD_KINDS:
        raise SchemeError(f"unknown herald kind {kind!r}", "$.herald_kind")
    raw = doc.get("elements")
    if not isinstance(raw, list):
        raise SchemeError("expected a list", "$.elements")
    elements = []
    for i, el in enumerate(raw):
        path = f"$.elements[{i}]"
        if not isinstance(el, dict):
            raise SchemeError("expected an object", path)
        kind_el = el.get("type")
        try:
            if kind_el == "bs":
                elements.append(BeamSplitter(_int(el, "a", path), _int(el, "b", path),
                                             _angle(el, "theta", path), _angle(el, "phi", path)))
            elif kind_el == "ps":
                elements.append(PhaseShifter(_int(el, "mode", path), _angle(el, "phi", path)))
            else:
                raise SchemeError(f"unknown element type {kind_el!r}", f"{path}.type")
        except ElementError as exc:
            raise SchemeError(str(exc), path) from exc
    name = doc.get("name", "")
    return Scheme(
        mode_count=modes,
        elements=tuple(elements),
        signal_modes=tuple(signal),
        ancilla_modes=tuple(_ints(doc, "ancilla_modes", "$", required=False)),
        ancilla_input=tuple(_ints(doc, "ancilla_input", "$", required=False)),
        herald_pattern=tuple(_ints(doc, "herald_pattern", "$", required=False)),
        herald_kind=kind,
        name=name if isinstance(name, str) else "",
    )


def load_scheme(text: str) -> Scheme:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    return scheme_from_dict(doc)


# -- built-in library ---------------------------------------------------------

# arccos(sqrt(2) - 1) and arccos(1/sqrt(3)) in degrees
_NS_MIDDLE = "65.5301994792978"
_THIRD = "54.735610317245346"


def _ns_elements(signal: int, a1: int, a2: int) -> list:
    """Nonlinear sign gadget on ``signal``; ancilla a1 carries the photon, a2 starts empty."""
    return [
        PhaseShifter(signal, "180"),
        BeamSplitter(a1, a2, "157.5", "0"),
        BeamSplitter(signal, a1, _NS_MIDDLE, "0"),
        BeamSplitter(a1, a2, "202.5", "0"),
    ]


def _nsx() -> Scheme:
    return Scheme(3, tuple(_ns_elements(0, 1, 2)), (0,), (1, 2), (1, 0), (1, 0), name="NSx")


def _cz_1_16() -> Scheme:
    elements = [BeamSplitter(1, 3, "45", "0")]
    elements += _ns_elements(1, 4, 5) + _ns_elements(3, 6, 7)
    elements += [BeamSplitter(1, 3, "-45", "0")]
    return Scheme(8, tuple(elements), (0, 1, 2, 3), (4, 5, 6, 7), (1, 0, 1, 0), (1, 0, 1, 0), name="CZ_1_16")


def _cz_1_9_elements() -> list:
    return [
        BeamSplitter(1, 3, _THIRD, "0"),
        BeamSplitter(0, 4, _THIRD, "0"),
        BeamSplitter(2, 5, _THIRD, "0"),
    ]


def _cz_1_9() -> Scheme:
    return Scheme(6, tuple(_cz_1_9_elements()), (0, 1, 2, 3), (4, 5), (0, 0), (0, 0), name="CZ_1_9")


def _cx_1_9() -> Scheme:
    # target rails rotated in and out so the controlled sign becomes a controlled flip
    elements = [BeamSplitter(2, 3, "-45", "0")] + _cz_1_9_elements() + [BeamSplitter(2, 3, "45", "0")]
    return Scheme(6, tuple(elements), (0, 1, 2, 3), (4, 5), (0, 0), (0, 0), name="CX_1_9")


def _cz_2_27() -> Scheme:
    # rail c1 meets ancilla 4 and t1 meets ancilla 5, one photon per ancilla.
    # Angles: 360 - a, a, 180 + a and 180 + arctan(sqrt(3) + sqrt(2)), a = arccos(1/sqrt(3)).
    elements = [
        PhaseShifter(3, "180"),
        BeamSplitter(3, 5, "305.264389682754654", "0"),
        PhaseShifter(3, "180"),
        BeamSplitter(1, 4, _THIRD, "0"),
        BeamSplitter(1, 3, "234.735610317245346", "0"),
        BeamSplitter(4, 5, "252.367805158622673", "0"),
    ]
    return Scheme(6, tuple(elements), (0, 1, 2, 3), (4, 5), (1, 1), (1, 1), name="CZ_2_27")


BUILTINS = {
    "NSx": _nsx,
    "CZ_1_16": _cz_1_16,
    "CX_1_9": _cx_1_9,
    "CZ_1_9": _cz_1_9,
    "CZ_2_27": _cz_2_27,
}


def builtin(name: str) -> Scheme:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown built-in scheme {name!r}; choose from {sorted(BUILTINS)}") from None


BUILTIN_PREFIX = "builtin:"


def resolve_scheme(ref, base_dir=None) -> Scheme:
    """Scheme from ``builtin:NAME``, a JSON file path, or an inline document."""
    if isinstance(ref, Scheme):
        return ref
    if isinstance(ref, dict):
        return scheme_from_dict(ref)
    if not isinstance(ref, str):
        raise SchemeError("expected a scheme reference or object")
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        if name not in BUILTINS:
            raise SchemeError(f"unknown built-in scheme {name!r}; choose from {sorted(BUILTINS)}")
        return builtin(name)
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemeError(f"cannot read scheme file {ref!r}: {exc.strerror}") from None
    return load_scheme(text)
