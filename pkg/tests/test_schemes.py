import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heraldic.cli import load_schema
from heraldic.fock import BeamSplitter
from heraldic.schemes import (
    BUILTINS,
    Scheme,
    SchemeError,
    builtin,
    dual_rail_encode,
    load_scheme,
    resolve_scheme,
    save_scheme,
    scheme_to_dict,
)

from conftest import random_elements


def test_dual_rail_encoding_examples():
    cz16 = builtin("CZ_1_16")
    occ = dual_rail_encode(0, cz16)
    assert sum(occ) == 4
    assert occ[cz16.signal_modes[0]] == 1 and occ[cz16.signal_modes[2]] == 1
    assert sum(occ[m] for m in cz16.ancilla_modes) == 2
    assert sum(1 for m in cz16.ancilla_modes if occ[m] == 1) == 2

    cx = builtin("CX_1_9")
    occ = dual_rail_encode(3, cx)
    assert occ[1] == 1 and occ[3] == 1 and sum(occ) == 2

    bare = Scheme(4, (), (0, 1, 2, 3))
    assert dual_rail_encode(1, bare) == (1, 0, 0, 1)


def test_builtin_census():
    assert builtin("CZ_1_9").census() == {"bs": 3, "ps": 0}
    assert builtin("CZ_2_27").census() == {"bs": 4, "ps": 2}
    doc = json.loads(save_scheme(builtin("CZ_1_9")))
    assert sum(e["type"] == "bs" for e in doc["elements"]) == 3


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_round_trip(name):
    scheme = builtin(name)
    assert load_scheme(save_scheme(scheme)) == scheme
    assert resolve_scheme(f"builtin:{name}") == scheme


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_saved_documents_match_shipped_schema(name):
    jsonschema = pytest.importorskip("jsonschema")
    jsonschema.validate(scheme_to_dict(builtin(name)), load_schema("scheme"))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 7), st.integers(0, 10))
def test_random_scheme_round_trip(seed, modes, depth):
    rng = np.random.default_rng(seed)
    anc = tuple(range(4, modes))
    scheme = Scheme(modes, tuple(random_elements(rng, modes, depth)), (0, 1, 2, 3), anc,
                    tuple(int(n) for n in rng.integers(0, 2, len(anc))),
                    tuple(int(n) for n in rng.integers(0, 2, len(anc))))
    assert load_scheme(save_scheme(scheme)) == scheme


def _doc():
    return scheme_to_dict(builtin("CZ_1_9"))


def test_five_signal_modes_rejected():
    doc = _doc()
    doc["signal_modes"] = [0, 1, 2, 3, 4]
    with pytest.raises(SchemeError) as err:
        load_scheme(json.dumps(doc))
    assert err.value.path == "$.signal_modes"


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d["elements"][1].update(theta=12.5), "$.elements[1].theta"),
    (lambda d: d["elements"][2].update(type="mirror"), "$.elements[2].type"),
    (lambda d: d["elements"][0].update(b=0, a=0), "$.elements[0]"),
    (lambda d: d.update(modes="six"), "$.modes"),
    (lambda d: d.update(ancilla_modes=[3, 4]), "$.ancilla_modes"),
    (lambda d: d.update(herald_pattern=[0]), "$.herald_pattern"),
    (lambda d: d.update(herald_kind="sometimes"), "$.herald_kind"),
    (lambda d: d["ancilla_input"].__setitem__(1, "x"), "$.ancilla_input[1]"),
])
def test_schema_violations_report_path(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(SchemeError) as err:
        load_scheme(json.dumps(doc))
    assert err.value.path == path
    assert str(err.value).startswith(path)


def test_overlapping_roles_rejected():
    with pytest.raises(SchemeError):
        Scheme(6, (), (0, 1, 2, 3), (3, 4), (0, 0), (0, 0))


def test_element_outside_modes_rejected():
    with pytest.raises(SchemeError):
        Scheme(6, (BeamSplitter(0, 6, "10", "0"),), (0, 1, 2, 3), (4, 5), (0, 0), (0, 0))


def test_resolve_errors(tmp_path):
    with pytest.raises(SchemeError):
        resolve_scheme("builtin:CZ_1_2")
    with pytest.raises(SchemeError):
        resolve_scheme(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemeError):
        resolve_scheme(str(bad))
    good = tmp_path / "good.json"
    good.write_text(save_scheme(builtin("NSx")))
    assert resolve_scheme("good.json", base_dir=tmp_path) == builtin("NSx")
