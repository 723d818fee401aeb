import math

import pytest

from cimdse.design_space import (AL_CANDIDATES, FIELD_NAMES, FULL_SPACE,
                                 Dataflow, Interconnect, SpaceSpec,
                                 enumerate_space, format_point, parse_point,
                                 parse_space_file, sample_space, validate)
from cimdse.errors import EmptySpaceError, ParseError, ValidationError

from conftest import mk_point


def test_minimal_point_valid():
    point = mk_point(AL=8, LSL=2, PC=2, PL=0, OL=False, BR=1, BC=1,
                     dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST, TL=8)
    assert validate(point) is point


def test_al_out_of_range():
    with pytest.raises(ValidationError) as exc:
        validate(mk_point(AL=7))
    assert exc.value.field == "AL"
    assert "8..256" in str(exc.value)


def test_wbw_must_be_8():
    with pytest.raises(ValidationError) as exc:
        validate(mk_point(WBW=4, IBW=8))
    assert "WBW must be 8" in str(exc.value)


@pytest.mark.parametrize("kwargs", [
    dict(LSL=3), dict(PC=5), dict(PL=6), dict(BR=65), dict(BC=0),
    dict(TL=100), dict(IBW=4),
])
def test_other_fields_out_of_range(kwargs):
    with pytest.raises(ValidationError):
        validate(mk_point(**kwargs))


def test_construction_rejects_nonsense():
    with pytest.raises(ValidationError):
        mk_point(AL=0)
    with pytest.raises(ValidationError):
        mk_point(IBW=7)  # odd bit-slicing
    with pytest.raises(ValidationError):
        mk_point(kappa=0)


def test_full_space_cardinality():
    # product of the candidate-set sizes, TL and cores pinned
    assert SpaceSpec().size() == 6 * 6 * 8 * 6 * 2 * 64 * 64 * 2 * 2 == 56_623_104


def test_restricted_cardinality_and_stream():
    spec = SpaceSpec().restrict(BR=(1,), BC=(1,), interconnect=(Interconnect.SYSTOLIC,))
    assert spec.size() == 6 * 6 * 8 * 6 * 2 * 2 == 6912
    points = list(spec.points())
    assert len(points) == 6912
    assert len({p.id for p in points}) == 6912
    for p in points[:50]:
        validate(p)


def test_enumerate_filter_preserves_order_and_subset():
    spec = SpaceSpec().restrict(AL=(8, 16), LSL=(2,), PC=(2,), PL=(0,), OL=(False,),
                                BR=(1, 2), BC=(1,), TL=(8,))
    everything = list(enumerate_space(space=spec))
    odd = list(enumerate_space(lambda p: p.array.BR == 2, space=spec))
    assert [p.id for p in odd] == [p.id for p in everything if p.array.BR == 2]
    assert list(enumerate_space(lambda p: False, space=spec)) == []


def test_sample_space_deterministic_and_valid():
    a = sample_space(5, seed=7)
    b = sample_space(5, seed=7)
    assert [p.id for p in a] == [p.id for p in b]
    for p in sample_space(1000, seed=1):
        validate(p)


def test_sample_space_rejects_zero():
    with pytest.raises(ValueError):
        sample_space(0, seed=1)


def test_id_injective_over_sample():
    points = sample_space(20000, seed=3)
    ids = {p.id for p in points}
    keys = {tuple(sorted(p.field_values().items())) for p in points}
    assert len(ids) == len(keys)


def test_id_stable_function_of_fields():
    a = mk_point(AL=32, BR=3)
    b = mk_point(AL=32, BR=3)
    assert a.id == b.id
    assert a.id != mk_point(AL=32, BR=4).id


def test_point_roundtrip():
    point = mk_point(AL=64, LSL=4, PC=16, PL=3, OL=True, BR=5, BC=7,
                     dataflow=Dataflow.OS, interconnect=Interconnect.BROADCAST,
                     TL=128, cores=4)
    text = format_point(point)
    back = parse_point(text)
    assert back == point
    assert back.id == point.id


def test_parse_point_errors():
    with pytest.raises(ParseError):
        parse_point("AL = 8\nbogus = 1\n")
    with pytest.raises(ParseError):
        parse_point("AL = eight\n")
    with pytest.raises(ParseError):  # missing fields
        parse_point("AL = 8\n")


def test_parse_space_file():
    spec = parse_space_file("AL = 8, 16\nBR = 1\nBC = 1\ndataflow = WS\n")
    assert spec.AL == (8, 16)
    assert spec.dataflow == (Dataflow.WS,)
    assert spec.TL == FULL_SPACE.TL  # unlisted fields keep full candidates
    with pytest.raises(ParseError):
        parse_space_file("NOPE = 1\n")
