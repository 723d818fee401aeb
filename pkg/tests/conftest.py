import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cimdse.cost_model import default_calibration
from cimdse.design_space import (ArrayConfig, Dataflow, DesignPoint,
                                 Interconnect, MacroConfig)


def mk_point(AL=8, LSL=2, PC=2, PL=0, OL=False, WBW=8, IBW=8, BR=1, BC=1,
             dataflow=Dataflow.WS, interconnect=Interconnect.SYSTOLIC,
             TL=16, cores=1, kappa=1.0) -> DesignPoint:
    return DesignPoint(
        macro=MacroConfig(AL=AL, LSL=LSL, PC=PC, PL=PL, OL=OL,
                          WBW=WBW, IBW=IBW, kappa=kappa),
        array=ArrayConfig(BR=BR, BC=BC, dataflow=dataflow,
                          interconnect=interconnect, TL=TL, cores=cores),
    )


FLOW_COMBOS = [
    (df, ic)
    for df in (Dataflow.WS, Dataflow.OS)
    for ic in (Interconnect.BROADCAST, Interconnect.SYSTOLIC)
]


@pytest.fixture(scope="session")
def cal():
    return default_calibration()
