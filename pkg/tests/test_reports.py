import json
import math
from fractions import Fraction as F

import numpy as np

from trimbirk.contfrac import golden
from trimbirk.experiments import strong_law_run
from trimbirk.observables import PowerObservable
from trimbirk.orbit import make_context
from trimbirk.reports import dumps, envelope, export_report, law_csv, to_jsonable


def test_to_jsonable_scalars():
    assert to_jsonable(F(3, 7)) == "3/7"
    assert to_jsonable(np.int64(5)) == 5 and to_jsonable(np.float64(0.5)) == 0.5
    assert to_jsonable(math.inf) == "inf" and to_jsonable(-math.inf) == "-inf"
    assert to_jsonable({0.5: [F(1, 2)]}) == {"0.5": ["1/2"]}
    assert to_jsonable(golden().value) == str(golden().value)


def _run():
    ctx = make_context(golden(), 10**4)
    return strong_law_run(ctx, PowerObservable(1.0), 1, [100, 1000], samples=3, eps=[0.5, math.inf])


def test_envelope_shape_and_canonical():
    doc = envelope("law", _run(), {"alpha": "golden"})
    assert doc["schema"] == "trimbirk.law" and doc["schema_version"] == 1
    assert doc["config"] == {"alpha": "golden"}
    assert "wall_clock" not in doc["report"]
    assert "wall_clock" in envelope("law", _run(), canonical=False)["report"]
    text = dumps(doc)
    assert text.endswith("\n") and json.loads(text)["report"]["Ns"] == [100, 1000]


def test_law_csv(tmp_path):
    r = _run()
    rows = law_csv(r).strip().split("\n")
    assert rows[0] == "N,k,x_index,x,ratio,exceeds_0.5,exceeds_inf"
    assert len(rows) == 1 + 2 * 3
    assert all(row.endswith(",0") for row in rows[1:])
    p = export_report(rows[0], tmp_path / "a.csv")
    assert p.read_text() == rows[0]
