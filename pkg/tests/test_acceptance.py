"""Acceptance criteria A1-A8 at their stated tolerances.

Each test prints one ``A<i>: PASS|FAIL`` line.  Nothing here is loosened to force a
pass; criteria that do not hold at the stated scales fail and say why.
"""

import pytest

from trimbirk import acceptance


@pytest.mark.parametrize("cid", sorted(acceptance.CRITERIA))
def test_criterion(cid, capsys):
    res = acceptance.CRITERIA[cid]()
    with capsys.disabled():
        print(f"\n{acceptance.summary_line(res)}")
    detail = {k: v for k, v in res.items() if k not in ("id", "pass")}
    assert res["pass"], f"{cid} failed: {detail}"
