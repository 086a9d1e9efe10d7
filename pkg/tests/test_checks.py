import io

import numpy as np
import pytest

from wgbh.checks import (CheckResult, inequality_constants, local_inverse_bound, quick_suite,
                         relative_spread, run_quick_suite, sampled_inverse_constant)
from wgbh.mesh import generate_unit_square, refine_uniform


def test_quick_suite_all_pass():
    results = quick_suite()
    assert len(results) == 18
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_run_quick_suite_output():
    buf = io.StringIO()
    assert run_quick_suite(stream=buf)
    assert buf.getvalue().count("PASS") == 18


def test_check_result_line():
    assert CheckResult("x", 2e-3, 1e-3).line().startswith("FAIL")
    assert CheckResult("x", 1e-13, 1e-12).passed


def test_relative_spread():
    assert relative_spread([2.0, 2.2, 2.1]) == pytest.approx(0.1)


@pytest.mark.parametrize("j", [0, 1])
def test_inverse_constant_below_local_bound(j):
    # the sharp global constant creeps towards the worst element value under
    # refinement but never crosses it
    m = generate_unit_square(6, 0.2, 3)
    for _ in range(2):
        bound = local_inverse_bound(m, j)
        assert inequality_constants(m, j)["inverse"] <= bound * (1 + 1e-10)
        assert sampled_inverse_constant(m, j) <= bound * (1 + 1e-10)
        m = refine_uniform(m)


def test_local_inverse_bound_refinement_invariant():
    # red refinement of a fixed mesh only produces similar copies of the parents
    m = generate_unit_square(5, 0.2, 2)
    for j in (0, 1):
        assert local_inverse_bound(refine_uniform(m), j) == pytest.approx(local_inverse_bound(m, j), rel=1e-10)


def test_constants_are_positive_and_ordered():
    c = inequality_constants(generate_unit_square(5, 0.2, 1), 0)
    assert all(np.isfinite(v) and v > 0 for v in c.values())
    assert c["norm_equiv_lo"] <= c["norm_equiv_hi"]
