import math

import numpy as np
import pytest

from hypermf._util import (conjugate_exponent, fit_loglog_slope, float_repr,
                           pack_rows, rng_for)
from hypermf.errors import ParameterError


def test_conjugate_exponent_values():
    assert conjugate_exponent(1.0) == math.inf
    assert conjugate_exponent(2.0) == pytest.approx(2.0)
    assert conjugate_exponent(1.5) == pytest.approx(3.0)


def test_rng_for_is_deterministic_and_keyed():
    a = rng_for(7, 0, 3).uniform(size=4)
    b = rng_for(7, 0, 3).uniform(size=4)
    c = rng_for(7, 1, 3).uniform(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_pack_rows_injective_small():
    rows = np.array([[1, 2], [2, 1], [1, 3], [3, 3]])
    packed = pack_rows(rows, 4)
    assert len(set(packed.tolist())) == 4


def test_pack_rows_overflow_guard():
    rows = np.ones((1, 8), dtype=np.int64)
    with pytest.raises(ParameterError):
        pack_rows(rows, 10**9)


def test_fit_loglog_slope_exact_power_law():
    ns = np.array([10, 20, 40, 80])
    slope = fit_loglog_slope(ns, 3.0 / ns)
    assert slope == pytest.approx(-1.0, abs=1e-12)


def test_float_repr_round_trips():
    for v in (0.1, 1.0 / 3.0, 2.0, 1e-17):
        assert float(float_repr(v)) == v
