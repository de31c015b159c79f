import math
import threading

import numpy as np
import pytest

import nls_ground.utils as utils


def test_geometric_range():
    assert list(utils.geometric_range(1.0, 8.0)) == [1.0, 2.0, 4.0, 8.0]
    assert list(utils.geometric_range(1.0, 8.0, inclusive_end=False)) == [
        1.0,
        2.0,
        4.0,
    ]
    assert list(utils.geometric_range(8.0, 1.0)) == []
    pytest.raises(ValueError, list, utils.geometric_range(1.0, 8.0, factor=1.0))


def test_pairwise():
    assert list(utils.pairwise([1, 2, 3])) == [(1, 2), (2, 3)]
    assert list(utils.pairwise([1])) == []
    assert list(utils.pairwise([])) == []


def test_convergence_order():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    values = 3.0 + 0.7 * h**2
    np.testing.assert_allclose(utils.convergence_order(values), [2.0, 2.0])
    assert utils.convergence_order([1.0, 1.0, 1.0]) == [math.inf]
    pytest.raises(ValueError, utils.convergence_order, [1.0, 2.0])


def test_loglog_fit():
    x = np.array([0.01, 0.02, 0.04, 0.08])
    slope, intercept, r_squared = utils.loglog_fit(x, 5.0 * x**1.5)
    assert slope == pytest.approx(1.5)
    assert intercept == pytest.approx(math.log(5.0))
    assert r_squared == pytest.approx(1.0)


def test_format_number():
    assert utils.format_number(True) == "1"
    assert utils.format_number(np.bool_(False)) == "0"
    assert utils.format_number(3) == "3"
    assert utils.format_number(None) == ""
    assert utils.format_number(0.1) == "0.1"
    assert float(utils.format_number(1 / 3)) == 1 / 3


def test_write_csv(tmp_path):
    path = utils.write_csv(
        tmp_path / "table.csv", ["a", "b"], [(1, 0.5), ("x", None)]
    )
    assert path.read_bytes() == b"a,b\n1,0.5\nx,\n"


def test_parallel_map_keeps_order():
    seen = set()

    def square(x):
        seen.add(threading.get_ident())
        return x * x

    assert utils.parallel_map(square, range(20), threads=4) == [
        x * x for x in range(20)
    ]
    assert utils.parallel_map(square, [], threads=4) == []


def test_parallel_map_raises_worker_errors():
    def fail(x):
        raise RuntimeError(f"bad {x}")

    with pytest.raises(RuntimeError):
        utils.parallel_map(fail, [1, 2], threads=2)


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("NLS_GROUND_THREADS", raising=False)
    assert utils.resolve_threads() == 1
    assert utils.resolve_threads(None, 3) == 3
    monkeypatch.setenv("NLS_GROUND_THREADS", "6")
    assert utils.resolve_threads() == 6
    assert utils.resolve_threads(2) == 2
    monkeypatch.setenv("NLS_GROUND_THREADS", "many")
    pytest.raises(ValueError, utils.resolve_threads)
    pytest.raises(ValueError, utils.resolve_threads, 0)


def test_spawn_seeds():
    seeds = utils.spawn_seeds(0, 4)
    assert seeds == utils.spawn_seeds(0, 4)
    assert len(set(seeds)) == 4
    assert utils.spawn_seeds(0, 2) == seeds[:2]
    assert utils.spawn_seeds(1, 4) != seeds
