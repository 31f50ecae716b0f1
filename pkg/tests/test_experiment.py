import io

import numpy as np
import pytest

from mmcoclust.experiment import ExperimentConfig, load_config, read_table, run_experiment, write_table


def tiny(**kw):
    base = dict(n=(60,), L=(4,), rho=(0.4,), n0_r=8, n0_c=8, replicates=2, seed=1)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_point_single_method():
    rows = run_experiment(tiny(replicates=1, methods=("cspdsos",)))
    assert len(rows) == 1
    r = rows[0]
    assert (r.n, r.L, r.rho, r.method, r.replicates, r.failures) == (60, 4, 0.4, "cspdsos", 1, 0)
    assert r.hamming_sd == 0.0


def test_exp2_shape():
    cfg = ExperimentConfig(L=tuple(range(10, 101, 10)))
    assert len(cfg.grid()) * len(cfg.methods) == 30


def test_rows_in_grid_order():
    cfg = tiny(L=(3, 5), rho=(0.3, 0.5), replicates=1)
    rows = run_experiment(cfg)
    assert len(rows) == 12
    assert [(r.L, r.rho) for r in rows[::3]] == [(3, 0.3), (3, 0.5), (5, 0.3), (5, 0.5)]


def table(rows):
    buf = io.StringIO()
    write_table(rows, buf)
    return buf.getvalue()


def test_deterministic_and_worker_invariant():
    cfg = tiny(L=(3, 5))
    a = table(run_experiment(cfg))
    assert a == table(run_experiment(cfg))
    assert a == table(run_experiment(cfg, workers=3))
    assert a != table(run_experiment(tiny(L=(3, 5), seed=2)))


def test_table_round_trip():
    rows = run_experiment(tiny())
    assert read_table(io.StringIO(table(rows))) == rows


def test_fractional_pure_counts():
    assert ExperimentConfig(n0_r=0.16, n0_c=0.24).pure_counts(500) == (80, 120)


def test_load_config():
    text = "[experiment]\nn = 200\nL = 10, 20\nrho = 0.1\nK = 3\nn0_r = 50\nn0_c = 40\nreplicates = 5\nseed = 7\nmethods = cspdsos, cspsum\n"
    cfg = load_config(io.StringIO(text))
    assert cfg.L == (10, 20) and cfg.K == 3 and cfg.seed == 7 and cfg.methods == ("cspdsos", "cspsum")
    with pytest.raises(ValueError, match="unknown"):
        load_config(io.StringIO("[experiment]\nlayers = 3\n"))
    with pytest.raises(ValueError):
        load_config(io.StringIO("[experiment]\nmethods = cspmax\n"))


def test_failures_counted(monkeypatch):
    import mmcoclust.experiment as ex

    def boom(A, K, m):
        raise RuntimeError("nope")

    monkeypatch.setattr(ex, "detect", boom)
    rows = run_experiment(tiny(methods=("cspsum",)))
    assert rows[0].failures == 2 and rows[0].replicates == 0
    assert np.isnan(rows[0].hamming_mean)
