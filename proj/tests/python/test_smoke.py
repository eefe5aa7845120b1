import math

import numpy as np
import pytest

import varorder as v


def test_version():
    assert v.__version__ == "0.1.0"


def test_distribution_basics():
    d = v.DiscreteDistribution([(0.0, 0.5), (2.0, 0.5)])
    assert d.mean() == pytest.approx(1.0)
    assert d.variance() == pytest.approx(1.0)
    assert len(d) == 2
    assert d.min_value() == 0.0
    assert d.max_value() == 2.0

    point = v.DiscreteDistribution.point_mass(1.0)
    assert v.icx_compare(point, d).relation == v.Relation.Less
    assert v.cx_compare(point, d).relation == v.Relation.Less
    assert v.cx_compare(d, d).relation == v.Relation.Equal

    assert v.stop_loss(d, 1.0) == pytest.approx(0.5)
    z = v.convolve(point, v.DiscreteDistribution([(-1.0, 0.5), (1.0, 0.5)]))
    assert z.mean() == pytest.approx(1.0)
    assert z.variance() == pytest.approx(1.0)


def test_distribution_csv_round_trip():
    d = v.DiscreteDistribution([(0.5, 0.25), (1.5, 0.75)])
    back = v.DiscreteDistribution.from_csv(d.to_csv())
    assert back.atoms == d.atoms


def test_entry_function_round_trip():
    for text in ["const:1.5", "affine:1,0:0.5", "expaffine:0.02,0:1,2:-0.3",
                 "sum:2*expaffine(0,0:1)+0.5*expaffine(1,1:-1)"]:
        e = v.EntryFunction.parse(text)
        assert str(v.EntryFunction.parse(str(e))) == str(e)

    e = v.EntryFunction.parse("expaffine:0.02,0:1")
    assert e.kind() == v.EntryFunction.Kind.ExpAffine
    assert e.evaluate(np.array([0.5])) == pytest.approx(math.exp(0.52))
    assert not e.hypothesis_violating()
    assert v.EntryFunction.parse("affine:1,0:1").hypothesis_violating()


def scalar_setup():
    spec = v.MatrixSpec(1, 1, [v.EntryFunction.parse("expaffine:0.02,0:1")])
    n0 = v.PopulationVector(np.ones(1))
    functional = v.SizeFunctional.total(1)
    noise = v.NoiseSpec.iid_normal(np.zeros(1), np.array([[0.04]]))
    return spec, n0, functional, noise


def test_run_ensemble_deterministic_across_threads():
    spec, n0, functional, noise = scalar_setup()
    a = v.run_ensemble(spec, n0, functional, noise, horizon=6, replicates=256,
                       seed=11, threads=1, chunk=64)
    b = v.run_ensemble(spec, n0, functional, noise, horizon=6, replicates=256,
                       seed=11, threads=4, chunk=64)
    assert a.mean_logN == b.mean_logN
    assert a.mean_N == b.mean_N
    assert a.mean_logN[0] == 0.0
    assert a.mean_logN[6] == pytest.approx(0.12, abs=5 * a.ci_logN[6])


def test_verify_proposition_fields():
    spec, n0, functional, noise = scalar_setup()
    rep = v.verify_proposition(spec, n0, functional, noise,
                               v.CouplingSpec.dilation(1.5), horizon=5,
                               replicates=2000, seed=3, threads=2,
                               stop_loss_thresholds=10)
    assert rep.coupling == v.Coupling.Dilation
    assert rep.dilation_factor == 1.5
    assert rep.all_means_ordered_N
    assert rep.stop_loss_dominance
    assert len(rep.sl_thresholds) == 10
    assert len(rep.diff_mean_N) == 6
    assert rep.diff_mean_N[0] == 0.0
    assert len(rep.final_logN_low) == 2000


def test_tuljapurkar_anchors():
    spec = v.MatrixSpec(1, 1, [v.EntryFunction.parse("affine:1.05,0:1")],)
    noise = v.NoiseSpec.iid_normal(np.zeros(1), np.array([[1e-4]]))
    approx = v.tuljapurkar_approx(spec, noise)
    assert approx.lambda1 == pytest.approx(1.05, abs=1e-12)
    assert approx.tau_sq == pytest.approx(1e-4, abs=1e-10)
    assert approx.theta == 0.0
    expected = math.log(1.05) - approx.tau_sq / (2 * 1.05**2)
    assert approx.log_lambda_s == pytest.approx(expected, abs=1e-12)


def test_lande_anchors():
    p = v.LandeParams(lambda_bar=1.05, sigma_r_sq=0.001)
    assert v.lande_log_scale_mean(p) == pytest.approx(math.log(1.05) - 0.001,
                                                      abs=1e-15)
    q = v.LandeParams(r_bar=0.01, eps_bar=0.02, sigma_eps_sq=0.05)
    assert v.lande_arithmetic_mean(q) == pytest.approx(math.exp(0.055), abs=1e-15)


def test_dominant_eigen():
    mat = np.array([[0.0, 2.0], [0.5, 0.0]])
    eig = v.dominant_eigen_power(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert eig.lambda1 == pytest.approx(1.5, abs=1e-10)
    assert v.is_primitive(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert not v.is_primitive(mat)


def test_probe_catches_affine():
    entry = v.EntryFunction.parse("affine:1,0:1")
    box = v.Box(np.zeros(1), np.ones(1))
    res = v.logconvexity_probe(entry, box, trials=20000, seed=7)
    assert not res.pass_
    assert res.witness is not None
    assert res.witness.functional == "log_entry"

    ok = v.logconvexity_probe(v.EntryFunction.parse("expaffine:0,0:1"), box,
                              trials=2000, seed=7)
    assert ok.pass_
    assert ok.witness is None


def test_exception_mapping():
    with pytest.raises(ValueError):
        v.DiscreteDistribution([(1.0, -0.5)])
    with pytest.raises(ValueError):
        v.EntryFunction.parse("bogus:1")
    spec, n0, functional, noise = scalar_setup()
    with pytest.raises(ValueError):
        v.run_ensemble(spec, n0, functional, noise, horizon=0, replicates=10,
                       seed=1)
    dead = v.MatrixSpec(1, 1, [v.EntryFunction.parse("const:0")])
    with pytest.raises(RuntimeError):
        v.estimate_stochastic_growth_rate(dead, n0, noise, horizon=100, seed=1)
