import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from onoff_ising import OnOffAnnealer
from onoff_ising.core import energy
from onoff_ising.oracle import brute_force
from onoff_ising.problems import maxcut_encode, random_spin_problem, ten_node_instance


def test_params_and_clone():
    est = OnOffAnnealer(max_iter=10, C=5.0, quant_bits=16)
    params = est.get_params()
    assert params["C"] == 5.0 and params["quant_bits"] == 16
    assert clone(est).get_params() == params
    est.set_params(max_iter=20)
    assert est.max_iter == 20


def test_unfitted():
    with pytest.raises(NotFittedError):
        OnOffAnnealer().predict()


def test_fit_matrix_finds_ground_state():
    p = random_spin_problem(12, 0.4, 0)
    est = OnOffAnnealer(max_iter=200_000, C=800, n_replicas=3).fit(p.couplings.toarray())
    assert est.best_energy_ == brute_force(p).best_value
    assert est.score() == -est.best_energy_
    assert energy(p, est.predict()) == est.best_energy_
    assert est.replica_energies_.shape == (3,)


def test_fit_graph_and_problem_agree():
    g = ten_node_instance(0)
    a = OnOffAnnealer(max_iter=50_000, C=800).fit(g)
    b = OnOffAnnealer(max_iter=50_000, C=800).fit(maxcut_encode(g))
    np.testing.assert_array_equal(a.best_state_, b.best_state_)


def test_binary_domain_with_bias():
    q = np.array([[0.0, 2.0], [2.0, 0.0]])
    est = OnOffAnnealer(max_iter=5000, domain="binary").fit(q, bias=np.array([-1.0, -1.0]))
    assert est.best_energy_ == -1.0 and est.predict().sum() == 1


def test_invalid_params():
    with pytest.raises(ValueError):
        OnOffAnnealer(noise="poisson").fit(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        OnOffAnnealer(n_replicas=0).fit(np.zeros((2, 2)))


def test_predict_size_check():
    est = OnOffAnnealer(max_iter=100).fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        est.predict(np.zeros((4, 4)))
