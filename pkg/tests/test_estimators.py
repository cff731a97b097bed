import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from witnesskit.estimators import NoiseThresholdTransformer, WitnessSearch
from witnesskit.qstate import DensityMatrix, basis_product, ghz4, maximally_entangled
from witnesskit.validation import check_density_stack, check_dims, check_probability, check_pure


def test_validation_helpers():
    assert check_dims(2).total == 4
    with pytest.raises(ValueError):
        check_dims((1, 2))
    stack = check_density_stack(np.stack([np.eye(4) / 4] * 3), 2)
    assert len(stack) == 3
    with pytest.raises(ValueError):
        check_density_stack(np.eye(9) / 9, 2)
    with pytest.raises(ValueError):
        check_density_stack([], 2)
    assert check_pure([1, 0, 0, 0], 2).dims.total == 4
    with pytest.raises(ValueError):
        check_probability(1.2)


def test_threshold_transformer():
    X = [maximally_entangled(2).density(), basis_product(0, 0, (2, 2)).density()]
    est = NoiseThresholdTransformer(dims=2)
    out = est.fit_transform(X)
    assert out.shape == (2, 2)
    np.testing.assert_allclose(out[0], [2 / 3, 2 / 3], atol=1e-6)
    np.testing.assert_allclose(out[1], [0, 0], atol=1e-6)
    assert list(est.get_feature_names_out()) == ["threshold_PPT", "threshold_U_tilde2"]
    assert est.get_params()["noise"] == "depolarizing"
    assert clone(est).get_params() == est.get_params()


def test_transformer_requires_fit_and_works_in_pipeline():
    with pytest.raises(NotFittedError):
        NoiseThresholdTransformer(dims=4).transform([ghz4().density()])
    pipe = make_pipeline(NoiseThresholdTransformer(dims=4, cert_sets=["PPT"]))
    np.testing.assert_allclose(pipe.fit_transform([ghz4().density()]), [[8 / 9]], atol=1e-6)


def test_witness_search():
    phi, prod = maximally_entangled(2), basis_product(0, 1, (2, 2))
    rho = DensityMatrix.mixture([0.6, 0.4], [phi, prod])
    est = WitnessSearch(dims=2, k=2, restarts=1, steps_per_stage=5, m0=1.0)
    with pytest.raises(NotFittedError):
        est.predict([rho])
    est.fit(rho)
    assert est.witnesses_.k == 2
    assert 0 <= est.threshold_ <= 1
    assert est.score(rho) == pytest.approx(est.threshold_, abs=1e-9)
    assert est.predict([rho, np.eye(4) / 4]).tolist() == [True, False]
    with pytest.raises(ValueError):
        WitnessSearch(dims=2).fit([rho, rho])
