import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from anisospec import AnisotropyContours, AnisotropyJoinTree, AnisotropySpectrum
from anisospec.mesh import TensorMesh, generate_synthetic
from anisospec.subdivision import subdivide_mesh
from anisospec.validation import MeshValidationError


class TestSpectrumEstimator:
    def test_params_round_trip(self):
        est = AnisotropySpectrum(bins=32, modes="bc", n_jobs=2)
        assert est.get_params() == {"bins": 32, "modes": "bc", "n_jobs": 2}
        est.set_params(bins=8)
        assert est.bins == 8
        assert clone(est).get_params() == est.get_params()

    def test_fit_shapes(self, synthetic5):
        est = AnisotropySpectrum(bins=16).fit(synthetic5)
        assert est.cumulative_.shape == (17, 3)
        assert est.density_.shape == (16, 3)
        assert est.modes_ == ("a", "b", "c")
        np.testing.assert_allclose(est.cumulative_[-1], est.total_area_, rtol=1e-7)

    def test_transform_self_matches_fit(self, synthetic5):
        est = AnisotropySpectrum(bins=16).fit(synthetic5)
        np.testing.assert_array_equal(est.transform(synthetic5), est.cumulative_)

    def test_fit_transform(self, synthetic5):
        out = AnisotropySpectrum(bins=8, modes="c").fit_transform(synthetic5)
        assert out.shape == (9, 1)

    def test_sublevel_area_at_arbitrary_values(self, synthetic5):
        est = AnisotropySpectrum(bins=16, modes="c").fit(synthetic5)
        got = est.sublevel_area(est.bin_values_[[3, 7]])
        np.testing.assert_allclose(got[:, 0], est.cumulative_[[3, 7], 0], rtol=1e-12)

    def test_mean_ordering(self, synthetic5):
        means = AnisotropySpectrum(bins=32).fit(synthetic5).mean()
        assert means["b"] >= means["c"]

    def test_accepts_submesh(self, synthetic5):
        sub = subdivide_mesh(synthetic5)
        est = AnisotropySpectrum(bins=8).fit(sub)
        assert est.submesh_ is sub

    def test_not_fitted(self, synthetic5):
        with pytest.raises(NotFittedError):
            AnisotropySpectrum().transform(synthetic5)

    def test_invalid_params(self, synthetic5):
        with pytest.raises(ValueError):
            AnisotropySpectrum(bins=0).fit(synthetic5)
        with pytest.raises(ValueError):
            AnisotropySpectrum(modes="xyz").fit(synthetic5)

    def test_invalid_mesh(self):
        bad = TensorMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], [[1, 0, 0]] * 3)
        with pytest.raises(MeshValidationError):
            AnisotropySpectrum().fit(bad)


class TestJoinTreeEstimator:
    def test_fit(self, synthetic5):
        est = AnisotropyJoinTree(with_split=True).fit(synthetic5)
        assert est.n_leaves_ == len(est.tree_.leaves)
        assert est.n_degenerate_ >= 1
        assert est.split_tree_ is not None and est.split_tree_.sweep == "split"

    def test_transform_table(self, synthetic5):
        est = AnisotropyJoinTree(mode="b").fit(synthetic5)
        table = est.transform()
        assert table.shape == (len(est.tree_.nodes), 5)
        assert int(table[:, 3].sum()) == est.n_leaves_

    def test_transform_other_mesh(self):
        est = AnisotropyJoinTree(mode="a").fit(generate_synthetic(5, seed=1, perturb_directions=True))
        other = est.transform(generate_synthetic(5, seed=2, perturb_directions=True))
        np.testing.assert_array_equal(other, est.transform())

    def test_single_mode_only(self, synthetic5):
        with pytest.raises(ValueError):
            AnisotropyJoinTree(mode="bc").fit(synthetic5)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            AnisotropyJoinTree().transform()


class TestContoursEstimator:
    def test_transform(self, synthetic5):
        est = AnisotropyContours().fit(synthetic5)
        top = float(est.submesh_.values.max())
        sets = est.transform([0.25 * top, 0.5 * top])
        assert [s.isovalue for s in sets] == [0.25 * top, 0.5 * top]
        assert all(len(s) > 0 for s in sets)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            AnisotropyContours().transform([1.0])

    def test_bad_isovalues(self, synthetic5):
        est = AnisotropyContours().fit(synthetic5)
        with pytest.raises(ValueError):
            est.transform([np.nan])
