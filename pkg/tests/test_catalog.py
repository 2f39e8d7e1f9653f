import numpy as np
import pytest

from qjensen.catalog import (
    CATALOG_NAMES,
    MecExpectation,
    OracleStatus,
    catalog_get,
    check_generator,
    scalar_mec_oracle,
)
from qjensen.divergence import jensen_divergence
from qjensen.hermitian import ValidationError, random_pd


def test_xlogx_values():
    g = catalog_get("xlogx").generator
    assert g.f(2.0) == pytest.approx(2 * np.log(2), rel=1e-15)
    assert g.f1(3.0) == pytest.approx(np.log(3) + 1, rel=1e-15)
    assert g.f2(4.0) == 0.25
    assert g.f_at_zero == 0.0


@pytest.mark.parametrize("name,expected", [
    ("quadratic", MecExpectation.EXPECT_MEMBER),
    ("XLOGX", MecExpectation.EXPECT_MEMBER),
    ("power:1.5", MecExpectation.EXPECT_MEMBER),
    ("power:2", MecExpectation.EXPECT_MEMBER),
    ("power:2.5", MecExpectation.EXPECT_NON_MEMBER),
    ("Power:4", MecExpectation.EXPECT_NON_MEMBER),
    ("affine:1,0", MecExpectation.AFFINE),
    ("exp", MecExpectation.UNKNOWN),
])
def test_labels(name, expected):
    assert catalog_get(name).mec_expectation is expected


@pytest.mark.parametrize("name", ["power:1", "power:4.5", "power:x", "cosh", "affine:1",
                                  "quadratic:2", "power"])
def test_rejected_names(name):
    with pytest.raises(ValidationError):
        catalog_get(name)


def test_power2_matches_quadratic():
    p2, q = catalog_get("power:2").generator, catalog_get("quadratic").generator
    A, B = random_pd(3, 0.2, 5.0, 1), random_pd(3, 0.2, 5.0, 2)
    for lam in (0.1, 0.5):
        assert jensen_divergence(p2, lam, A, B) == pytest.approx(
            jensen_divergence(q, lam, A, B), rel=1e-12, abs=1e-12)
    x = np.linspace(0.1, 5, 50)
    for attr in ("f", "f1", "f2"):
        np.testing.assert_allclose(getattr(p2, attr)(x), getattr(q, attr)(x), rtol=1e-12)


def test_affine_divergence_vanishes():
    g = catalog_get("affine:1,0").generator
    for seed in range(20):
        A, B = random_pd(3, 0.2, 5.0, [seed, 0]), random_pd(3, 0.2, 5.0, [seed, 1])
        bound = 1e-12 * (1 + np.linalg.norm(A, 2) + np.linalg.norm(B, 2))
        assert abs(jensen_divergence(g, 0.3, A, B)) <= bound


@pytest.mark.parametrize("name", CATALOG_NAMES + ("affine:2,-1",))
def test_generator_consistency(name):
    report = check_generator(catalog_get(name).generator)
    assert report["convex"], report
    assert report["consistent"], report
    assert report["continuous_at_zero"], report


class TestScalarOracle:
    def test_quadratic(self):
        assert scalar_mec_oracle(catalog_get("quadratic").generator).status is OracleStatus.CONCAVE_PASS

    def test_xlogx(self):
        assert scalar_mec_oracle(catalog_get("xlogx").generator).status is OracleStatus.CONCAVE_PASS

    def test_power4_witness(self):
        g = catalog_get("power:4").generator
        res = scalar_mec_oracle(g, [1.0, 2.0])
        assert res.status is OracleStatus.CONCAVE_FAIL
        assert res.witness == (1.0, 2.0)
        # 1/(12 * 1.5^2) = 0.037037... against (1/12 + 1/48)/2 = 0.052083...
        assert res.gap == pytest.approx(0.037037037037037035 - 0.05208333333333333, rel=1e-12)

    def test_precondition(self):
        with pytest.raises(ValidationError):
            scalar_mec_oracle(catalog_get("affine:1,0").generator)
        with pytest.raises(ValidationError):
            scalar_mec_oracle(catalog_get("xlogx").generator, [0.0, 1.0])

    @pytest.mark.parametrize("name", CATALOG_NAMES)
    def test_labels_agree_with_oracle(self, name):
        entry = catalog_get(name)
        status = scalar_mec_oracle(entry.generator).status
        if entry.mec_expectation is MecExpectation.EXPECT_MEMBER:
            assert status is OracleStatus.CONCAVE_PASS
        elif entry.mec_expectation is MecExpectation.EXPECT_NON_MEMBER:
            assert status is OracleStatus.CONCAVE_FAIL

    def test_exp_resolved_as_failing(self):
        # 1/f'' = exp(-x) is convex
        assert scalar_mec_oracle(catalog_get("exp").generator).status is OracleStatus.CONCAVE_FAIL
