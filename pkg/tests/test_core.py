import numpy as np
import pytest

from binarycorr.core import (
    Algorithm,
    DecayingProduct,
    Exchangeable,
    General,
    KDependent,
    MarginalVector,
    OneDependent,
    SampleMatrix,
    spec_digest,
)


class TestMarginalVector:
    def test_accessors(self):
        p = MarginalVector([0.3, 0.1, 0.6])
        assert (p.m, p.p_min, p.p_max) == (3, 0.1, 0.6)

    @pytest.mark.parametrize("bad", [[], [0.0, 0.5], [0.5, 1.0], [1.2], [float("nan")], [[0.1, 0.2]]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            MarginalVector(bad)

    def test_immutable(self):
        p = MarginalVector([0.2, 0.3])
        with pytest.raises(ValueError):
            p.p[0] = 0.5


class TestSpecs:
    def test_correlation_domain(self):
        for bad in (-0.1, 1.0, 1.5):
            with pytest.raises(ValueError):
                Exchangeable(bad)
        Exchangeable(0.0)

    def test_minor_diagonal_length(self):
        with pytest.raises(ValueError):
            DecayingProduct([0.1, 0.2]).check_dimension(4)
        OneDependent([0.1, 0.2, 0.3]).check_dimension(4)

    def test_kdependent_band_lengths(self):
        KDependent([[0.1, 0.1, 0.1], [0.2, 0.2]]).check_dimension(4)
        with pytest.raises(ValueError):
            KDependent([[0.1, 0.1], [0.2, 0.2]])
        with pytest.raises(ValueError):
            KDependent([[0.1, 0.1, 0.1]]).check_dimension(3)

    def test_general_validation(self):
        with pytest.raises(ValueError):
            General([[1, 0.2], [0.3, 1]])
        with pytest.raises(ValueError):
            General([[0.9, 0.2], [0.2, 1]])
        with pytest.raises(ValueError):
            General([[1, 1.0], [1.0, 1]])

    def test_general_to_bands(self):
        g = General([[1, 0.3, 0.1], [0.3, 1, 0.2], [0.1, 0.2, 1]])
        kd = g.to_bands()
        assert kd.k == 2
        assert np.array_equal(kd.bands[0], [0.3, 0.2]) and np.array_equal(kd.bands[1], [0.1])


def test_algorithm_parse():
    assert Algorithm.parse("3") is Algorithm.ONE_DEP_M1
    assert Algorithm.parse(5) is Algorithm.K_DEP
    assert Algorithm.parse("alg2") is Algorithm.DECAYING
    with pytest.raises(ValueError):
        Algorithm.parse("alg9")


class TestDigest:
    def test_stable(self):
        p = MarginalVector([0.1, 0.2, 0.3])
        assert spec_digest(p, Exchangeable(0.3), "alg1") == spec_digest(
            MarginalVector([0.1, 0.2, 0.3]), Exchangeable(0.3), Algorithm.EXCHANGEABLE
        )

    def test_order_sensitive(self):
        s = Exchangeable(0.1)
        assert spec_digest(MarginalVector([0.1, 0.2]), s, "alg1") != spec_digest(MarginalVector([0.2, 0.1]), s, "alg1")

    def test_exact_value_sensitive(self):
        p = MarginalVector([0.1, 0.2])
        assert spec_digest(p, Exchangeable(0.3), "alg1") != spec_digest(p, Exchangeable(0.30000001), "alg1")
        assert spec_digest(p, Exchangeable(0.3), "alg1") != spec_digest(p, Exchangeable(np.nextafter(0.3, 1)), "alg1")

    def test_structure_and_algorithm_sensitive(self):
        p = MarginalVector([0.5, 0.5])
        assert spec_digest(p, DecayingProduct([0.2]), "alg2") != spec_digest(p, OneDependent([0.2]), "alg2")
        assert spec_digest(p, OneDependent([0.2]), "alg3") != spec_digest(p, OneDependent([0.2]), "alg4")


def test_sample_matrix_shape():
    s = SampleMatrix(np.zeros((4, 3), dtype=np.uint8), 0, "x", Algorithm.EXCHANGEABLE)
    assert (s.n, s.m) == (4, 3)
