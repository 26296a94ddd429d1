import math

import numpy as np
import pytest

from blv.balancing.histogram import BalancingCoefficients
from blv.balancing.labels import LabelBatch
from blv.balancing.loss import LossMode, blv_loss, cross_entropy, perturb_logits, softmax
from blv.balancing.variation import NoiseSpec, SigmaSchedule, expected_noise, sample_noise
from blv.errors import DegenerateInputError, ShapeMismatchError

MODES = list(LossMode)


def _coeffs(values):
    values = np.asarray(values, dtype=np.float64)
    return BalancingCoefficients(coeffs=values, raw=values)


def _rel_error(a, b):
    return np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-12)


def _numeric_grad(fn, z, step=1e-6):
    grad = np.zeros_like(z)
    for idx in np.ndindex(*z.shape):
        plus, minus = z.copy(), z.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (fn(plus) - fn(minus)) / (2 * step)
    return grad


class TestSoftmax:
    def test_examples(self):
        assert softmax([[0.0, 0.0, 0.0]])[0] == pytest.approx([1 / 3] * 3, abs=1e-15)
        assert softmax([[0.0, math.log(2)]])[0] == pytest.approx([1 / 3, 2 / 3], abs=1e-15)
        assert softmax([[1000.0, 1000.0]])[0].tolist() == [0.5, 0.5]

    def test_rows_sum_to_one(self, rng):
        p = softmax(rng.normal(0, 30, size=(50, 7)))
        assert (p >= 0).all()
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_shift_invariance(self, rng):
        z = rng.normal(size=(20, 5))
        for c in (-300.0, -1.5, 0.25, 700.0):
            np.testing.assert_allclose(softmax(z + c), softmax(z), atol=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            softmax([[0.0, float("nan")]])

    def test_single_class_rejected(self):
        with pytest.raises(ShapeMismatchError):
            softmax([[1.0], [2.0]])


class TestCrossEntropy:
    def test_two_class_example(self):
        loss, grad = cross_entropy([[0.0, 0.0]], [0])
        assert loss == pytest.approx(math.log(2), abs=1e-15)
        assert grad.tolist() == [[-0.5, 0.5]]

    def test_saturation(self):
        loss, _ = cross_entropy([[50.0, 0.0]], [0])
        assert loss < 1e-12

    def test_uniform_four_classes(self):
        loss, _ = cross_entropy([[0.0, 0.0, 0.0, 0.0]], [2])
        assert loss == pytest.approx(math.log(4), abs=1e-15)

    def test_ignored_rows_have_zero_grad(self, rng):
        z = rng.normal(size=(6, 3))
        loss, grad = cross_entropy(z, [0, 255, 2, 1, 255, 0])
        assert not grad[[1, 4]].any()
        np.testing.assert_allclose(grad[[0, 2, 3, 5]].sum(axis=1), 0.0, atol=1e-9)
        expected, _ = cross_entropy(z[[0, 2, 3, 5]], [0, 2, 1, 0])
        assert loss == pytest.approx(expected, abs=1e-15)

    def test_all_ignored(self):
        with pytest.raises(DegenerateInputError):
            cross_entropy([[0.0, 1.0], [1.0, 0.0]], [255, 255])

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            cross_entropy([[0.0, 1.0]], [0, 1])


class TestPerturbLogits:
    def test_blv_arithmetic(self):
        out = perturb_logits([[1.0, 2.0]], _coeffs([0.2, 1.0]), np.array([[0.5, 0.5]]), LossMode.BLV)
        np.testing.assert_allclose(out, [[1.1, 2.5]], atol=1e-15)

    def test_plain_is_identity(self, rng):
        z = rng.normal(size=(4, 3))
        assert np.array_equal(perturb_logits(z, _coeffs([1, 1, 1]), None, LossMode.PLAIN_CE), z)

    def test_no_balance(self):
        out = perturb_logits([[0.0, 0.0]], _coeffs([1.0, 1.0]), np.array([[0.3, 0.7]]), LossMode.NO_BALANCE)
        assert out.tolist() == [[0.3, 0.7]]

    def test_no_variation_adds_constant(self):
        out = perturb_logits([[0.0, 0.0]], _coeffs([0.5, 1.0]), None, LossMode.NO_VARIATION, kappa=0.4)
        np.testing.assert_allclose(out, [[0.2, 0.4]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            perturb_logits([[0.0, 0.0]], _coeffs([1.0, 1.0]), np.zeros((2, 2)), LossMode.BLV)
        with pytest.raises(ShapeMismatchError):
            perturb_logits([[0.0, 0.0]], _coeffs([1.0, 1.0, 1.0]), np.zeros((1, 2)), LossMode.BLV)

    @pytest.mark.parametrize("mode", MODES)
    def test_never_decreases_logits(self, rng, mode):
        z = rng.normal(size=(10, 4))
        noise = sample_noise(NoiseSpec(), z.shape, rng)
        out = perturb_logits(z, _coeffs(rng.random(4)), noise, mode, kappa=0.47)
        assert (out >= z).all()


class TestBLVLoss:
    def test_frozen_noise_example(self, rng):
        out = blv_loss(
            [[1.0, 2.0]], [1], _coeffs([0.2, 1.0]), NoiseSpec(), SigmaSchedule(), 0, LossMode.BLV, rng,
            noise=np.array([[0.5, 0.5]]),
        )
        assert out.loss == pytest.approx(0.220498, abs=1e-6)
        assert out.loss == pytest.approx(-math.log(math.exp(2.5) / (math.exp(1.1) + math.exp(2.5))), abs=1e-14)

    @pytest.mark.parametrize("mode", MODES)
    def test_none_family_reduces_to_ce(self, mode):
        gen = np.random.default_rng(0)
        spec = NoiseSpec(family="none")
        for _ in range(1000):
            n, c = int(gen.integers(1, 9)), int(gen.integers(2, 7))
            z = gen.normal(0, 5, size=(n, c))
            y = gen.integers(0, c, size=n)
            coeffs = _coeffs(gen.random(c))
            out = blv_loss(z, y, coeffs, spec, SigmaSchedule(sigma0=6.0), 0, mode, gen)
            loss, grad = cross_entropy(z, y)
            assert abs(out.loss - loss) <= 1e-15
            assert np.array_equal(out.grad, grad)

    def test_all_ignored(self, rng):
        with pytest.raises(DegenerateInputError):
            blv_loss([[0.0, 1.0]], [255], _coeffs([1.0, 1.0]), NoiseSpec(), SigmaSchedule(), 0, LossMode.BLV, rng)

    def test_no_variation_uses_expected_noise(self, rng):
        spec = NoiseSpec(sigma=6.0)
        out = blv_loss([[0.0, 0.0]], [0], _coeffs([0.5, 1.0]), spec, SigmaSchedule(sigma0=6.0), 0,
                       LossMode.NO_VARIATION, rng, keep_perturbed=True)
        kappa = expected_noise(spec)
        np.testing.assert_allclose(out.perturbed_logits, [[0.5 * kappa, kappa]])

    def test_no_variation_numeric_kappa(self, rng):
        out = blv_loss([[0.0, 0.0]], [0], _coeffs([0.5, 1.0]), NoiseSpec(), SigmaSchedule(), 0,
                       LossMode.NO_VARIATION, rng, kappa=1.0, keep_perturbed=True)
        np.testing.assert_allclose(out.perturbed_logits, [[0.5, 1.0]])

    def test_schedule_feeds_sigma(self):
        # en t=0 el calendario temporal vale 0: gaussiano sin variación
        sched = SigmaSchedule("temporal", sigma0=6.0, t_mid=10, t_end=20)
        z = np.array([[0.3, -0.2, 0.1]])
        out = blv_loss(z, [1], _coeffs([0.1, 0.5, 1.0]), NoiseSpec(), sched, 0, LossMode.BLV,
                       np.random.default_rng(0), keep_perturbed=True)
        np.testing.assert_allclose(out.perturbed_logits, z)

    def test_loss_not_lower_when_target_gets_least(self, rng):
        for _ in range(200):
            z = rng.normal(size=(1, 4))
            y = int(rng.integers(0, 4))
            noise = rng.random((1, 4)) * 0.5 + 0.5
            noise[0, y] = rng.random() * 0.5
            base, _ = cross_entropy(z, [y])
            out = blv_loss(z, [y], _coeffs([1, 1, 1, 1]), NoiseSpec(), SigmaSchedule(), 0, LossMode.NO_BALANCE,
                           rng, noise=noise)
            assert out.loss >= base

    def test_row_sums_zero(self, rng):
        z = rng.normal(size=(8, 5))
        y = LabelBatch(np.array([0, 1, 255, 3, 4, 2, 255, 1]))
        out = blv_loss(z, y, _coeffs(rng.random(5)), NoiseSpec(), SigmaSchedule(), 0, LossMode.BLV, rng)
        valid = y.valid_mask()
        np.testing.assert_allclose(out.grad[valid].sum(axis=1), 0.0, atol=1e-9)
        assert not out.grad[~valid].any()
        assert out.valid_count == 6


class TestGradientOracle:
    @pytest.mark.parametrize("mode", MODES)
    @pytest.mark.parametrize("rule", ["clamp-raw", "abs-then-clamp"])
    def test_matches_finite_differences(self, mode, rule):
        gen = np.random.default_rng(2024)
        spec = NoiseSpec(sigma=6.0, clamp_rule=rule)
        for _ in range(10):
            n, c = int(gen.integers(1, 9)), int(gen.integers(2, 7))
            z = gen.normal(0, 2, size=(n, c))
            y = gen.integers(0, c, size=n)
            coeffs = _coeffs(gen.random(c) + 0.05)
            noise = sample_noise(spec, (n, c), gen)

            def loss_at(zz):
                return blv_loss(zz, y, coeffs, spec, SigmaSchedule(), 0, mode, gen, noise=noise).loss

            analytic = blv_loss(z, y, coeffs, spec, SigmaSchedule(), 0, mode, gen, noise=noise).grad
            assert _rel_error(analytic, _numeric_grad(loss_at, z)) <= 1e-6
