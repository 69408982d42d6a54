import numpy as np
import pytest

from natgalore.adam import adam_update, apply_weight_decay, init_adam
from natgalore.errors import DimensionError, NumericalError

from oracles import ScalarAdam


class TestAdamUpdate:
    def test_first_step_sign_property(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((4, 5)) * 10.0  # |g| >> eps
        state = init_adam(g.shape)
        u, _ = adam_update(state, g)
        assert np.allclose(u, np.sign(g), atol=1e-6)

    def test_zero_gradient_fixed_point(self):
        state = init_adam((3, 3))
        for _ in range(5):
            u, _ = adam_update(state, np.zeros((3, 3)))
        assert np.array_equal(state.m, np.zeros((3, 3)))
        assert np.array_equal(state.v, np.zeros((3, 3)))
        assert np.array_equal(u, np.zeros((3, 3)))

    @pytest.mark.parametrize("bias_correction", [True, False])
    @pytest.mark.parametrize("eps_inside", [True, False])
    def test_matches_scalar_reference(self, bias_correction, eps_inside):
        rng = np.random.default_rng(1)
        state = init_adam((1, 1), bias_correction=bias_correction,
                          eps_inside_sqrt=eps_inside)
        ref = ScalarAdam(lr=1.0, bias_correction=bias_correction,
                         eps_inside=eps_inside)
        for _ in range(10):
            g = float(rng.standard_normal())
            u, _ = adam_update(state, np.array([[g]]))
            assert abs(u[0, 0] - ref.update(g)) <= 1e-14

    def test_step_counter_increments(self):
        state = init_adam((2, 2))
        for k in range(7):
            adam_update(state, np.ones((2, 2)))
            assert state.step_count == k + 1

    def test_v_nonnegative_and_converges_monotonically(self):
        state = init_adam((1, 1))
        g = np.array([[0.7]])
        prev_gap = None
        for _ in range(50):
            adam_update(state, g)
            assert state.v[0, 0] >= 0
            gap = abs(state.v[0, 0] - 0.49)
            if prev_gap is not None:
                assert gap < prev_gap
            prev_gap = gap

    def test_update_bound_random_suite(self):
        rng = np.random.default_rng(2)
        state = init_adam((4, 4))
        for _ in range(200):
            g = rng.uniform(-5, 5, size=(4, 4))
            u, _ = adam_update(state, g)
            assert np.max(np.abs(u)) <= 10.0

    def test_determinism_bitwise(self):
        rng = np.random.default_rng(3)
        grads = [rng.standard_normal((3, 2)) for _ in range(20)]
        outs = []
        for _ in range(2):
            state = init_adam((3, 2))
            us = [adam_update(state, g)[0] for g in grads]
            outs.append((us, state.m.copy(), state.v.copy()))
        for a, b in zip(outs[0][0], outs[1][0]):
            assert np.array_equal(a, b)
        assert np.array_equal(outs[0][1], outs[1][1])
        assert np.array_equal(outs[0][2], outs[1][2])

    def test_non_finite_gradient_names_slot(self):
        state = init_adam((2, 2))
        bad = np.array([[1.0, np.nan], [0.0, 0.0]])
        with pytest.raises(NumericalError, match="embed"):
            adam_update(state, bad, slot_name="embed")

    def test_shape_mismatch(self):
        state = init_adam((2, 2))
        with pytest.raises(DimensionError):
            adam_update(state, np.zeros((3, 2)))


class TestWeightDecay:
    def test_zero_rate_is_noop(self):
        theta = np.array([[1.5, -2.0]])
        out = apply_weight_decay(theta.copy(), 0.0, 0.1)
        assert np.array_equal(out, theta)

    def test_full_decay(self):
        theta = np.array([[3.0], [4.0]])
        out = apply_weight_decay(theta, 10.0, 0.1)  # lr*rate = 1
        assert np.array_equal(out, np.zeros((2, 1)))

    def test_arithmetic_example(self):
        out = apply_weight_decay(np.array([[2.0]]), 0.5, 0.1)
        assert out[0, 0] == pytest.approx(1.9, abs=1e-15)

    def test_negative_rate_rejected(self):
        with pytest.raises(DimensionError):
            apply_weight_decay(np.ones((1, 1)), -0.1, 0.1)
