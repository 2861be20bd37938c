"""Perceptual loss combinator, stochastic estimator, quadrant/half variants."""

import numpy as np
import pytest

from sirenanim.autodiff import Tensor
from sirenanim.losses import (
    IdentityExtractor,
    RandomProjectionExtractor,
    RGB_PROBABILITY,
    half_loss,
    phi_loss,
    phi_loss_stochastic,
    quadrant_loss,
)

from gradcheck import check_grads, rand_tensor

IDENT = IdentityExtractor()


def _pair(rng, size=4, dtype=np.float64):
    a = Tensor(rng.uniform(size=(4, size, size)), dtype=dtype)
    b = Tensor(rng.uniform(size=(4, size, size)), dtype=dtype)
    return a, b


class _HeadRng:
    """Coin rig: always below / above the head threshold."""

    def __init__(self, value):
        self._value = value

    def random(self):
        return self._value


HEADS = _HeadRng(0.0)
TAILS = _HeadRng(0.99)


def test_phi_zero_when_equal():
    rng = np.random.default_rng(0)
    a, _ = _pair(rng)
    assert phi_loss(a, a, IDENT).item() == 0.0


def test_phi_hand_value_1x1():
    # identity extractor, all 4 channels differ by 0.3:
    # rgb term 3*0.3/3 + aaa term 3*0.3/3 = 0.6
    a = Tensor(np.full((4, 1, 1), 0.5))
    b = Tensor(np.full((4, 1, 1), 0.2))
    assert phi_loss(a, b, IDENT).item() == pytest.approx(0.6, rel=1e-6)


def test_phi_alpha_swap_symmetry():
    rng = np.random.default_rng(1)
    a, b = _pair(rng)
    swapped_a = np.concatenate([a.data[:3], b.data[3:4]])
    swapped_b = np.concatenate([b.data[:3], a.data[3:4]])
    v1 = phi_loss(a, b, IDENT).item()
    v2 = phi_loss(Tensor(swapped_a), Tensor(swapped_b), IDENT).item()
    assert v1 == pytest.approx(v2, rel=1e-12)


def test_phi_shape_mismatch_raises():
    a = Tensor(np.zeros((4, 4, 4)))
    b = Tensor(np.zeros((4, 8, 8)))
    with pytest.raises(ValueError):
        phi_loss(a, b, IDENT)


def test_phi_random_projection_extractor_deterministic():
    rng = np.random.default_rng(2)
    a, b = _pair(rng, size=6)
    e1 = RandomProjectionExtractor(seed=5)
    e2 = RandomProjectionExtractor(seed=5)
    assert phi_loss(a, b, e1).item() == phi_loss(a, b, e2).item()
    e3 = RandomProjectionExtractor(seed=6)
    assert phi_loss(a, b, e1).item() != phi_loss(a, b, e3).item()


# ---------------------------------------------------------------------------
# stochastic estimator


def test_stochastic_two_outcome_expectation_matches_exact():
    rng = np.random.default_rng(3)
    for extractor in (IDENT, RandomProjectionExtractor(seed=1)):
        a, b = _pair(rng)
        head = phi_loss_stochastic(a, b, extractor, HEADS).item()
        tail = phi_loss_stochastic(a, b, extractor, TAILS).item()
        expect = RGB_PROBABILITY * head + (1.0 - RGB_PROBABILITY) * tail
        assert expect == pytest.approx(phi_loss(a, b, extractor).item(), abs=1e-9)


def test_stochastic_zero_for_identical_inputs():
    rng = np.random.default_rng(4)
    a, _ = _pair(rng)
    assert phi_loss_stochastic(a, a, IDENT, HEADS).item() == 0.0
    assert phi_loss_stochastic(a, a, IDENT, TAILS).item() == 0.0


def test_stochastic_empirical_mean_within_2pct():
    rng = np.random.default_rng(5)
    a, b = _pair(rng, size=2)
    exact = phi_loss(a, b, IDENT).item()
    coin = np.random.default_rng(99)
    n = 100_000
    total = 0.0
    for _ in range(n):
        total += phi_loss_stochastic(a, b, IDENT, coin).item()
    assert total / n == pytest.approx(exact, rel=0.02)


# ---------------------------------------------------------------------------
# quadrant / half


def test_quadrant_zero_when_equal():
    rng = np.random.default_rng(6)
    a, _ = _pair(rng, size=8)
    assert quadrant_loss(a, a, IDENT).item() == 0.0


def test_quadrant_difference_confined_to_one_quadrant():
    rng = np.random.default_rng(7)
    a, _ = _pair(rng, size=8)
    b_arr = a.data.copy()
    b_arr[:, :4, :4] = rng.uniform(size=(4, 4, 4))
    b = Tensor(b_arr)
    qa = Tensor(a.data[:, :4, :4].copy(), _check=False)
    qb = Tensor(b_arr[:, :4, :4].copy(), _check=False)
    assert quadrant_loss(a, b, IDENT).item() == pytest.approx(
        phi_loss(qa, qb, IDENT).item(), rel=1e-12
    )


def test_quadrant_identity_extractor_partition_sum():
    # per-quadrant means of 4x4 fixtures recombine into the full-image sum
    rng = np.random.default_rng(8)
    a, b = _pair(rng, size=4)
    per_quadrant = quadrant_loss(a, b, IDENT).item()
    # each quadrant holds 1/4 of the elements, so the sum of quadrant means
    # equals 4x the full-image mean
    assert per_quadrant == pytest.approx(4.0 * phi_loss(a, b, IDENT).item(), rel=1e-9)


def test_quadrant_rejects_odd_size():
    a = Tensor(np.zeros((4, 5, 5)))
    with pytest.raises(ValueError):
        quadrant_loss(a, a, IDENT)


def test_half_zero_when_equal():
    rng = np.random.default_rng(9)
    a, _ = _pair(rng, size=8)
    assert half_loss(a, a, IDENT).item() == 0.0


def test_half_constant_images_match_phi_of_constants():
    a = Tensor(np.full((4, 8, 8), 0.7))
    b = Tensor(np.full((4, 8, 8), 0.4))
    small_a = Tensor(np.full((4, 4, 4), 0.7))
    small_b = Tensor(np.full((4, 4, 4), 0.4))
    assert half_loss(a, b, IDENT).item() == pytest.approx(
        phi_loss(small_a, small_b, IDENT).item(), rel=1e-9
    )


def test_half_loss_gradcheck():
    rng = np.random.default_rng(10)
    a = rand_tensor(rng, (4, 4, 4))
    # keep element differences away from the L1 kink
    b = Tensor(a.data + rng.uniform(0.2, 0.6, size=(4, 4, 4)), dtype=np.float64)
    check_grads(lambda x, y: half_loss(x, y, IDENT), [a, b])


def test_phi_loss_gradcheck_random_projection():
    rng = np.random.default_rng(11)
    a = rand_tensor(rng, (4, 4, 4))
    b = Tensor(a.data + rng.uniform(0.2, 0.6, size=(4, 4, 4)), dtype=np.float64)
    check_grads(lambda x, y: phi_loss(x, y, RandomProjectionExtractor(seed=2)), [a, b])
