import numpy as np
import pytest

from iwseg import (
    LOSS_KINDS,
    LossSpec,
    ValidationError,
    Volume,
    component_contributions,
    evaluate_loss,
    inverse_weight_map,
)

from ._oracles import central_difference_gradient
from .conftest import constant_class_prob


def vols(p, y, spacing=(1.0, 1.0, 1.0)):
    return Volume(np.asarray(p, dtype=np.float64), spacing), Volume(
        np.asarray(y, dtype=np.uint8), spacing
    )


def spec_for(kind, **overrides):
    """A usable spec for any kind, with sensible hyperparameters."""
    params = {}
    if kind in ("focal", "iw_focal"):
        params = {"gamma": 2.0, "alpha": 0.75}
    elif kind in ("asl", "iw_asl"):
        params = {"beta": 1.5}
    params.update(overrides)
    return LossSpec(kind, **params)


def weight_for(spec, y):
    return inverse_weight_map(y) if spec.uses_weight_map else None


class TestLossSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValidationError, match="unknown loss kind"):
            LossSpec("jaccard")

    def test_focal_requires_gamma_and_alpha(self):
        with pytest.raises(ValidationError, match="missing hyperparameter"):
            LossSpec("focal")
        with pytest.raises(ValidationError, match="missing hyperparameter"):
            LossSpec("iw_focal", gamma=2.0)

    def test_asl_requires_beta(self):
        with pytest.raises(ValidationError, match="missing hyperparameter"):
            LossSpec("asl")

    def test_foreign_hyperparameters_rejected(self):
        with pytest.raises(ValidationError, match="not used"):
            LossSpec("dice", gamma=1.0, alpha=0.5)
        with pytest.raises(ValidationError, match="not used"):
            LossSpec("bce", beta=1.0)
        with pytest.raises(ValidationError, match="not used"):
            LossSpec("bce", wce_weight_source="gt")

    def test_reduction_rejected_for_ratio_losses(self):
        with pytest.raises(ValidationError, match="reduction"):
            LossSpec("dice", reduction="mean")

    def test_hyperparameter_ranges(self):
        with pytest.raises(ValidationError, match="gamma"):
            LossSpec("focal", gamma=-1.0, alpha=0.5)
        with pytest.raises(ValidationError, match="alpha"):
            LossSpec("focal", gamma=1.0, alpha=1.5)
        with pytest.raises(ValidationError, match="beta"):
            LossSpec("asl", beta=0.0)


class TestInputContracts:
    def test_shape_mismatch(self):
        p, _ = vols([[[0.5]]], [[[1]]])
        _, y = vols([[[0.5, 0.5]]], [[[1, 0]]])
        with pytest.raises(ValidationError, match="shape mismatch"):
            evaluate_loss(LossSpec("bce"), p, y)

    def test_weight_map_required_for_iw(self, one_lesion_mask):
        p = Volume(np.full((4, 4, 4), 0.5))
        with pytest.raises(ValidationError, match="missing weight map"):
            evaluate_loss(LossSpec("iw_bce"), p, one_lesion_mask)

    def test_weight_map_forbidden_for_base(self, one_lesion_mask):
        p = Volume(np.full((4, 4, 4), 0.5))
        wm = inverse_weight_map(one_lesion_mask)
        with pytest.raises(ValidationError, match="not used"):
            evaluate_loss(LossSpec("bce"), p, one_lesion_mask, wm)

    def test_probabilities_out_of_range(self):
        p, y = vols([[[1.5]]], [[[1]]])
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            evaluate_loss(LossSpec("bce"), p, y)

    def test_wce_degenerate_weight(self):
        p, y = vols([[[0.0, 0.0]]], [[[1, 0]]])
        with pytest.raises(ValidationError, match="degenerate WCE weight"):
            evaluate_loss(LossSpec("wce"), p, y)
        p2, y2 = vols([[[0.5, 0.5]]], [[[0, 0]]])
        with pytest.raises(ValidationError, match="degenerate WCE weight"):
            evaluate_loss(LossSpec("wce", wce_weight_source="gt"), p2, y2)


class TestHandValues:
    def test_bce_uniform_prediction_is_ln2(self):
        p, y = vols([[[0.5, 0.5]]], [[[1, 0]]])
        assert evaluate_loss(LossSpec("bce"), p, y).value == pytest.approx(np.log(2), abs=1e-12)

    def test_dice_perfect_and_inverted(self):
        p, y = vols([[[1.0, 0.0, 1.0]]], [[[1, 0, 1]]])
        spec = LossSpec("dice", dice_eps=0.0)
        assert evaluate_loss(spec, p, y).value == 0.0
        p_inv = Volume(1.0 - p.data)
        assert evaluate_loss(spec, p_inv, y).value == 1.0

    def test_focal_scalar_hand_value(self):
        p, y = vols([[[0.9]]], [[[1]]])
        spec = LossSpec("focal", gamma=2.0, alpha=0.75, reduction="sum")
        expected = 0.75 * 0.1**2 * (-np.log(0.9))
        assert evaluate_loss(spec, p, y).value == pytest.approx(expected, rel=1e-10)

    def test_wce_hand_value(self):
        p, y = vols([[[0.5, 0.5, 0.5, 0.5]]], [[[1, 0, 0, 0]]])
        # n=4, sum p=2 -> W=1, so the mean reduces to plain BCE = ln 2
        assert evaluate_loss(LossSpec("wce"), p, y).value == pytest.approx(np.log(2), abs=1e-12)

    def test_empty_gt_and_empty_pred_is_perfect_for_dice_family(self):
        p, y = vols(np.zeros((2, 2, 2)), np.zeros((2, 2, 2), dtype=np.uint8))
        assert evaluate_loss(LossSpec("dice"), p, y).value == 0.0
        assert evaluate_loss(LossSpec("asl", beta=1.5), p, y).value == 0.0
        assert evaluate_loss(LossSpec("gdl"), p, y).value == 0.0


class TestIdentities:
    def test_iw_with_unit_weights_equals_base(self, two_lesion_mask):
        rng = np.random.default_rng(31)
        y = two_lesion_mask
        p = Volume(rng.uniform(0.05, 0.95, y.shape))
        unit = inverse_weight_map(Volume(np.zeros(y.shape, dtype=np.uint8)))
        pairs = [("iw_bce", "bce"), ("iw_focal", "focal"), ("iw_dice", "dice"), ("iw_asl", "asl")]
        for iw_kind, base_kind in pairs:
            iw_val = evaluate_loss(spec_for(iw_kind), p, y, unit).value
            base_val = evaluate_loss(spec_for(base_kind), p, y).value
            assert iw_val == pytest.approx(base_val, rel=1e-12), iw_kind

    def test_asl_beta_one_equals_dice_on_binary_predictions(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            shape = tuple(int(rng.integers(1, 5)) for _ in range(3))
            p = Volume(rng.integers(0, 2, shape).astype(np.float64))
            y = Volume(rng.integers(0, 2, shape).astype(np.uint8))
            asl = evaluate_loss(LossSpec("asl", beta=1.0), p, y).value
            dice = evaluate_loss(LossSpec("dice"), p, y).value
            assert asl == pytest.approx(dice, rel=1e-12, abs=1e-15)

    def test_focal_gamma_zero_alpha_half_is_half_bce(self):
        rng = np.random.default_rng(33)
        p = Volume(rng.uniform(0.05, 0.95, (3, 3, 3)))
        y = Volume(rng.integers(0, 2, (3, 3, 3)).astype(np.uint8))
        focal = evaluate_loss(LossSpec("focal", gamma=0.0, alpha=0.5), p, y).value
        bce = evaluate_loss(LossSpec("bce"), p, y).value
        assert focal == pytest.approx(0.5 * bce, rel=1e-12)

    def test_losses_non_negative_and_dice_family_at_most_one(self):
        rng = np.random.default_rng(34)
        for _ in range(50):
            shape = tuple(int(rng.integers(1, 5)) for _ in range(3))
            p = Volume(rng.random(shape))
            y = Volume(rng.integers(0, 2, shape).astype(np.uint8))
            wm = inverse_weight_map(y)
            for kind in LOSS_KINDS:
                spec = spec_for(kind)
                if kind == "wce" and (y.data.sum() == 0 or p.data.sum() == 0):
                    continue
                w = wm if spec.uses_weight_map else None
                value = evaluate_loss(spec, p, y, w).value
                assert value >= 0.0, kind
                if kind in ("dice", "iw_dice", "asl", "iw_asl", "gdl"):
                    assert value <= 1.0, kind


class TestComponentContributions:
    def test_breakdown_sums_to_value(self, two_lesion_mask):
        rng = np.random.default_rng(35)
        y = two_lesion_mask
        p = Volume(rng.uniform(0.05, 0.95, y.shape))
        wm = inverse_weight_map(y)
        for kind in ("iw_bce", "iw_focal"):
            for reduction in ("mean", "sum"):
                spec = spec_for(kind, reduction=reduction)
                contrib = component_contributions(spec, p, y, wm)
                value = evaluate_loss(spec, p, y, wm).value
                assert contrib.sum() == pytest.approx(value, rel=1e-12)

    def test_equal_contributions_under_constant_half(self, two_lesion_mask):
        y = two_lesion_mask
        p = Volume(np.full(y.shape, 0.5))
        wm = inverse_weight_map(y)
        contrib = component_contributions(LossSpec("iw_bce"), p, y, wm)
        assert contrib.max() - contrib.min() <= 1e-12 * contrib.max()

    def test_equal_contributions_under_constant_class_probability(self, two_lesion_mask):
        y = two_lesion_mask
        p = constant_class_prob(y, 0.3)
        wm = inverse_weight_map(y)
        contrib = component_contributions(LossSpec("iw_bce", reduction="sum"), p, y, wm)
        expected = (64 / 3) * -np.log(0.3)
        np.testing.assert_allclose(contrib, expected, rtol=1e-9)

    def test_rejected_for_ratio_kinds(self, one_lesion_mask):
        wm = inverse_weight_map(one_lesion_mask)
        p = Volume(np.full((4, 4, 4), 0.5))
        with pytest.raises(ValidationError, match="iw_bce/iw_focal"):
            component_contributions(spec_for("iw_dice"), p, one_lesion_mask, wm)


def random_instance(rng, kind):
    """Random (spec, p, y, w) instance for gradient checking."""
    shape = tuple(int(rng.integers(1, 5)) for _ in range(3))
    p = Volume(rng.uniform(0.05, 0.95, shape))
    y_arr = rng.integers(0, 2, shape).astype(np.uint8)
    if kind == "wce" and y_arr.sum() == 0:
        y_arr.flat[int(rng.integers(y_arr.size))] = 1
    y = Volume(y_arr)
    overrides = {}
    if kind in ("focal", "iw_focal"):
        overrides = {
            "gamma": float(rng.choice([0.0, 0.5, 1.0, 2.0, 3.0])),
            "alpha": float(rng.uniform(0.1, 0.9)),
        }
    elif kind in ("asl", "iw_asl"):
        overrides = {"beta": float(rng.choice([0.5, 1.0, 1.5, 2.0]))}
    if kind in ("bce", "iw_bce", "focal", "iw_focal", "wce"):
        overrides["reduction"] = str(rng.choice(["mean", "sum"]))
    if kind == "wce":
        overrides["wce_weight_source"] = str(rng.choice(["pred", "gt"]))
    spec = spec_for(kind, **overrides)
    return spec, p, y, weight_for(spec, y)


def max_relative_gradient_error(spec, p, y, w, h=1e-6):
    analytic = evaluate_loss(spec, p, y, w).grad.data

    def value_of(arr):
        return evaluate_loss(spec, Volume(arr, p.spacing_mm), y, w).value

    numeric = central_difference_gradient(value_of, p.data.copy(), h=h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-3)
    return float(np.max(np.abs(analytic - numeric) / denom))


@pytest.mark.parametrize("kind", LOSS_KINDS)
def test_gradient_matches_central_differences(kind):
    rng = np.random.default_rng(LOSS_KINDS.index(kind) + 100)
    for _ in range(10):
        spec, p, y, w = random_instance(rng, kind)
        assert max_relative_gradient_error(spec, p, y, w) < 1e-5


def test_gradient_shape_and_finiteness(two_lesion_mask):
    rng = np.random.default_rng(36)
    y = two_lesion_mask
    p = Volume(rng.uniform(0.0, 1.0, y.shape))  # includes exact 0/1 after clamping
    for kind in LOSS_KINDS:
        spec = spec_for(kind)
        w = weight_for(spec, y)
        result = evaluate_loss(spec, p, y, w)
        assert result.grad.shape == y.shape
        assert np.all(np.isfinite(result.grad.data)), kind
        assert np.isfinite(result.value), kind
