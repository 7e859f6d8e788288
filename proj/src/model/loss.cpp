#include "mug/error.hpp"
#include "mug/model.hpp"

namespace mug::model {

namespace {

void require_binary(const Tensor& t, const char* what) {
    for (double v : t.data()) {
        if (v != 0.0 && v != 1.0) throw ContractError(std::string(what) + " must be 0/1 valued");
    }
}

Tensor to_tensor(const std::vector<std::uint8_t>& v) {
    return Tensor::from_vector({v.size()}, std::vector<double>(v.begin(), v.end()));
}

}  // namespace

Tensor binary_cross_entropy(const Tensor& prob, const Tensor& target, const Tensor& mask) {
    if (prob.shape() != target.shape()) {
        throw ShapeError("BCE shapes differ: " + shape_string(prob.shape()) + " vs " + shape_string(target.shape()));
    }
    require_binary(target, "BCE targets");
    const Tensor p = clamp(prob, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const Tensor one_minus_y = add_scalar(neg(target), 1.0);
    Tensor per_elem = neg(add(mul(target, log(p)), mul(one_minus_y, log(add_scalar(neg(p), 1.0)))));
    double count = static_cast<double>(prob.numel());
    if (mask.defined()) {
        const std::size_t rows = prob.dim(0);
        if (mask.shape() != Shape{rows}) throw ShapeError("BCE mask must be [" + std::to_string(rows) + "]");
        require_binary(mask, "BCE mask");
        double kept = 0.0;
        for (double m : mask.data()) kept += m;
        if (kept == 0.0) return Tensor::zeros({1});
        Shape mask_shape(prob.rank(), 1);
        mask_shape[0] = rows;
        per_elem = mul(per_elem, reshape(mask, mask_shape));
        count = kept * static_cast<double>(prob.numel() / rows);
    }
    return scale(sum_all(per_elem), 1.0 / count);
}

LossTargets LossTargets::from_record(const data::VideoRecord& video) {
    return {to_tensor(video.video_label), video.pseudo_a.to_tensor(), video.pseudo_v.to_tensor(),
            video.pseudo_a.annotated_mask(), video.pseudo_v.annotated_mask()};
}

Tensor compute_loss(const ModelOutputs& outputs, const LossTargets& targets, double lambda_a, double lambda_v) {
    Tensor loss = binary_cross_entropy(outputs.video_prob, targets.video_label);
    if (lambda_a != 0.0) loss = add(loss, scale(binary_cross_entropy(outputs.seg_prob_a, targets.pseudo_a, targets.mask_a), lambda_a));
    if (lambda_v != 0.0) loss = add(loss, scale(binary_cross_entropy(outputs.seg_prob_v, targets.pseudo_v, targets.mask_v), lambda_v));
    return loss;
}

}  // namespace mug::model
