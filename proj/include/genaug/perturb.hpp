#pragma once

#include "genaug/augment.hpp"
#include "genaug/nn.hpp"
#include "genaug/rng.hpp"
#include "genaug/tensor.hpp"

namespace genaug {

// KL(p || q) = sum p_i (log p_i - log q_i); q floored at 1e-12.
double kl_divergence(const nn::ProbVector& p, const nn::ProbVector& q);

// Adversarial direction by power iteration on input gradients of the KL
// objective; returns clamp01(img + epsilon * normalize(d)). Falls back to
// the unperturbed image when no usable gradient direction exists.
Image vap(const nn::Model& model, const Image& img, const VapParams& params, RngStream& rng);

} // namespace genaug
