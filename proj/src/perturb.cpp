#include "genaug/perturb.hpp"

#include <cmath>

#include "genaug/errors.hpp"

namespace genaug {

namespace {

double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

bool normalize(Tensor& t) {
    double n = l2_norm(t);
    if (n < 1e-12) return false;
    for (double& v : t.data) v /= n;
    return true;
}

Tensor random_unit(const std::vector<std::size_t>& shape, RngStream& rng) {
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

} // namespace

double kl_divergence(const nn::ProbVector& p, const nn::ProbVector& q) {
    if (p.size() != q.size()) throw ValidationError("kl_divergence: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue; // 0 log 0 := 0
        double qi = q[i] < 1e-12 ? 1e-12 : q[i];
        kl += p[i] * (std::log(p[i]) - std::log(qi));
    }
    return kl < 0.0 ? 0.0 : kl;
}

Image vap(const nn::Model& model, const Image& img, const VapParams& params, RngStream& rng) {
    params.validate();
    nn::ProbVector p = nn::forward(model, img);

    nn::Objective objective;
    objective.type = nn::Objective::Type::KlAgainstTarget;
    objective.target = p;

    Tensor direction;
    // Runs the power iteration from a start direction; false when the
    // gradient degenerates to (near) zero.
    auto iterate = [&](Tensor d) -> bool {
        Tensor cur = std::move(d);
        for (int it = 0; it < params.iterations; ++it) {
            Tensor stepped = img.data;
            for (std::size_t i = 0; i < stepped.data.size(); ++i)
                stepped.data[i] += params.xi * cur.data[i];
            Image probe = clamp01_tensor(img.height, img.width, img.channels, stepped);
            cur = nn::input_gradient(model, probe, objective);
            if (!normalize(cur)) return false;
        }
        direction = std::move(cur);
        return true;
    };

    Tensor d = random_unit(img.data.shape, rng);
    normalize(d);
    bool ok = iterate(d);
    if (!ok) {
        // one re-draw, then fall back to the zero perturbation
        Tensor d2 = random_unit(img.data.shape, rng);
        normalize(d2);
        ok = iterate(d2);
        if (!ok) return img;
    }

    Tensor out = img.data;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += params.epsilon * direction.data[i];
    return clamp01_tensor(img.height, img.width, img.channels, out);
}

} // namespace genaug
