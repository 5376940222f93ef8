#include "genaug/metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "genaug/errors.hpp"

using json = nlohmann::ordered_json;

namespace genaug::metric {

namespace {

constexpr std::uint64_t kSelectionStream = 0x5e1ec7;

struct SampleScore {
    double penalty = 0.0;
    bool mismatch = false;
};

SampleScore score_one(const nn::Model& model, const Image& x, const nn::ProbVector& px,
                      const AugmentationSpec& spec, double lambda, RngStream& rng) {
    Image xp = apply(spec, x, rng, &model);
    nn::ProbVector pxp = nn::forward(model, xp);
    std::size_t yhat = nn::argmax(px);
    SampleScore s;
    if (nn::argmax(pxp) == yhat) {
        s.penalty = -std::abs(px[yhat] - pxp[yhat]);
    } else {
        s.penalty = -lambda;
        s.mismatch = true;
    }
    return s;
}

AugmentationSpec spec_from_json(const json& j);

AugmentationSpec child_from_json(const json& j) {
    if (j.is_string()) {
        AugmentationSpec c;
        c.kind = aug_kind_from_name(j.get<std::string>());
        return c;
    }
    return spec_from_json(j);
}

void params_from_json(AugmentationSpec& spec, const json& p) {
    if (p.contains("lo")) spec.params.saturation_lo = p["lo"].get<double>();
    if (p.contains("hi")) spec.params.saturation_hi = p["hi"].get<double>();
    if (p.contains("fraction")) spec.params.crop_fraction = p["fraction"].get<double>();
    if (p.contains("delta")) spec.params.brightness_delta = p["delta"].get<double>();
    if (p.contains("area_lo")) spec.params.erase_area_lo = p["area_lo"].get<double>();
    if (p.contains("area_hi")) spec.params.erase_area_hi = p["area_hi"].get<double>();
    if (p.contains("aspect_lo")) spec.params.erase_aspect_lo = p["aspect_lo"].get<double>();
    if (p.contains("aspect_hi")) spec.params.erase_aspect_hi = p["aspect_hi"].get<double>();
    if (p.contains("epsilon")) spec.params.vap.epsilon = p["epsilon"].get<double>();
    if (p.contains("xi")) spec.params.vap.xi = p["xi"].get<double>();
    if (p.contains("iterations")) spec.params.vap.iterations = p["iterations"].get<int>();
}

AugmentationSpec spec_from_json(const json& j) {
    AugmentationSpec spec;
    spec.kind = aug_kind_from_name(j.at("kind").get<std::string>());
    spec.lambda = j.value("lambda", 0.0);
    if (j.contains("params")) params_from_json(spec, j["params"]);
    if (j.contains("children"))
        for (const auto& c : j["children"]) spec.children.push_back(child_from_json(c));
    spec.validate();
    return spec;
}

json params_to_json(const AugmentationSpec& spec) {
    json p = json::object();
    switch (spec.kind) {
        case AugKind::RandomSaturation:
            p["lo"] = spec.params.saturation_lo;
            p["hi"] = spec.params.saturation_hi;
            break;
        case AugKind::CropResize:
            p["fraction"] = spec.params.crop_fraction;
            break;
        case AugKind::Brightness:
            p["delta"] = spec.params.brightness_delta;
            break;
        case AugKind::RandomErase:
            p["area_lo"] = spec.params.erase_area_lo;
            p["area_hi"] = spec.params.erase_area_hi;
            p["aspect_lo"] = spec.params.erase_aspect_lo;
            p["aspect_hi"] = spec.params.erase_aspect_hi;
            break;
        case AugKind::Vap:
            p["epsilon"] = spec.params.vap.epsilon;
            p["xi"] = spec.params.vap.xi;
            p["iterations"] = spec.params.vap.iterations;
            break;
        default:
            break;
    }
    return p;
}

json spec_to_json(const AugmentationSpec& spec, bool with_lambda = true) {
    json j;
    j["kind"] = aug_kind_name(spec.kind);
    if (with_lambda) j["lambda"] = spec.lambda;
    json p = params_to_json(spec);
    if (!p.empty()) j["params"] = p;
    if (spec.kind == AugKind::Compose) {
        j["children"] = json::array();
        for (const auto& c : spec.children) j["children"].push_back(spec_to_json(c, false));
    }
    return j;
}

} // namespace

void PenaltyConfig::validate() const {
    if (sample_count < 1) throw ValidationError("penalty config: sample_count must be >= 1");
    if (entries.empty()) throw ValidationError("penalty config: no entries");
    for (const auto& e : entries) e.validate();
}

double score_sample(const nn::Model& model, const Image& x, const AugmentationSpec& spec,
                    double lambda, RngStream& rng) {
    if (!(lambda >= 0.0)) throw ValidationError("score_sample: lambda must be >= 0");
    nn::ProbVector px = nn::forward(model, x);
    return score_one(model, x, px, spec, lambda, rng).penalty;
}

MetricReport score_model(const nn::Model& model, const zoo::Dataset& data,
                         const PenaltyConfig& config, unsigned threads) {
    config.validate();
    data.validate();
    if (data.size() == 0) throw ValidationError("score_model: empty dataset");

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < config.entries.size(); ++i)
        if (config.entries[i].lambda > 0.0) active.push_back(i);
    if (active.empty()) throw ValidationError("score_model: every entry has lambda == 0; nothing to score");

    // deterministic seeded shuffle, then the first sample_count indices
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream sel(mix_seed(config.seed, kSelectionStream));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[sel.uniform_index(i)]);
    const std::size_t n = std::min(config.sample_count, order.size());
    order.resize(n);

    const std::size_t n_active = active.size();
    std::vector<SampleScore> scores(n_active * n);

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const std::size_t idx = order[s];
            const Image& x = data.images[idx];
            nn::ProbVector px = nn::forward(model, x);
            for (std::size_t a = 0; a < n_active; ++a) {
                const AugmentationSpec& spec = config.entries[active[a]];
                RngStream rng(substream_seed(config.seed, idx, active[a]));
                scores[a * n + s] = score_one(model, x, px, spec, spec.lambda, rng);
            }
        }
    };

    if (threads <= 1 || n < 2) {
        worker(0, n);
    } else {
        const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(n));
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < t; ++i) {
            std::size_t begin = n * i / t, end = n * (i + 1) / t;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    MetricReport report;
    report.seed = config.seed;
    report.samples_scored = n;
    report.truncated = config.sample_count > data.size();
    std::size_t a = 0;
    for (std::size_t i = 0; i < config.entries.size(); ++i) {
        AugmentationResult r;
        r.name = config.entries[i].name();
        r.lambda = config.entries[i].lambda;
        if (config.entries[i].lambda == 0.0) {
            r.skipped = true;
        } else {
            // fixed summation order by sample position
            for (std::size_t s = 0; s < n; ++s) {
                const SampleScore& sc = scores[a * n + s];
                r.phi += sc.penalty;
                if (sc.mismatch)
                    ++r.mismatch_count;
                else
                    r.confidence_loss_sum += -sc.penalty;
            }
            ++a;
        }
        report.phi_total += r.phi;
        report.per_augmentation.push_back(std::move(r));
    }
    report.phi_per_sample = report.phi_total / static_cast<double>(n);
    return report;
}

PenaltyConfig load_penalty_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open penalty config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed penalty config " + path + ": " + e.what());
    }
    PenaltyConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.sample_count = j.value("sample_count", std::size_t{1000});
        for (const auto& e : j.at("entries")) cfg.entries.push_back(spec_from_json(e));
    } catch (const json::exception& e) {
        throw ValidationError("penalty config " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_penalty_config(const std::string& path, const PenaltyConfig& config) {
    config.validate();
    json j;
    j["format_version"] = 1;
    j["seed"] = config.seed;
    j["sample_count"] = config.sample_count;
    j["entries"] = json::array();
    for (const auto& e : config.entries) j["entries"].push_back(spec_to_json(e));
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write penalty config: " + path);
    out << j.dump(2) << "\n";
}

PenaltyConfig preset(const std::string& name) {
    // Lambda rows: flip, saturation, crop_resize, sobel, brightness,
    // flip+saturation, erase, vap.
    std::vector<double> lambdas;
    if (name == "table1_row1")
        lambdas = {6, 1, 3, 2, 1, 12, 0, 3};
    else if (name == "table1_row2")
        lambdas = {6, 1, 2, 3, 1, 9, 0, 0};
    else if (name == "table1_row3")
        lambdas = {6, 1, 2, 3, 1, 12, 2, 0};
    else
        throw ValidationError("unknown preset: '" + name + "'");

    PenaltyConfig cfg;
    auto add = [&](AugKind kind, double lambda) {
        AugmentationSpec s;
        s.kind = kind;
        s.lambda = lambda;
        cfg.entries.push_back(std::move(s));
    };
    add(AugKind::Flip, lambdas[0]);
    add(AugKind::RandomSaturation, lambdas[1]);
    add(AugKind::CropResize, lambdas[2]);
    add(AugKind::Sobel, lambdas[3]);
    add(AugKind::Brightness, lambdas[4]);
    AugmentationSpec comp;
    comp.kind = AugKind::Compose;
    comp.lambda = lambdas[5];
    AugmentationSpec f, sat;
    f.kind = AugKind::Flip;
    sat.kind = AugKind::RandomSaturation;
    comp.children = {f, sat};
    cfg.entries.push_back(std::move(comp));
    add(AugKind::RandomErase, lambdas[6]);
    add(AugKind::Vap, lambdas[7]);
    cfg.validate();
    return cfg;
}

std::string report_to_json(const MetricReport& report) {
    json j;
    j["format_version"] = 1;
    j["phi_total"] = report.phi_total;
    j["phi_per_sample"] = report.phi_per_sample;
    j["samples_scored"] = report.samples_scored;
    j["seed"] = report.seed;
    j["truncated"] = report.truncated;
    j["per_augmentation"] = json::array();
    for (const auto& r : report.per_augmentation) {
        json e;
        e["name"] = r.name;
        e["lambda"] = r.lambda;
        e["skipped"] = r.skipped;
        e["phi"] = r.phi;
        e["mismatch_count"] = r.mismatch_count;
        e["confidence_loss_sum"] = r.confidence_loss_sum;
        j["per_augmentation"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

void save_report(const std::string& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write report: " + path);
    out << report_to_json(report);
}

MetricReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open report: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed report " + path + ": " + e.what());
    }
    MetricReport r;
    try {
        r.phi_total = j.at("phi_total").get<double>();
        r.phi_per_sample = j.at("phi_per_sample").get<double>();
        r.samples_scored = j.at("samples_scored").get<std::size_t>();
        r.seed = j.value("seed", std::uint64_t{0});
        r.truncated = j.value("truncated", false);
        if (j.contains("per_augmentation")) {
            for (const auto& e : j["per_augmentation"]) {
                AugmentationResult ar;
                ar.name = e.at("name").get<std::string>();
                ar.lambda = e.value("lambda", 0.0);
                ar.skipped = e.value("skipped", false);
                ar.phi = e.value("phi", 0.0);
                ar.mismatch_count = e.value("mismatch_count", std::size_t{0});
                ar.confidence_loss_sum = e.value("confidence_loss_sum", 0.0);
                r.per_augmentation.push_back(std::move(ar));
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError("report " + path + ": " + e.what());
    }
    return r;
}

} // namespace genaug::metric
