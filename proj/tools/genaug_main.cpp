#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genaug/augment.hpp"
#include "genaug/errors.hpp"
#include "genaug/eval.hpp"
#include "genaug/image_io.hpp"
#include "genaug/metric.hpp"
#include "genaug/nn.hpp"
#include "genaug/perturb.hpp"
#include "genaug/zoo.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace genaug;

namespace {

unsigned resolve_threads(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("GENAUG_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

AugmentationSpec spec_from_op(const std::string& op,
                              const std::map<std::string, double>& params) {
    AugmentationSpec spec;
    if (op.find('+') != std::string::npos) {
        spec.kind = AugKind::Compose;
        std::size_t start = 0;
        while (start <= op.size()) {
            std::size_t pos = op.find('+', start);
            std::string part = op.substr(start, pos == std::string::npos ? pos : pos - start);
            AugmentationSpec child;
            child.kind = aug_kind_from_name(part);
            spec.children.push_back(child);
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
    } else {
        spec.kind = aug_kind_from_name(op);
    }
    for (const auto& [k, v] : params) {
        if (k == "fraction") spec.params.crop_fraction = v;
        else if (k == "delta") spec.params.brightness_delta = v;
        else if (k == "lo") spec.params.saturation_lo = v;
        else if (k == "hi") spec.params.saturation_hi = v;
        else if (k == "area_lo") spec.params.erase_area_lo = v;
        else if (k == "area_hi") spec.params.erase_area_hi = v;
        else if (k == "aspect_lo") spec.params.erase_aspect_lo = v;
        else if (k == "aspect_hi") spec.params.erase_aspect_hi = v;
        else if (k == "epsilon") spec.params.vap.epsilon = v;
        else if (k == "xi") spec.params.vap.xi = v;
        else if (k == "iterations") spec.params.vap.iterations = static_cast<int>(v);
        else throw ValidationError("unknown --param key: '" + k + "'");
    }
    spec.validate();
    return spec;
}

// Echo the random draws an augmentation will consume, using a clone of the
// stream (same order as the implementation).
void print_draws(const AugmentationSpec& spec, const Image& img, RngStream rng) {
    switch (spec.kind) {
        case AugKind::RandomSaturation:
            std::cout << "  saturation factor s = "
                      << rng.uniform(spec.params.saturation_lo, spec.params.saturation_hi) << "\n";
            break;
        case AugKind::RandomErase: {
            double area = rng.uniform(spec.params.erase_area_lo, spec.params.erase_area_hi);
            double aspect = rng.uniform(spec.params.erase_aspect_lo, spec.params.erase_aspect_hi);
            double pixels = area * static_cast<double>(img.height * img.width);
            std::size_t rh = std::min<std::size_t>(
                static_cast<std::size_t>(std::ceil(std::sqrt(pixels * aspect))), img.height);
            std::size_t rw = std::min<std::size_t>(
                static_cast<std::size_t>(std::ceil(std::sqrt(pixels / aspect))), img.width);
            std::size_t top = rng.uniform_index(img.height - rh + 1);
            std::size_t left = rng.uniform_index(img.width - rw + 1);
            std::cout << "  erase rect " << rh << "x" << rw << " at (" << top << "," << left
                      << "), area=" << area << ", aspect=" << aspect << "\n";
            break;
        }
        case AugKind::Compose:
            for (const auto& child : spec.children) print_draws(child, img, rng);
            break;
        default:
            break;
    }
}

int cmd_augment(const std::string& in_path, const std::string& op, std::uint64_t seed,
                const std::vector<std::string>& raw_params, std::size_t index,
                const std::string& model_path, const std::string& out_path) {
    std::map<std::string, double> params;
    for (const auto& p : raw_params) {
        std::size_t eq = p.find('=');
        if (eq == std::string::npos) throw ValidationError("--param expects key=value: '" + p + "'");
        params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
    }
    AugmentationSpec spec = spec_from_op(op, params);

    Image img;
    if (in_path.size() >= 4 && in_path.substr(in_path.size() - 4) == ".ppm") {
        img = read_ppm(in_path);
    } else {
        zoo::Dataset data = zoo::load_dataset(in_path);
        if (index >= data.size())
            throw ValidationError("--index " + std::to_string(index) + " out of range (dataset has " +
                                  std::to_string(data.size()) + " images)");
        img = data.images[index];
    }

    nn::Model model;
    const nn::Model* model_ptr = nullptr;
    if (!model_path.empty()) {
        model = nn::load_model(model_path);
        model_ptr = &model;
    }

    RngStream rng(seed);
    std::cout << "op " << spec.name() << ", seed " << seed << "\n";
    print_draws(spec, img, rng);
    Image out = apply(spec, img, rng, model_ptr);
    write_ppm(out_path, out);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path,
              const std::string& config_path, const std::string& preset_name,
              const std::string& out_path, unsigned threads) {
    metric::PenaltyConfig config;
    if (!preset_name.empty())
        config = metric::preset(preset_name);
    else if (!config_path.empty())
        config = metric::load_penalty_config(config_path);
    else
        throw ValidationError("score: provide --config or --preset");

    nn::Model model = nn::load_model(model_path);
    zoo::Dataset data = fs::is_directory(data_path) ? zoo::load_cifar10(data_path, "train")
                                                    : zoo::load_dataset(data_path);

    metric::MetricReport report = metric::score_model(model, data, config, threads);
    metric::save_report(out_path, report);
    if (report.truncated)
        std::cout << "note: sample_count " << config.sample_count << " exceeds dataset size "
                  << data.size() << "; scored the whole dataset\n";
    std::cout << "phi_total " << report.phi_total << " over " << report.samples_scored
              << " samples -> " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& zoo_path, const std::string& reports_dir, std::size_t k,
             const std::string& out_path) {
    zoo::ZooManifest manifest = zoo::load_manifest(zoo_path);
    std::map<std::string, metric::MetricReport> reports;
    for (const auto& e : manifest.entries) {
        fs::path rp = fs::path(reports_dir) / (e.model_id + ".json");
        if (!fs::exists(rp))
            throw ValidationError("missing metric report for model '" + e.model_id + "' (" +
                                  rp.string() + ")");
        reports[e.model_id] = metric::load_report(rp.string());
    }
    std::string report = eval::evaluate_zoo(manifest, reports, k);
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write report: " + out_path);
    out << report;
    std::cout << "evaluated " << manifest.entries.size() << " models -> " << out_path << "\n";
    return 0;
}

int cmd_zoo_gen(const std::string& out_dir, const std::string& grid_path, std::uint64_t seed) {
    zoo::ZooGrid grid;
    grid.base_seed = seed;
    std::size_t train_n = 256, test_n = 128;
    if (!grid_path.empty()) {
        std::ifstream in(grid_path);
        if (!in) throw ValidationError("cannot open grid file: " + grid_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ValidationError("malformed grid file: " + std::string(e.what()));
        }
        if (j.contains("learning_rates")) grid.learning_rates = j["learning_rates"].get<std::vector<double>>();
        if (j.contains("batch_sizes")) grid.batch_sizes = j["batch_sizes"].get<std::vector<std::size_t>>();
        if (j.contains("label_noises")) grid.label_noises = j["label_noises"].get<std::vector<double>>();
        if (j.contains("seeds")) grid.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("epochs")) grid.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("train_samples")) train_n = j["train_samples"].get<std::size_t>();
        if (j.contains("test_samples")) test_n = j["test_samples"].get<std::size_t>();
    }

    fs::create_directories(out_dir);
    zoo::Dataset train = zoo::make_toy_dataset(train_n, mix_seed(seed, 0xda7a), "train");
    zoo::Dataset test = zoo::make_toy_dataset(test_n, mix_seed(seed, 0xda7a), "test");
    zoo::save_dataset((fs::path(out_dir) / "train.ds").string(), train);
    zoo::save_dataset((fs::path(out_dir) / "test.ds").string(), test);

    zoo::ZooManifest manifest = zoo::generate_synthetic_zoo(grid, train, test, out_dir);
    std::cout << "generated " << manifest.entries.size() << " models in " << out_dir << "\n";
    for (const auto& e : manifest.entries)
        std::cout << "  " << e.model_id << ": train_acc " << e.train_accuracy << ", test_acc "
                  << e.test_accuracy << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalization measurement via augmentation robustness"};
    app.require_subcommand(1);

    // augment
    std::string aug_in, aug_op, aug_out, aug_model;
    std::uint64_t aug_seed = 0;
    std::vector<std::string> aug_params;
    std::size_t aug_index = 0;
    auto* augment = app.add_subcommand("augment", "Apply one augmentation to an image");
    augment->add_option("--in", aug_in, "Input image (.ppm) or native dataset file")->required();
    augment->add_option("--op", aug_op, "Augmentation kind (flip, saturation, crop_resize, brightness, erase, sobel, vap, or a+b composition)")->required();
    augment->add_option("--seed", aug_seed, "RNG seed");
    augment->add_option("--param", aug_params, "key=value parameter overrides");
    augment->add_option("--index", aug_index, "Image index when --in is a dataset");
    augment->add_option("--model", aug_model, "Model manifest (required for vap)");
    augment->add_option("--out", aug_out, "Output image (.ppm)")->required();

    // score
    std::string score_model_path, score_data, score_config, score_preset, score_out;
    unsigned score_threads = 0;
    auto* score = app.add_subcommand("score", "Score one model (accumulated penalty phi)");
    score->add_option("--model", score_model_path, "Model manifest")->required();
    score->add_option("--data", score_data, "Native dataset file, or a CIFAR-10 batch directory")->required();
    score->add_option("--config", score_config, "Penalty config JSON");
    score->add_option("--preset", score_preset, "Built-in preset (table1_row1..3)");
    score->add_option("--out", score_out, "Report JSON path")->required();
    score->add_option("--threads", score_threads, "Worker threads (default: GENAUG_THREADS or 1)");

    // eval
    std::string eval_zoo, eval_reports, eval_out;
    std::size_t eval_k = 2;
    auto* evalc = app.add_subcommand("eval", "Evaluate a metric across a zoo (CMI score)");
    evalc->add_option("--zoo", eval_zoo, "Zoo manifest JSON")->required();
    evalc->add_option("--reports", eval_reports, "Directory of <model_id>.json metric reports")->required();
    evalc->add_option("--k", eval_k, "Conditioning subset size");
    evalc->add_option("--out", eval_out, "Evaluation report path")->required();

    // zoo-gen
    std::string gen_out, gen_grid;
    std::uint64_t gen_seed = 0;
    auto* zoogen = app.add_subcommand("zoo-gen", "Generate a synthetic model zoo");
    zoogen->add_option("--out", gen_out, "Output directory")->required();
    zoogen->add_option("--grid", gen_grid, "Grid JSON file");
    zoogen->add_option("--seed", gen_seed, "Base seed");

    try {
        app.parse(argc, argv);
        if (augment->parsed())
            return cmd_augment(aug_in, aug_op, aug_seed, aug_params, aug_index, aug_model, aug_out);
        if (score->parsed())
            return cmd_score(score_model_path, score_data, score_config, score_preset, score_out,
                             resolve_threads(score_threads));
        if (evalc->parsed()) return cmd_eval(eval_zoo, eval_reports, eval_k, eval_out);
        if (zoogen->parsed()) return cmd_zoo_gen(gen_out, gen_grid, gen_seed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
