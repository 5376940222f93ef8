#include "genaug/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "genaug/errors.hpp"
#include "genaug/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace genaug::zoo {

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarSide = 32;

std::vector<char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_number(double v) { return json(v).dump(); }

} // namespace

void Dataset::validate() const {
    if (images.size() != labels.size())
        throw ValidationError("dataset: image/label count mismatch");
    if (num_classes < 2) throw ValidationError("dataset: num_classes must be >= 2");
    for (std::size_t l : labels)
        if (l >= num_classes) throw ValidationError("dataset: label out of range");
}

Dataset load_cifar10_file(const std::string& path) {
    std::vector<char> bytes = read_all(path);
    if (bytes.size() % kCifarRecord != 0)
        throw ValidationError("cifar10 file " + path + ": length " + std::to_string(bytes.size()) +
                              " is not a multiple of " + std::to_string(kCifarRecord) +
                              " (truncated at byte offset " +
                              std::to_string(bytes.size() - bytes.size() % kCifarRecord) + ")");
    Dataset d;
    d.num_classes = 10;
    const std::size_t n = bytes.size() / kCifarRecord;
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t r = 0; r < n; ++r) {
        const unsigned char* rec = p + r * kCifarRecord;
        if (rec[0] >= 10)
            throw ValidationError("cifar10 file " + path + ": record " + std::to_string(r) +
                                  " has label " + std::to_string(rec[0]) + " >= 10");
        d.labels.push_back(rec[0]);
        Image img(kCifarSide, kCifarSide, 3);
        // three channel planes of 1024 row-major bytes: R, G, B
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < kCifarSide; ++y)
                for (std::size_t x = 0; x < kCifarSide; ++x)
                    img.at(y, x, c) = static_cast<double>(rec[1 + c * 1024 + y * kCifarSide + x]) / 255.0;
        d.images.push_back(std::move(img));
    }
    return d;
}

void save_cifar10_file(const std::string& path, const Dataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const Image& img = data.images[r];
        if (img.height != kCifarSide || img.width != kCifarSide || img.channels != 3)
            throw ValidationError("save_cifar10: images must be 32x32x3");
        unsigned char rec[kCifarRecord];
        rec[0] = static_cast<unsigned char>(data.labels[r]);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < kCifarSide; ++y)
                for (std::size_t x = 0; x < kCifarSide; ++x)
                    rec[1 + c * 1024 + y * kCifarSide + x] =
                        static_cast<unsigned char>(std::lround(img.at(y, x, c) * 255.0));
        out.write(reinterpret_cast<const char*>(rec), kCifarRecord);
    }
}

Dataset load_cifar10(const std::string& dir, const std::string& split) {
    std::vector<std::string> files;
    if (split == "train") {
        for (int i = 1; i <= 5; ++i) {
            fs::path p = fs::path(dir) / ("data_batch_" + std::to_string(i) + ".bin");
            if (fs::exists(p)) files.push_back(p.string());
        }
    } else if (split == "test") {
        fs::path p = fs::path(dir) / "test_batch.bin";
        if (fs::exists(p)) files.push_back(p.string());
    } else {
        throw ValidationError("load_cifar10: split must be 'train' or 'test'");
    }
    if (files.empty())
        throw ValidationError("load_cifar10: no batch files for split '" + split + "' in " + dir);
    Dataset d;
    d.num_classes = 10;
    d.split = split;
    for (const auto& f : files) {
        Dataset part = load_cifar10_file(f);
        d.images.insert(d.images.end(), std::make_move_iterator(part.images.begin()),
                        std::make_move_iterator(part.images.end()));
        d.labels.insert(d.labels.end(), part.labels.begin(), part.labels.end());
    }
    return d;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset: " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw ValidationError("dataset " + path + ": missing header line");
    json h;
    try {
        h = json::parse(header_line);
    } catch (const json::exception& e) {
        throw ValidationError("dataset " + path + ": malformed header: " + e.what());
    }
    std::size_t H, W, C, n;
    Dataset d;
    try {
        H = h.at("h").get<std::size_t>();
        W = h.at("w").get<std::size_t>();
        C = h.at("c").get<std::size_t>();
        n = h.at("n").get<std::size_t>();
        d.num_classes = h.at("num_classes").get<std::size_t>();
        d.split = h.value("split", std::string("train"));
    } catch (const json::exception& e) {
        throw ValidationError("dataset " + path + ": header: " + e.what());
    }

    std::vector<char> rest{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::size_t pixel_bytes = n * H * W * C * 4;
    if (rest.size() != pixel_bytes + n)
        throw ValidationError("dataset " + path + ": expected " + std::to_string(pixel_bytes + n) +
                              " payload bytes, found " + std::to_string(rest.size()));
    const unsigned char* p = reinterpret_cast<const unsigned char*>(rest.data());
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> vals(H * W * C);
        for (std::size_t v = 0; v < vals.size(); ++v) {
            const unsigned char* b = p + (i * H * W * C + v) * 4;
            std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                              (static_cast<std::uint32_t>(b[1]) << 8) |
                              (static_cast<std::uint32_t>(b[2]) << 16) |
                              (static_cast<std::uint32_t>(b[3]) << 24);
            float f;
            std::memcpy(&f, &u, 4);
            vals[v] = static_cast<double>(f);
        }
        d.images.emplace_back(H, W, C, std::move(vals));
        d.images.back().validate("dataset " + path);
    }
    for (std::size_t i = 0; i < n; ++i) d.labels.push_back(p[pixel_bytes + i]);
    d.validate();
    return d;
}

void save_dataset(const std::string& path, const Dataset& data) {
    data.validate();
    if (data.size() == 0) throw ValidationError("save_dataset: empty dataset");
    const Image& first = data.images[0];
    json h;
    h["h"] = first.height;
    h["w"] = first.width;
    h["c"] = first.channels;
    h["n"] = data.size();
    h["num_classes"] = data.num_classes;
    h["split"] = data.split;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write dataset: " + path);
    out << h.dump() << "\n";
    for (const Image& img : data.images) {
        if (img.height != first.height || img.width != first.width || img.channels != first.channels)
            throw ValidationError("save_dataset: mixed image shapes");
        for (double v : img.data.data) {
            float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
            out.write(b, 4);
        }
    }
    for (std::size_t l : data.labels) {
        char b = static_cast<char>(l);
        out.write(&b, 1);
    }
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw ValidationError("train config: epochs/batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ValidationError("train config: learning_rate must be >= 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ValidationError("train config: dropout_rate must be in [0,1)");
    if (!(label_noise >= 0.0 && label_noise <= 1.0))
        throw ValidationError("train config: label_noise must be in [0,1]");
    if (dense_units.empty() && conv_channels.empty())
        throw ValidationError("train config: architecture has no layers");
}

namespace {

nn::Model build_model(const TrainConfig& cfg, std::size_t H, std::size_t W, std::size_t C,
                      std::size_t num_classes) {
    nn::Model m;
    m.input_shape = {H, W, C};
    m.num_classes = num_classes;
    m.mean.assign(C, 0.5);
    m.stddev.assign(C, 0.5);

    std::size_t layer_idx = 0;
    auto init_tensor = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
        RngStream rng(mix_seed(cfg.seed, 0xc0de + layer_idx));
        Tensor t = Tensor::zeros(std::move(shape));
        double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : t.data) v = rng.uniform(-scale, scale);
        return t;
    };

    std::vector<std::size_t> shape = {H, W, C};
    for (std::size_t cc : cfg.conv_channels) {
        nn::Layer conv;
        conv.kind = nn::LayerKind::Conv2d;
        conv.in_channels = shape[2];
        conv.out_channels = cc;
        conv.kh = conv.kw = 3;
        conv.stride = 1;
        conv.padding = nn::Padding::Same;
        conv.kernel = init_tensor({cc, shape[2], 3, 3}, shape[2] * 9);
        conv.bias = Tensor::zeros({cc});
        ++layer_idx;
        m.layers.push_back(std::move(conv));
        m.layers.push_back({.kind = nn::LayerKind::Relu});
        shape = nn::layer_output_shape(m.layers[m.layers.size() - 2], shape);
        if (shape[0] >= 2 && shape[1] >= 2) {
            nn::Layer pool;
            pool.kind = nn::LayerKind::MaxPool2d;
            pool.pool_size = pool.pool_stride = 2;
            shape = nn::layer_output_shape(pool, shape);
            m.layers.push_back(std::move(pool));
        }
    }
    m.layers.push_back({.kind = nn::LayerKind::Flatten});
    std::size_t features = shape_product(shape);
    for (std::size_t units : cfg.dense_units) {
        nn::Layer dense;
        dense.kind = nn::LayerKind::Dense;
        dense.in_features = features;
        dense.out_features = units;
        dense.kernel = init_tensor({units, features}, features);
        dense.bias = Tensor::zeros({units});
        ++layer_idx;
        m.layers.push_back(std::move(dense));
        m.layers.push_back({.kind = nn::LayerKind::Relu});
        features = units;
    }
    if (cfg.dropout_rate > 0.0) {
        nn::Layer drop;
        drop.kind = nn::LayerKind::Dropout;
        drop.dropout_rate = cfg.dropout_rate;
        m.layers.push_back(std::move(drop));
    }
    nn::Layer head;
    head.kind = nn::LayerKind::Dense;
    head.in_features = features;
    head.out_features = num_classes;
    head.kernel = init_tensor({num_classes, features}, features);
    head.bias = Tensor::zeros({num_classes});
    ++layer_idx;
    m.layers.push_back(std::move(head));
    m.layers.push_back({.kind = nn::LayerKind::Softmax});

    m.metadata["init"] = "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded";
    m.metadata["seed"] = std::to_string(cfg.seed);
    m.metadata["dropout_rate"] = format_number(cfg.dropout_rate);
    m.validate();
    return m;
}

} // namespace

double evaluate_accuracy(const nn::Model& model, const Dataset& data) {
    data.validate();
    if (data.size() == 0) throw ValidationError("evaluate_accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (nn::argmax(nn::forward(model, data.images[i])) == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train_tiny(const TrainConfig& config, const Dataset& train) {
    config.validate();
    train.validate();
    if (train.size() == 0) throw ValidationError("train_tiny: empty dataset");
    const Image& first = train.images[0];

    Dataset data = train;
    if (config.label_noise > 0.0) {
        RngStream noise_rng(mix_seed(config.seed, 0x7015e));
        for (std::size_t i = 0; i < data.size(); ++i)
            if (noise_rng.next_double() < config.label_noise)
                data.labels[i] = noise_rng.uniform_index(data.num_classes);
    }

    nn::Model model = build_model(config, first.height, first.width, first.channels, data.num_classes);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double last_loss = 0.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        RngStream shuffle_rng(mix_seed(config.seed, 0xe90c + epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, order.size());
            std::vector<Image> batch;
            std::vector<std::size_t> labels;
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(data.images[order[i]]);
                labels.push_back(data.labels[order[i]]);
            }
            double loss = 0.0;
            std::vector<nn::LayerGrads> grads;
            try {
                grads = nn::weight_gradients(model, batch, labels, &loss);
            } catch (const NumericalError& e) {
                throw NumericalError("train_tiny: divergence at epoch " + std::to_string(epoch) +
                                     ": " + e.what());
            }
            if (!std::isfinite(loss))
                throw NumericalError("train_tiny: divergence (non-finite loss) at epoch " +
                                     std::to_string(epoch));
            epoch_loss += loss;
            ++batches;
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                if (!model.layers[li].has_weights()) continue;
                for (std::size_t wi = 0; wi < grads[li].kernel.data.size(); ++wi)
                    model.layers[li].kernel.data[wi] -= config.learning_rate * grads[li].kernel.data[wi];
                for (std::size_t wi = 0; wi < grads[li].bias.data.size(); ++wi)
                    model.layers[li].bias.data[wi] -= config.learning_rate * grads[li].bias.data[wi];
            }
        }
        last_loss = epoch_loss / static_cast<double>(batches);
    }

    TrainResult result;
    result.train_accuracy = evaluate_accuracy(model, data);
    result.final_loss = last_loss;
    result.model = std::move(model);
    return result;
}

Dataset make_toy_dataset(std::size_t n, std::uint64_t seed, const std::string& split) {
    const std::size_t H = 8, W = 8;
    Dataset d;
    d.num_classes = 4;
    d.split = split;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 4;
        const std::size_t shape = cls & 1;    // low-frequency mask
        const std::size_t texture = cls >> 1; // high-frequency pattern
        RngStream rng(mix_seed(mix_seed(seed, split == "test" ? 0x7e57 : 0x7121), i));
        const double jitter = rng.uniform(-0.05, 0.05);
        const std::size_t py = rng.uniform_index(2), px = rng.uniform_index(2);
        Image img(H, W, 3);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                double dy = static_cast<double>(y) - 3.5, dx = static_cast<double>(x) - 3.5;
                double mask = shape == 0 ? (dy * dy + dx * dx <= 6.25 ? 1.0 : 0.0)
                                         : (static_cast<double>(x + y) < 7.5 ? 1.0 : 0.0);
                double tex = texture == 0 ? static_cast<double>((y + py + x + px) % 2)
                                          : static_cast<double>((y + py) % 2);
                for (std::size_t c = 0; c < 3; ++c) {
                    double v = 0.2 + 0.45 * mask + 0.25 * tex + jitter +
                               0.06 * rng.uniform(-1.0, 1.0);
                    v = std::min(1.0, std::max(0.0, v));
                    // keep values exactly f32-representable for the container
                    img.at(y, x, c) = static_cast<double>(static_cast<float>(v));
                }
            }
        d.images.push_back(std::move(img));
        d.labels.push_back(cls);
    }
    return d;
}

void ZooManifest::validate() const {
    if (axes.empty()) throw ValidationError("zoo manifest: no hyperparameter axes");
    std::vector<std::string> ids;
    for (const auto& e : entries) {
        for (const auto& ax : axes)
            if (!e.hparams.count(ax))
                throw ValidationError("zoo manifest: entry '" + e.model_id +
                                      "' missing value for axis '" + ax + "'");
        if (!(e.train_accuracy >= 0.0 && e.train_accuracy <= 1.0) ||
            !(e.test_accuracy >= 0.0 && e.test_accuracy <= 1.0))
            throw ValidationError("zoo manifest: entry '" + e.model_id + "' accuracy outside [0,1]");
        ids.push_back(e.model_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ValidationError("zoo manifest: duplicate model_id");
}

ZooManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open zoo manifest: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed zoo manifest " + path + ": " + e.what());
    }
    ZooManifest m;
    try {
        m.axes = j.at("axes").get<std::vector<std::string>>();
        for (const auto& ej : j.at("entries")) {
            ZooManifest::Entry e;
            e.model_id = ej.at("model_id").get<std::string>();
            e.model_path = ej.at("path").get<std::string>();
            for (auto it = ej.at("hparams").begin(); it != ej.at("hparams").end(); ++it)
                e.hparams[it.key()] =
                    it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
            e.train_accuracy = ej.at("train_acc").get<double>();
            e.test_accuracy = ej.at("test_acc").get<double>();
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ValidationError("zoo manifest " + path + ": " + e.what());
    }
    m.validate();
    return m;
}

void save_manifest(const std::string& path, const ZooManifest& manifest) {
    manifest.validate();
    json j;
    j["format_version"] = 1;
    j["axes"] = manifest.axes;
    j["entries"] = json::array();
    for (const auto& e : manifest.entries) {
        json ej;
        ej["model_id"] = e.model_id;
        ej["path"] = e.model_path;
        ej["hparams"] = json::object();
        for (const auto& ax : manifest.axes) ej["hparams"][ax] = e.hparams.at(ax);
        ej["train_acc"] = e.train_accuracy;
        ej["test_acc"] = e.test_accuracy;
        j["entries"].push_back(std::move(ej));
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write zoo manifest: " + path);
    out << j.dump(2) << "\n";
}

ZooManifest generate_synthetic_zoo(const ZooGrid& grid, const Dataset& train, const Dataset& test,
                                   const std::string& out_dir) {
    if (grid.learning_rates.empty() || grid.batch_sizes.empty() || grid.label_noises.empty() ||
        grid.seeds.empty())
        throw ValidationError("zoo grid: every axis needs at least one value");
    fs::create_directories(fs::path(out_dir) / "models");

    ZooManifest manifest;
    manifest.axes = {"learning_rate", "batch_size", "label_noise", "seed"};
    for (double lr : grid.learning_rates)
        for (std::size_t bs : grid.batch_sizes)
            for (double noise : grid.label_noises)
                for (std::uint64_t seed : grid.seeds) {
                    TrainConfig cfg;
                    cfg.epochs = grid.epochs;
                    cfg.batch_size = bs;
                    cfg.learning_rate = lr;
                    cfg.label_noise = noise;
                    cfg.seed = mix_seed(grid.base_seed, seed);
                    TrainResult res = train_tiny(cfg, train);

                    std::ostringstream id;
                    id << "lr" << format_number(lr) << "_bs" << bs << "_noise"
                       << format_number(noise) << "_s" << seed;
                    std::string rel = "models/" + id.str() + ".json";
                    res.model.metadata["learning_rate"] = format_number(lr);
                    res.model.metadata["batch_size"] = std::to_string(bs);
                    res.model.metadata["label_noise"] = format_number(noise);
                    nn::save_model((fs::path(out_dir) / rel).string(), res.model);

                    ZooManifest::Entry e;
                    e.model_id = id.str();
                    e.model_path = rel;
                    e.hparams["learning_rate"] = format_number(lr);
                    e.hparams["batch_size"] = std::to_string(bs);
                    e.hparams["label_noise"] = format_number(noise);
                    e.hparams["seed"] = std::to_string(seed);
                    e.train_accuracy = res.train_accuracy;
                    e.test_accuracy = evaluate_accuracy(res.model, test);
                    manifest.entries.push_back(std::move(e));
                }
    save_manifest((fs::path(out_dir) / "zoo.json").string(), manifest);
    return manifest;
}

} // namespace genaug::zoo
