#include "genaug/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "genaug/errors.hpp"

using json = nlohmann::ordered_json;

namespace genaug::eval {

namespace {

int sign(double d) {
    if (d > 0.0) return 1;
    if (d < 0.0) return -1;
    return 0;
}

double log2_(double x) { return std::log(x) / std::log(2.0); }

// All size-k index subsets of {0..n-1}, lexicographic.
std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

struct SignedPair {
    std::size_t i, j;
    int a; // sign of metric difference
    int b; // sign of gap difference
};

} // namespace

double generalization_gap(const ZooEntry& entry) {
    return entry.train_accuracy - entry.test_accuracy;
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("kendall_tau: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("kendall_tau: needs at least 2 values");
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            int sx = sign(x[i] - x[j]);
            int sy = sign(y[i] - y[j]);
            if (sx == 0) ++ties_x;
            if (sy == 0) ++ties_y;
            if (sx * sy > 0) ++concordant;
            if (sx * sy < 0) ++discordant;
        }
    const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    double denom = std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

CmiScore cmi_score(const std::vector<std::string>& axes, const std::vector<ZooEntry>& zoo_in,
                   std::size_t k) {
    if (zoo_in.size() < 2) throw ValidationError("cmi_score: needs at least 2 entries");
    if (k >= axes.size())
        throw ValidationError("cmi_score: conditioning size must be smaller than the axis count");
    for (const auto& e : zoo_in)
        if (e.hparam_values.size() != axes.size())
            throw ValidationError("cmi_score: entry '" + e.model_id + "' axis value count mismatch");

    // canonical order by model_id, independent of input ordering
    std::vector<ZooEntry> zoo = zoo_in;
    std::sort(zoo.begin(), zoo.end(),
              [](const ZooEntry& a, const ZooEntry& b) { return a.model_id < b.model_id; });
    for (std::size_t i = 0; i + 1 < zoo.size(); ++i)
        if (zoo[i].model_id == zoo[i + 1].model_id)
            throw ValidationError("cmi_score: duplicate model_id '" + zoo[i].model_id + "'");

    CmiScore result;
    result.k = k;

    std::vector<SignedPair> pairs;
    for (std::size_t i = 0; i < zoo.size(); ++i)
        for (std::size_t j = i + 1; j < zoo.size(); ++j) {
            int a = sign(zoo[i].metric_value - zoo[j].metric_value);
            int b = sign(generalization_gap(zoo[i]) - generalization_gap(zoo[j]));
            if (a == 0 || b == 0) {
                ++result.ties_discarded;
                continue;
            }
            pairs.push_back({i, j, a, b});
        }
    if (pairs.empty()) throw ValidationError("cmi_score: every pair is tied; nothing to estimate");
    result.n_pairs_used = pairs.size();

    bool any_subset = false;
    double best = 0.0;
    for (const auto& subset : subsets_of_size(axes.size(), k)) {
        // group pairs by the unordered pair of value-tuples on the subset
        std::map<std::string, std::array<double, 4>> groups;
        for (const auto& p : pairs) {
            std::string ti, tj;
            for (std::size_t ax : subset) {
                ti += zoo[p.i].hparam_values[ax] + "\x1f";
                tj += zoo[p.j].hparam_values[ax] + "\x1f";
            }
            std::string key = ti <= tj ? ti + "\x1e" + tj : tj + "\x1e" + ti;
            auto& cell = groups[key];
            cell[static_cast<std::size_t>(p.a > 0) * 2 + static_cast<std::size_t>(p.b > 0)] += 1.0;
        }

        double total = 0.0;
        std::vector<std::array<double, 4>> kept;
        for (auto& [key, cell] : groups) {
            double n = cell[0] + cell[1] + cell[2] + cell[3];
            if (n < 2.0) {
                ++result.groups_dropped;
                continue;
            }
            kept.push_back(cell);
            total += n;
        }
        if (kept.empty()) continue; // subset unusable

        double mi = 0.0, cond_entropy = 0.0;
        for (const auto& cell : kept) {
            double n = cell[0] + cell[1] + cell[2] + cell[3];
            double pg = n / total;
            double pa[2] = {(cell[0] + cell[1]) / n, (cell[2] + cell[3]) / n};
            double pb[2] = {(cell[0] + cell[2]) / n, (cell[1] + cell[3]) / n};
            for (int ai = 0; ai < 2; ++ai)
                for (int bi = 0; bi < 2; ++bi) {
                    double pab = cell[static_cast<std::size_t>(ai) * 2 + static_cast<std::size_t>(bi)] / n;
                    if (pab > 0.0) mi += pg * pab * log2_(pab / (pa[ai] * pb[bi]));
                }
            for (int bi = 0; bi < 2; ++bi)
                if (pb[bi] > 0.0) cond_entropy -= pg * pb[bi] * log2_(pb[bi]);
        }
        if (mi < -1e-12) throw NumericalError("cmi_score: negative plug-in MI");

        double value = 0.0;
        if (cond_entropy > 0.0) value = std::min(1.0, std::max(0.0, mi / cond_entropy));

        std::string name;
        for (std::size_t ax : subset) {
            if (!name.empty()) name += ",";
            name += axes[ax];
        }
        if (name.empty()) name = "(unconditional)";
        result.per_subset.emplace_back(name, value);
        if (!any_subset || value < best) best = value;
        any_subset = true;
    }
    if (!any_subset)
        throw ValidationError("cmi_score: all conditioning groups were dropped (too few pairs)");
    result.score = best;
    return result;
}

std::string evaluate_zoo(const zoo::ZooManifest& manifest,
                         const std::map<std::string, metric::MetricReport>& reports,
                         std::size_t k) {
    manifest.validate();
    std::set<std::string> seen;
    std::vector<ZooEntry> entries;
    std::vector<double> metric_values, gaps;
    for (const auto& me : manifest.entries) {
        if (!seen.insert(me.model_id).second)
            throw ValidationError("evaluate_zoo: duplicate model_id '" + me.model_id + "'");
        auto it = reports.find(me.model_id);
        if (it == reports.end())
            throw ValidationError("evaluate_zoo: missing metric report for model '" + me.model_id + "'");
        ZooEntry e;
        e.model_id = me.model_id;
        for (const auto& ax : manifest.axes) e.hparam_values.push_back(me.hparams.at(ax));
        e.train_accuracy = me.train_accuracy;
        e.test_accuracy = me.test_accuracy;
        // phi_per_sample so models scored on different sample counts compare
        e.metric_value = it->second.phi_per_sample;
        metric_values.push_back(e.metric_value);
        gaps.push_back(generalization_gap(e));
        entries.push_back(std::move(e));
    }

    CmiScore cmi = cmi_score(manifest.axes, entries, k);

    json j;
    j["format_version"] = 1;
    j["cmi"] = json::object();
    j["cmi"]["score"] = cmi.score;
    j["cmi"]["k"] = cmi.k;
    j["cmi"]["per_subset"] = json::object();
    for (const auto& [name, value] : cmi.per_subset) j["cmi"]["per_subset"][name] = value;
    j["cmi"]["groups_dropped"] = cmi.groups_dropped;
    j["kendall_tau"] = kendall_tau(metric_values, gaps);
    j["n_models"] = entries.size();
    j["n_pairs_used"] = cmi.n_pairs_used;
    j["ties_discarded"] = cmi.ties_discarded;
    j["sign_convention"] = "more negative phi predicts a larger generalization gap";
    j["gap_table"] = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& me = manifest.entries[i];
        json row;
        row["model_id"] = me.model_id;
        row["hparams"] = json::object();
        for (const auto& ax : manifest.axes) row["hparams"][ax] = me.hparams.at(ax);
        row["train_accuracy"] = me.train_accuracy;
        row["test_accuracy"] = me.test_accuracy;
        row["gap"] = gaps[i];
        row["phi_total"] = reports.at(me.model_id).phi_total;
        row["phi_per_sample"] = reports.at(me.model_id).phi_per_sample;
        j["gap_table"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

} // namespace genaug::eval
