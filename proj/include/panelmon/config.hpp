#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "panelmon/csv.hpp"
#include "panelmon/cusum.hpp"
#include "panelmon/error.hpp"
#include "panelmon/fixture.hpp"
#include "panelmon/panel.hpp"
#include "panelmon/selection.hpp"
#include "panelmon/svm/model.hpp"

namespace panelmon {

enum class PatternEstimator { Boxcar, Knn };

struct PipelineConfig {
    std::string preset = "none";
    ModelMode mode = ModelMode::Multiplicative;
    std::size_t smoothing_window = 1;
    std::size_t level_window = 1;
    PatternEstimator pattern = PatternEstimator::Knn;
    std::size_t pattern_k = 200;       // K-NN support
    std::size_t pattern_window = 61;   // boxcar width
    ClusterMethod clustering = ClusterMethod::KMeans;
    bool robust_score = true;
    std::size_t min_obs = 30;
    double iqr_multiple = 1.0;
    std::optional<double> delta_min = 1.5;  // nullopt -> estimated
    std::optional<double> k = 0.75;         // nullopt -> allowance search
    std::vector<double> k_grid{0.25, 0.5, 0.75, 1.0};
    double shift_quantile = 0.5;
    double arl0 = 200.0;
    double rho = 0.0;
    std::size_t replications = 2000;
    std::size_t length = 0;
    std::size_t block_length = 27;
    std::size_t gap_max = 0;  // 0 -> reset at every gap
    std::optional<std::size_t> m = 25;  // nullopt -> quantile of run lengths
    double window_quantile = 0.7;
    std::size_t svm_instances = 63000;
    double svm_train_fraction = 0.8;
    double svm_half_normal_scale = 2.0;
    svm::SvmConfig svm;
    bool restart_on_alert = true;
    std::uint64_t seed = 1;
    std::vector<double> bench_targets{100, 200, 400};
    std::size_t bench_replications = 2000;
    std::size_t bench_block_length = 50;
    double bench_k = 0.75;

    GapPolicy gap_policy() const {
        return gap_max == 0 ? GapPolicy::reset_always() : GapPolicy::propagate_up_to(gap_max);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string prefix(const std::string& key) { return key.empty() ? "" : key + ": "; }

inline double to_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    if (!csv::parse_double(v, x) || !std::isfinite(x)) throw ConfigError(prefix(key) + "expected a number, got '" + v + "'");
    return x;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(prefix(key) + "expected a nonnegative integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(prefix(key) + "expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& cell : csv::split(v)) out.push_back(to_real(key, trim(cell)));
    if (out.empty()) throw ConfigError(prefix(key) + "expected a comma-separated list");
    return out;
}

inline std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::format(v[i]);
    return s;
}

struct Field {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <class T>
Field unsigned_field(T PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& v) { c.*member = static_cast<T>(to_unsigned("", v)); },
            [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

inline Field real_field(double PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& v) { c.*member = to_real("", v); },
            [member](const PipelineConfig& c) { return csv::format(c.*member); }};
}

inline const std::map<std::string, Field>& schema() {
    static const std::map<std::string, Field> fields = {
        {"mode",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "multiplicative") c.mode = ModelMode::Multiplicative;
              else if (v == "additive") c.mode = ModelMode::Additive;
              else throw ConfigError("expected multiplicative or additive, got '" + v + "'");
          },
          [](const PipelineConfig& c) {
              return std::string(c.mode == ModelMode::Multiplicative ? "multiplicative" : "additive");
          }}},
        {"smoothing_window", unsigned_field(&PipelineConfig::smoothing_window)},
        {"level_window", unsigned_field(&PipelineConfig::level_window)},
        {"pattern",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "knn") c.pattern = PatternEstimator::Knn;
              else if (v == "boxcar") c.pattern = PatternEstimator::Boxcar;
              else throw ConfigError("expected knn or boxcar, got '" + v + "'");
          },
          [](const PipelineConfig& c) { return std::string(c.pattern == PatternEstimator::Knn ? "knn" : "boxcar"); }}},
        {"pattern_k", unsigned_field(&PipelineConfig::pattern_k)},
        {"pattern_window", unsigned_field(&PipelineConfig::pattern_window)},
        {"clustering",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "kmeans") c.clustering = ClusterMethod::KMeans;
              else if (v == "em") c.clustering = ClusterMethod::GaussianMixtureEM;
              else throw ConfigError("expected kmeans or em, got '" + v + "'");
          },
          [](const PipelineConfig& c) { return std::string(c.clustering == ClusterMethod::KMeans ? "kmeans" : "em"); }}},
        {"robust_score",
         {[](PipelineConfig& c, const std::string& v) { c.robust_score = to_bool("", v); },
          [](const PipelineConfig& c) { return std::string(c.robust_score ? "true" : "false"); }}},
        {"min_obs", unsigned_field(&PipelineConfig::min_obs)},
        {"iqr_multiple", real_field(&PipelineConfig::iqr_multiple)},
        {"delta_min",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "auto") c.delta_min.reset();
              else c.delta_min = to_real("", v);
          },
          [](const PipelineConfig& c) { return c.delta_min ? csv::format(*c.delta_min) : std::string("auto"); }}},
        {"k",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "auto") c.k.reset();
              else c.k = to_real("", v);
          },
          [](const PipelineConfig& c) { return c.k ? csv::format(*c.k) : std::string("auto"); }}},
        {"k_grid",
         {[](PipelineConfig& c, const std::string& v) { c.k_grid = to_list("", v); },
          [](const PipelineConfig& c) { return list_str(c.k_grid); }}},
        {"shift_quantile", real_field(&PipelineConfig::shift_quantile)},
        {"arl0", real_field(&PipelineConfig::arl0)},
        {"rho", real_field(&PipelineConfig::rho)},
        {"replications", unsigned_field(&PipelineConfig::replications)},
        {"length", unsigned_field(&PipelineConfig::length)},
        {"block_length", unsigned_field(&PipelineConfig::block_length)},
        {"gap_max", unsigned_field(&PipelineConfig::gap_max)},
        {"m",
         {[](PipelineConfig& c, const std::string& v) {
              if (v == "auto") c.m.reset();
              else c.m = static_cast<std::size_t>(to_unsigned("", v));
          },
          [](const PipelineConfig& c) { return c.m ? std::to_string(*c.m) : std::string("auto"); }}},
        {"window_quantile", real_field(&PipelineConfig::window_quantile)},
        {"svm_instances", unsigned_field(&PipelineConfig::svm_instances)},
        {"svm_train_fraction", real_field(&PipelineConfig::svm_train_fraction)},
        {"svm_half_normal_scale", real_field(&PipelineConfig::svm_half_normal_scale)},
        {"svm_lambda",
         {[](PipelineConfig& c, const std::string& v) { c.svm.lambda = to_real("", v); },
          [](const PipelineConfig& c) { return csv::format(c.svm.lambda); }}},
        {"svm_epsilon",
         {[](PipelineConfig& c, const std::string& v) { c.svm.epsilon = to_real("", v); },
          [](const PipelineConfig& c) { return csv::format(c.svm.epsilon); }}},
        {"svm_kernel",
         {[](PipelineConfig& c, const std::string& v) { c.svm.kernel.type = svm::kernel_type_from_string(v); },
          [](const PipelineConfig& c) { return std::string(svm::to_string(c.svm.kernel.type)); }}},
        {"svm_gamma",
         {[](PipelineConfig& c, const std::string& v) { c.svm.kernel.gamma = to_real("", v); },
          [](const PipelineConfig& c) { return csv::format(c.svm.kernel.gamma); }}},
        {"svm_tolerance",
         {[](PipelineConfig& c, const std::string& v) { c.svm.solver.tolerance = to_real("", v); },
          [](const PipelineConfig& c) { return csv::format(c.svm.solver.tolerance); }}},
        {"svm_max_iterations",
         {[](PipelineConfig& c, const std::string& v) { c.svm.solver.max_iterations = to_unsigned("", v); },
          [](const PipelineConfig& c) { return std::to_string(c.svm.solver.max_iterations); }}},
        {"svm_cache_mb",
         {[](PipelineConfig& c, const std::string& v) { c.svm.solver.cache_bytes = to_unsigned("", v) << 20; },
          [](const PipelineConfig& c) { return std::to_string(c.svm.solver.cache_bytes >> 20); }}},
        {"restart_on_alert",
         {[](PipelineConfig& c, const std::string& v) { c.restart_on_alert = to_bool("", v); },
          [](const PipelineConfig& c) { return std::string(c.restart_on_alert ? "true" : "false"); }}},
        {"seed",
         {[](PipelineConfig& c, const std::string& v) { c.seed = to_unsigned("", v); },
          [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
        {"bench_targets",
         {[](PipelineConfig& c, const std::string& v) { c.bench_targets = to_list("", v); },
          [](const PipelineConfig& c) { return list_str(c.bench_targets); }}},
        {"bench_replications", unsigned_field(&PipelineConfig::bench_replications)},
        {"bench_block_length", unsigned_field(&PipelineConfig::bench_block_length)},
        {"bench_k", real_field(&PipelineConfig::bench_k)},
    };
    return fields;
}

}  // namespace detail

/// Named presets. "sunspot" pins the sunspot-network settings.
inline PipelineConfig preset_config(const std::string& name) {
    PipelineConfig c;
    c.preset = name;
    if (name == "none") return c;
    if (name == "sunspot") {
        c.mode = ModelMode::Multiplicative;
        c.smoothing_window = 27;
        c.level_window = 240;
        c.pattern = PatternEstimator::Knn;
        c.pattern_k = 200;
        c.clustering = ClusterMethod::KMeans;
        c.iqr_multiple = 1.0;
        c.delta_min = 1.5;
        c.k = 0.75;
        c.arl0 = 200.0;
        c.block_length = 27;
        c.gap_max = 27;
        c.m = 25;
        c.svm.lambda = 10.0;
        c.svm.epsilon = 0.001;
        c.svm.kernel = {svm::KernelType::Rbf, 0.0};
        return c;
    }
    throw ConfigError("unknown preset '" + name + "' (available: none, sunspot)");
}

inline void validate(const PipelineConfig& c) {
    if (c.smoothing_window < 1 || c.level_window < 1) throw ConfigError("windows must be at least 1");
    if (c.pattern == PatternEstimator::Knn && c.pattern_k < 2) throw ConfigError("pattern_k must be at least 2");
    if (c.pattern == PatternEstimator::Boxcar && c.pattern_window < 1) throw ConfigError("pattern_window must be >= 1");
    if (!(c.iqr_multiple > 0.0)) throw ConfigError("iqr_multiple must be positive");
    if (c.delta_min && !(*c.delta_min > 0.0)) throw ConfigError("delta_min must be positive or auto");
    if (c.k && !(*c.k > 0.0)) throw ConfigError("k must be positive or auto");
    for (double k : c.k_grid)
        if (!(k > 0.0)) throw ConfigError("k_grid entries must be positive");
    if (!(c.shift_quantile > 0.0 && c.shift_quantile < 1.0)) throw ConfigError("shift_quantile must lie in (0, 1)");
    if (!(c.arl0 > 1.0)) throw ConfigError("arl0 must exceed 1");
    if (c.rho < 0.0) throw ConfigError("rho must be nonnegative");
    if (c.replications < 1) throw ConfigError("replications must be at least 1");
    if (c.block_length < 1) throw ConfigError("block_length must be at least 1");
    if (c.m && *c.m < 2) throw ConfigError("m must be at least 2 or auto");
    if (!(c.window_quantile > 0.0 && c.window_quantile <= 1.0)) throw ConfigError("window_quantile must lie in (0, 1]");
    if (!(c.svm_train_fraction > 0.0 && c.svm_train_fraction < 1.0))
        throw ConfigError("svm_train_fraction must lie in (0, 1)");
    if (!(c.svm_half_normal_scale >= 0.0)) throw ConfigError("svm_half_normal_scale must be nonnegative");
    if (c.svm_instances < 10) throw ConfigError("svm_instances must be at least 10");
    auto s = c.svm;
    s.m = c.m.value_or(25);
    s.validate();
    if (c.bench_targets.empty()) throw ConfigError("bench_targets must not be empty");
    if (!(c.bench_k > 0.0)) throw ConfigError("bench_k must be positive");
}

/// Parses `key = value` lines ('#' starts a comment). A `preset` line is
/// applied first wherever it appears; other keys override it. Unknown or
/// repeated keys are rejected.
inline PipelineConfig parse_config(std::istream& in, const std::string& name = "<config>") {
    std::vector<std::tuple<std::size_t, std::string, std::string>> entries;
    std::string line, preset = "none";
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(name + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
        if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
            throw ConfigError(name + ":" + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                              std::to_string(it->second) + ")");
        if (key == "preset") preset = value;
        else entries.emplace_back(line_no, key, value);
    }
    PipelineConfig c = preset_config(preset);
    const auto& fields = detail::schema();
    for (const auto& [ln, key, value] : entries) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError(name + ":" + std::to_string(ln) + ": unknown key '" + key + "'");
        try {
            it->second.set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ":" + std::to_string(ln) + ": " + key + ": " + e.what());
        }
    }
    validate(c);
    return c;
}

inline PipelineConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline PipelineConfig load_config(const std::string& path) {
    auto in = csv::open_in(path);
    return parse_config(in, path);
}

/// Every key, in schema order, so that parse_config(write_config(c)) == c.
inline void write_config(std::ostream& out, const PipelineConfig& c) {
    out << "preset = " << c.preset << '\n';
    for (const auto& [key, f] : detail::schema()) out << key << " = " << f.get(c) << '\n';
}

/// Fixture spec in the same `key = value` format. `plant = process, form,
/// delta, onset` may repeat; every other key appears at most once.
inline FixtureSpec parse_fixture_spec(std::istream& in, const std::string& name = "<spec>") {
    FixtureSpec f;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no) + ": ";
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = detail::trim(t.substr(0, eq)), v = detail::trim(t.substr(eq + 1));
        if (key != "plant")
            if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
                throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            if (key == "n_stable") f.n_stable = detail::to_unsigned(key, v);
            else if (key == "n_unstable") f.n_unstable = detail::to_unsigned(key, v);
            else if (key == "length") f.length = detail::to_unsigned(key, v);
            else if (key == "sigma_stable") f.sigma_stable = detail::to_real(key, v);
            else if (key == "sigma_unstable") f.sigma_unstable = detail::to_real(key, v);
            else if (key == "seed") f.seed = detail::to_unsigned(key, v);
            else if (key == "unstable_jumps") f.unstable_jumps = detail::to_bool(key, v);
            else if (key == "missing_fraction") f.missing_fraction = detail::to_real(key, v);
            else if (key == "plant") {
                const auto cells = csv::split(v);
                if (cells.size() != 4) throw ConfigError("plant: expected process, form, delta, onset");
                PlantedShift p;
                p.process = detail::to_unsigned(key, detail::trim(cells[0]));
                p.shift.form = shift_form_from_string(detail::trim(cells[1]));
                p.shift.delta = detail::to_real(key, detail::trim(cells[2]));
                p.shift.onset = detail::to_unsigned(key, detail::trim(cells[3]));
                f.planted.push_back(p);
            } else {
                throw ConfigError("unknown key '" + key + "'");
            }
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    f.validate();
    return f;
}

inline FixtureSpec load_fixture_spec(const std::string& path) {
    auto in = csv::open_in(path);
    return parse_fixture_spec(in, path);
}

}  // namespace panelmon
