#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "panelmon/error.hpp"
#include "panelmon/parallel.hpp"
#include "panelmon/svm/smo.hpp"

namespace panelmon::svm {

inline constexpr int kModelFormatVersion = 1;

struct SvmConfig {
    double lambda = 10.0;  // box bound C on the duals
    double epsilon = 0.001;
    Kernel kernel{KernelType::Rbf, 0.0};  // gamma 0 -> 1/m
    std::size_t m = 25;
    SolverOptions solver;

    Kernel effective_kernel() const {
        Kernel k = kernel;
        if (k.type == KernelType::Rbf && k.gamma == 0.0) k.gamma = 1.0 / static_cast<double>(m);
        return k;
    }

    void validate() const {
        if (!(lambda > 0.0)) throw ConfigError("svm: lambda must be positive");
        if (!(epsilon >= 0.0)) throw ConfigError("svm: epsilon must be nonnegative");
        if (m < 2) throw ConfigError("svm: window length m must be at least 2");
        if (kernel.type == KernelType::Rbf && !(kernel.gamma >= 0.0)) throw ConfigError("svm: gamma must be positive");
        if (!(solver.tolerance > 0.0)) throw ConfigError("svm: solver tolerance must be positive");
    }
};

struct TrainingMeta {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
};

struct SolverReport {
    std::size_t iterations = 0;
    double max_violation = 0.0;
    double objective = 0.0;
    bool converged = true;
};

namespace detail {

inline void check_length(std::span<const double> x, std::size_t m) {
    if (x.size() != m)
        throw DataError("svm: input vector has length " + std::to_string(x.size()) + ", model expects " +
                        std::to_string(m));
}

inline Eigen::VectorXd kernel_values(const Kernel& k, const Points& sv, std::span<const double> x) {
    if (sv.rows() == 0) return {};
    Eigen::Map<const Eigen::RowVectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return kernel_row(k, sv, v);
}

inline nlohmann::json points_to_json(const Points& P) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        out.push_back(std::vector<double>(P.row(i).data(), P.row(i).data() + P.cols()));
    return out;
}

inline Points points_from_json(const nlohmann::json& j, std::size_t m) {
    Points P(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        if (row.size() != m) throw DataError("svm model: support vector of wrong length");
        for (std::size_t d = 0; d < m; ++d) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
    }
    return P;
}

inline nlohmann::json header(const char* type, const Kernel& k, std::size_t m, const TrainingMeta& meta) {
    return {{"format", "panelmon-svm"},
            {"version", kModelFormatVersion},
            {"type", type},
            {"kernel", {{"type", to_string(k.type)}, {"gamma", k.gamma}}},
            {"m", m},
            {"meta", {{"n_train", meta.n_train}, {"n_test", meta.n_test}, {"seed", meta.seed}}}};
}

inline void check_header(const nlohmann::json& j, const char* type) {
    if (j.value("format", "") != "panelmon-svm") throw DataError("svm model: not a panelmon model file");
    const int v = j.value("version", -1);
    if (v != kModelFormatVersion)
        throw DataError("svm model: format version " + std::to_string(v) + " cannot be read by this build (expects " +
                        std::to_string(kModelFormatVersion) + ")");
    if (j.value("type", "") != type) throw DataError(std::string("svm model: expected a ") + type + " model");
}

inline TrainingMeta meta_from_json(const nlohmann::json& j) {
    const auto& m = j.at("meta");
    return {m.at("n_train").get<std::size_t>(), m.at("n_test").get<std::size_t>(), m.at("seed").get<std::uint64_t>()};
}

inline Kernel kernel_from_json(const nlohmann::json& j) {
    return {kernel_type_from_string(j.at("kernel").at("type").get<std::string>()),
            j.at("kernel").at("gamma").get<double>()};
}

inline Points subset(const Points& X, const std::vector<std::size_t>& rows) {
    Points S(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) S.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    return S;
}

}  // namespace detail

/// f(x) = sum_i coef_i K(sv_i, x) - rho
struct SvrModel {
    Kernel kernel;
    std::size_t m = 0;
    double lambda = 0.0;
    double epsilon = 0.0;
    Points support_vectors;
    Eigen::VectorXd coef;
    double rho = 0.0;
    TrainingMeta meta;
    SolverReport report;

    double predict(std::span<const double> x) const {
        detail::check_length(x, m);
        if (support_vectors.rows() == 0) return -rho;
        return coef.dot(detail::kernel_values(kernel, support_vectors, x)) - rho;
    }

    nlohmann::json to_json() const {
        auto j = detail::header("svr", kernel, m, meta);
        j["lambda"] = lambda;
        j["epsilon"] = epsilon;
        j["rho"] = rho;
        j["support_vectors"] = detail::points_to_json(support_vectors);
        j["coef"] = std::vector<double>(coef.data(), coef.data() + coef.size());
        return j;
    }

    static SvrModel from_json(const nlohmann::json& j) {
        detail::check_header(j, "svr");
        SvrModel s;
        s.kernel = detail::kernel_from_json(j);
        s.m = j.at("m").get<std::size_t>();
        s.lambda = j.at("lambda").get<double>();
        s.epsilon = j.at("epsilon").get<double>();
        s.rho = j.at("rho").get<double>();
        s.meta = detail::meta_from_json(j);
        s.support_vectors = detail::points_from_json(j.at("support_vectors"), s.m);
        const auto c = j.at("coef").get<std::vector<double>>();
        if (c.size() != static_cast<std::size_t>(s.support_vectors.rows())) throw DataError("svm model: coef size mismatch");
        s.coef = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
        return s;
    }
};

/// One-vs-one classifier. Machine (a, b) votes for a when its decision value
/// is positive; votes tie-break on summed margins, then the lower class.
struct SvcModel {
    struct Machine {
        int positive = 0;
        int negative = 0;
        std::vector<std::size_t> sv;  // rows of support_vectors
        std::vector<double> coef;     // y_i a_i
        double rho = 0.0;
        SolverReport report;
    };

    Kernel kernel;
    std::size_t m = 0;
    double lambda = 0.0;
    std::vector<int> classes;
    Points support_vectors;
    std::vector<Machine> machines;
    TrainingMeta meta;

    std::vector<double> decision_values(std::span<const double> x) const {
        detail::check_length(x, m);
        const Eigen::VectorXd kv = detail::kernel_values(kernel, support_vectors, x);
        std::vector<double> out;
        out.reserve(machines.size());
        for (const auto& mc : machines) {
            double s = -mc.rho;
            for (std::size_t i = 0; i < mc.sv.size(); ++i) s += mc.coef[i] * kv[static_cast<Eigen::Index>(mc.sv[i])];
            out.push_back(s);
        }
        return out;
    }

    int predict(std::span<const double> x) const {
        const auto d = decision_values(x);
        std::map<int, std::pair<int, double>> tally;  // class -> (votes, margin)
        for (int c : classes) tally[c] = {0, 0.0};
        for (std::size_t q = 0; q < machines.size(); ++q) {
            const auto& mc = machines[q];
            const int winner = d[q] > 0 ? mc.positive : mc.negative;
            ++tally[winner].first;
            tally[mc.positive].second += d[q];
            tally[mc.negative].second -= d[q];
        }
        int best = classes.front();
        for (int c : classes) {
            const auto& [v, g] = tally[c];
            const auto& [bv, bg] = tally[best];
            if (v > bv || (v == bv && g > bg)) best = c;
        }
        return best;
    }

    nlohmann::json to_json() const {
        auto j = detail::header("svc", kernel, m, meta);
        j["lambda"] = lambda;
        j["classes"] = classes;
        j["support_vectors"] = detail::points_to_json(support_vectors);
        auto ms = nlohmann::json::array();
        for (const auto& mc : machines)
            ms.push_back({{"positive", mc.positive}, {"negative", mc.negative}, {"sv", mc.sv}, {"coef", mc.coef},
                          {"rho", mc.rho}});
        j["machines"] = ms;
        return j;
    }

    static SvcModel from_json(const nlohmann::json& j) {
        detail::check_header(j, "svc");
        SvcModel s;
        s.kernel = detail::kernel_from_json(j);
        s.m = j.at("m").get<std::size_t>();
        s.lambda = j.at("lambda").get<double>();
        s.classes = j.at("classes").get<std::vector<int>>();
        s.meta = detail::meta_from_json(j);
        s.support_vectors = detail::points_from_json(j.at("support_vectors"), s.m);
        for (const auto& mj : j.at("machines")) {
            Machine mc;
            mc.positive = mj.at("positive").get<int>();
            mc.negative = mj.at("negative").get<int>();
            mc.sv = mj.at("sv").get<std::vector<std::size_t>>();
            mc.coef = mj.at("coef").get<std::vector<double>>();
            mc.rho = mj.at("rho").get<double>();
            if (mc.sv.size() != mc.coef.size()) throw DataError("svm model: machine coef size mismatch");
            for (auto r : mc.sv)
                if (r >= static_cast<std::size_t>(s.support_vectors.rows())) throw DataError("svm model: bad sv index");
            s.machines.push_back(std::move(mc));
        }
        return s;
    }
};

inline SolverReport make_report(const DualSolution& s) {
    return {s.iterations, s.max_violation, s.objective, s.converged};
}

/// Epsilon-insensitive regression; variables (alpha, alpha*) stacked.
inline SvrModel train_svr(const Points& X, std::span<const double> z, const SvmConfig& cfg, TrainingMeta meta = {},
                          std::vector<std::string>* warnings = nullptr) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < 2) throw DataError("svr: at least 2 training instances required");
    if (z.size() != n) throw DataError("svr: label count does not match instance count");
    if (static_cast<std::size_t>(X.cols()) != cfg.m) throw DataError("svr: instance length differs from m");
    DualProblem prob;
    prob.p.resize(2 * n);
    prob.y.resize(2 * n);
    prob.C.assign(2 * n, cfg.lambda);
    for (std::size_t i = 0; i < n; ++i) {
        prob.p[i] = cfg.epsilon - z[i];
        prob.p[i + n] = cfg.epsilon + z[i];
        prob.y[i] = 1;
        prob.y[i + n] = -1;
    }
    const Kernel k = cfg.effective_kernel();
    KernelCache cache(k, X, cfg.solver.cache_bytes);
    const auto sol = solve_dual(prob, cache, cfg.solver);

    SvrModel model;
    model.kernel = k;
    model.m = cfg.m;
    model.lambda = cfg.lambda;
    model.epsilon = cfg.epsilon;
    model.rho = sol.rho;
    model.meta = meta;
    model.report = make_report(sol);
    std::vector<std::size_t> rows;
    std::vector<double> coef;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = sol.alpha[i] - sol.alpha[i + n];
        if (c != 0.0) {
            rows.push_back(i);
            coef.push_back(c);
        }
    }
    model.support_vectors = detail::subset(X, rows);
    model.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    if (!sol.converged && warnings)
        warnings->push_back("svr: solver stopped at max_iterations with KKT violation " +
                            std::to_string(sol.max_violation));
    return model;
}

/// Binary soft-margin machine on rows `idx` of X; +1 for labels equal to `pos`.
inline DualSolution solve_binary(const Points& X, const std::vector<std::size_t>& idx, const std::vector<int>& labels,
                                 int pos, const Kernel& k, double C, const SolverOptions& opt) {
    const Points S = detail::subset(X, idx);
    DualProblem prob;
    const std::size_t n = idx.size();
    prob.p.assign(n, -1.0);
    prob.C.assign(n, C);
    prob.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        prob.y[i] = labels[idx[i]] == pos ? 1 : -1;
    }
    KernelCache cache(k, S, opt.cache_bytes);
    return solve_dual(prob, cache, opt);
}

inline SvcModel train_svc(const Points& X, const std::vector<int>& labels, const SvmConfig& cfg, TrainingMeta meta = {},
                          std::vector<std::string>* warnings = nullptr) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(X.rows());
    if (labels.size() != n) throw DataError("svc: label count does not match instance count");
    if (static_cast<std::size_t>(X.cols()) != cfg.m) throw DataError("svc: instance length differs from m");
    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw DataError("svc: at least 2 classes required in the training set");

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < classes.size(); ++a)
        for (std::size_t b = a + 1; b < classes.size(); ++b) pairs.emplace_back(classes[a], classes[b]);
    const Kernel k = cfg.effective_kernel();
    SolverOptions opt = cfg.solver;
    opt.cache_bytes = std::max<std::size_t>(1, opt.cache_bytes / std::min<std::size_t>(pairs.size(), thread_count()));

    std::vector<std::vector<std::size_t>> members(pairs.size());
    std::vector<DualSolution> sols(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t q) {
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == pairs[q].first || labels[i] == pairs[q].second) members[q].push_back(i);
        sols[q] = solve_binary(X, members[q], labels, pairs[q].first, k, cfg.lambda, opt);
    });

    SvcModel model;
    model.kernel = k;
    model.m = cfg.m;
    model.lambda = cfg.lambda;
    model.classes = classes;
    model.meta = meta;
    std::vector<std::ptrdiff_t> slot(n, -1);
    std::vector<std::size_t> rows;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
        SvcModel::Machine mc;
        mc.positive = pairs[q].first;
        mc.negative = pairs[q].second;
        mc.rho = sols[q].rho;
        mc.report = make_report(sols[q]);
        for (std::size_t i = 0; i < members[q].size(); ++i) {
            const double a = sols[q].alpha[i];
            if (a == 0.0) continue;
            const std::size_t r = members[q][i];
            if (slot[r] < 0) {
                slot[r] = static_cast<std::ptrdiff_t>(rows.size());
                rows.push_back(r);
            }
            mc.sv.push_back(static_cast<std::size_t>(slot[r]));
            mc.coef.push_back(labels[r] == mc.positive ? a : -a);
        }
        if (!sols[q].converged && warnings)
            warnings->push_back("svc: machine " + std::to_string(mc.positive) + "/" + std::to_string(mc.negative) +
                                " stopped at max_iterations with KKT violation " +
                                std::to_string(sols[q].max_violation));
        model.machines.push_back(std::move(mc));
    }
    model.support_vectors = detail::subset(X, rows);
    return model;
}

}  // namespace panelmon::svm
