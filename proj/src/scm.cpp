#include "ccl/scm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "ccl/error.hpp"

namespace ccl::scm {

int Scm::observed_target() const {
    auto it = std::find(observed_idx.begin(), observed_idx.end(), target);
    if (it == observed_idx.end()) throw std::invalid_argument("Scm: target is not observed");
    return static_cast<int>(it - observed_idx.begin());
}

void Scm::validate() const {
    const auto n = static_cast<std::size_t>(n_total);
    if (n_total < 1) throw std::invalid_argument("Scm: n_total must be >= 1");
    if (auto_coeff.size() != n || cross.size() != n || noise_std.size() != n)
        throw std::invalid_argument("Scm: per-variable arrays must have n_total entries");
    if (tau_max < 0) throw std::invalid_argument("Scm: tau_max must be >= 0");
    for (int j = 0; j < n_total; ++j) {
        if (auto_coeff[static_cast<std::size_t>(j)] != 0.0 && tau_max < 1)
            throw std::invalid_argument("Scm: auto term needs tau_max >= 1");
        if (noise_std[static_cast<std::size_t>(j)] < 0.0) throw std::invalid_argument("Scm: negative noise std");
        for (const Mechanism& m : cross[static_cast<std::size_t>(j)]) {
            if (m.source < 0 || m.source >= n_total) throw std::invalid_argument("Scm: mechanism source out of range");
            if (m.lag < 0 || m.lag > tau_max) throw std::invalid_argument("Scm: mechanism lag out of range");
            if (m.lag == 0 && m.source == j) throw std::invalid_argument("Scm: contemporaneous self mechanism");
        }
    }
    if (!std::is_sorted(observed_idx.begin(), observed_idx.end()) ||
        std::adjacent_find(observed_idx.begin(), observed_idx.end()) != observed_idx.end())
        throw std::invalid_argument("Scm: observed_idx must be strictly ascending");
    for (int o : observed_idx)
        if (o < 0 || o >= n_total) throw std::invalid_argument("Scm: observed index out of range");
    observed_target();
}

std::vector<int> topological_order(const Scm& scm) {
    const auto n = static_cast<std::size_t>(scm.n_total);
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (const Mechanism& m : scm.cross[j]) {
            if (m.lag != 0) continue;
            children[static_cast<std::size_t>(m.source)].push_back(static_cast<int>(j));
            ++indeg[j];
        }
    }
    // Lowest index first among ready variables, for a stable order.
    std::vector<int> order;
    std::vector<char> done(n, 0);
    for (std::size_t round = 0; round < n; ++round) {
        int pick = -1;
        for (std::size_t v = 0; v < n; ++v) {
            if (!done[v] && indeg[v] == 0) {
                pick = static_cast<int>(v);
                break;
            }
        }
        if (pick < 0) throw GenerationError("SCM has a contemporaneous cycle");
        done[static_cast<std::size_t>(pick)] = 1;
        order.push_back(pick);
        for (int c : children[static_cast<std::size_t>(pick)]) --indeg[static_cast<std::size_t>(c)];
    }
    return order;
}

namespace {

// Reduced form X_t = sum_l A_l X_{t-l} + B eta_t with B = (I - C_0)^{-1}.
struct ReducedVar {
    Eigen::MatrixXd B;
    std::vector<Eigen::MatrixXd> A;  // A[l - 1]
};

ReducedVar reduce(const Scm& scm) {
    const int n = scm.n_total;
    const int p = scm.tau_max;
    Eigen::MatrixXd C0 = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::MatrixXd> C(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(n, n));
    for (int j = 0; j < n; ++j) {
        if (p >= 1) C[0](j, j) += scm.auto_coeff[static_cast<std::size_t>(j)];
        for (const Mechanism& m : scm.cross[static_cast<std::size_t>(j)]) {
            if (m.lag == 0)
                C0(j, m.source) += m.coeff;
            else
                C[static_cast<std::size_t>(m.lag - 1)](j, m.source) += m.coeff;
        }
    }
    ReducedVar r;
    r.B = (Eigen::MatrixXd::Identity(n, n) - C0).inverse();
    for (const auto& Cl : C) r.A.push_back(r.B * Cl);
    return r;
}

Eigen::MatrixXd companion(const ReducedVar& r, int n) {
    const int p = static_cast<int>(r.A.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n * p, n * p);
    for (int l = 0; l < p; ++l) F.block(0, l * n, n, n) = r.A[static_cast<std::size_t>(l)];
    if (p > 1) F.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
    return F;
}

}  // namespace

double spectral_radius(const Scm& scm) {
    topological_order(scm);
    const ReducedVar r = reduce(scm);
    if (r.A.empty()) return 0.0;
    const Eigen::MatrixXd F = companion(r, scm.n_total);
    Eigen::EigenSolver<Eigen::MatrixXd> es(F, false);
    double rho = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) rho = std::max(rho, std::abs(es.eigenvalues()[k]));
    return rho;
}

bool check_stationarity(const Scm& scm) {
    if (!(spectral_radius(scm) < 0.999)) return false;
    const auto n = static_cast<std::size_t>(scm.n_total);
    const auto p = static_cast<std::size_t>(scm.tau_max);
    if (p == 0) return true;
    const Stepper stepper(scm);
    constexpr std::size_t kSteps = 500;
    Matrix buf(p + kSteps, n, 0.0);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t j = 0; j < n; ++j) buf(r, j) = 1.0;
    const std::vector<double> zero(n, 0.0);
    for (std::size_t t = p; t < p + kSteps; ++t) stepper.step(buf, t, std::nullopt, zero);
    double mx = 0.0;
    for (double v : buf.row(p + kSteps - 1)) mx = std::max(mx, std::abs(v));
    return mx < 1e-3;
}

Matrix stationary_covariance(const Scm& scm) {
    const int n = scm.n_total;
    const ReducedVar r = reduce(scm);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) D(j, j) = scm.noise_std[static_cast<std::size_t>(j)] * scm.noise_std[static_cast<std::size_t>(j)];
    const Eigen::MatrixXd Q0 = r.B * D * r.B.transpose();
    Eigen::MatrixXd S;
    if (r.A.empty()) {
        S = Q0;
    } else {
        const int p = static_cast<int>(r.A.size());
        Eigen::MatrixXd F = companion(r, n);
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n * p, n * p);
        Q.topLeftCorner(n, n) = Q0;
        // Doubling iteration for S = F S F' + Q.
        Eigen::MatrixXd Sk = Q;
        Eigen::MatrixXd Fk = F;
        for (int it = 0; it < 64; ++it) {
            const Eigen::MatrixXd next = Sk + Fk * Sk * Fk.transpose();
            Fk = Fk * Fk;
            const double change = (next - Sk).cwiseAbs().maxCoeff();
            Sk = next;
            if (change <= 1e-15 * std::max(1.0, Sk.cwiseAbs().maxCoeff())) break;
        }
        S = Sk.topLeftCorner(n, n);
    }
    Matrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = S(a, b);
    return out;
}

Stepper::Stepper(const Scm& scm) : n_(scm.n_total), tau_max_(scm.tau_max) {
    scm.validate();
    order_ = topological_order(scm);
    terms_.resize(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
        auto& t = terms_[static_cast<std::size_t>(j)];
        const double a = scm.auto_coeff[static_cast<std::size_t>(j)];
        if (a != 0.0) t.push_back({j, 1, a});
        for (const Mechanism& m : scm.cross[static_cast<std::size_t>(j)]) t.push_back({m.source, m.lag, m.coeff});
    }
}

void Stepper::step(std::span<const std::span<const double>> lagged, const std::optional<Intervention>& act,
                   std::span<const double> noise, std::span<double> out) const {
    for (int j : order_) {
        const auto ju = static_cast<std::size_t>(j);
        if (act && act->variable == j) {
            out[ju] = act->value;
            continue;
        }
        double v = noise[ju];
        for (const Term& term : terms_[ju]) {
            const double src = term.lag == 0 ? out[static_cast<std::size_t>(term.source)]
                                             : lagged[static_cast<std::size_t>(term.lag - 1)][static_cast<std::size_t>(term.source)];
            v += term.coeff * src;
        }
        out[ju] = v;
    }
}

void Stepper::step(Matrix& buf, std::size_t t, const std::optional<Intervention>& act,
                   std::span<const double> noise) const {
    std::span<const double> lagged[8];
    std::vector<std::span<const double>> big;
    std::span<const std::span<const double>> view;
    const auto p = static_cast<std::size_t>(tau_max_);
    if (p <= 8) {
        for (std::size_t l = 1; l <= p; ++l) lagged[l - 1] = std::as_const(buf).row(t - l);
        view = {lagged, p};
    } else {
        for (std::size_t l = 1; l <= p; ++l) big.push_back(std::as_const(buf).row(t - l));
        view = big;
    }
    step(view, act, noise, buf.row(t));
}

void draw_noise(const Scm& scm, Rng& rng, std::span<double> noise) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < noise.size(); ++j) noise[j] = scm.noise_std[j] * normal(rng);
}

Series generate(const Scm& scm, const std::optional<Intervention>& act, const Matrix& start, std::size_t t_gen,
                Rng& rng) {
    const Stepper stepper(scm);
    const auto n = static_cast<std::size_t>(scm.n_total);
    const auto p = static_cast<std::size_t>(scm.tau_max);
    if (start.rows() != p || (p > 0 && start.cols() != n))
        throw std::invalid_argument("generate: start must have tau_max rows and n_total columns");
    if (act && (act->variable < 0 || act->variable >= scm.n_total))
        throw std::invalid_argument("generate: intervention variable out of range");
    const bool noisy = std::any_of(scm.noise_std.begin(), scm.noise_std.end(), [](double s) { return s > 0.0; });

    Matrix buf(p + t_gen, n);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t j = 0; j < n; ++j) buf(r, j) = start(r, j);
    std::vector<double> noise(n, 0.0);
    for (std::size_t t = p; t < p + t_gen; ++t) {
        if (noisy) draw_noise(scm, rng, noise);
        stepper.step(buf, t, act, noise);
    }
    Series out(t_gen, n);
    for (std::size_t t = 0; t < t_gen; ++t) {
        for (std::size_t j = 0; j < n; ++j) out.values(t, j) = buf(p + t, j);
        if (act) out.set_do(t, static_cast<std::size_t>(act->variable), true);
    }
    return out;
}

Matrix warm_up_start(const Scm& scm, Rng& rng) {
    const auto n = static_cast<std::size_t>(scm.n_total);
    const auto p = static_cast<std::size_t>(scm.tau_max);
    if (p == 0) return Matrix(0, n);
    Matrix start(p, n);
    std::vector<double> noise(n);
    for (std::size_t r = 0; r < p; ++r) {
        draw_noise(scm, rng, noise);
        for (std::size_t j = 0; j < n; ++j) start(r, j) = noise[j];
    }
    const Series run = generate(scm, std::nullopt, start, kWarmUpSteps, rng);
    return run.values.tail(p);
}

Series drop_latents(const Series& series, std::span<const int> observed_idx) {
    for (std::size_t k = 0; k < observed_idx.size(); ++k) {
        if (observed_idx[k] < 0 || static_cast<std::size_t>(observed_idx[k]) >= series.cols())
            throw std::invalid_argument("drop_latents: index out of range");
        if (k > 0 && observed_idx[k] <= observed_idx[k - 1])
            throw std::invalid_argument("drop_latents: indices must be strictly ascending");
    }
    Series out(series.rows(), observed_idx.size());
    for (std::size_t t = 0; t < series.rows(); ++t) {
        for (std::size_t k = 0; k < observed_idx.size(); ++k) {
            const auto src = static_cast<std::size_t>(observed_idx[k]);
            out.values(t, k) = series.values(t, src);
            out.set_do(t, k, series.is_do(t, src));
        }
    }
    return out;
}

graph::Dag to_dag(const Scm& scm) {
    std::vector<graph::DirectedLink> links;
    for (int j = 0; j < scm.n_total; ++j) {
        if (scm.auto_coeff[static_cast<std::size_t>(j)] != 0.0) links.push_back({j, 1, j});
        for (const Mechanism& m : scm.cross[static_cast<std::size_t>(j)])
            if (m.coeff != 0.0) links.push_back({m.source, m.lag, j});
    }
    return graph::Dag(scm.n_total, scm.tau_max, std::move(links));
}

std::string to_json(const Scm& scm) {
    nlohmann::ordered_json j;
    j["n_total"] = scm.n_total;
    j["auto"] = scm.auto_coeff;
    auto cross = nlohmann::ordered_json::array();
    for (int t = 0; t < scm.n_total; ++t) {
        for (const Mechanism& m : scm.cross[static_cast<std::size_t>(t)]) {
            nlohmann::ordered_json e;
            e["source"] = m.source;
            e["target"] = t;
            e["lag"] = m.lag;
            e["coeff"] = m.coeff;
            cross.push_back(std::move(e));
        }
    }
    j["cross"] = std::move(cross);
    j["noise_std"] = scm.noise_std;
    j["observed_idx"] = scm.observed_idx;
    j["target"] = scm.target;
    j["tau_max"] = scm.tau_max;
    return j.dump(2);
}

Scm from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Scm s;
    s.n_total = j.at("n_total").get<int>();
    s.auto_coeff = j.at("auto").get<std::vector<double>>();
    s.cross.assign(static_cast<std::size_t>(s.n_total), {});
    for (const auto& e : j.at("cross")) {
        const int t = e.at("target").get<int>();
        if (t < 0 || t >= s.n_total) throw FormatError("SCM json: mechanism target out of range");
        s.cross[static_cast<std::size_t>(t)].push_back(
            {e.at("source").get<int>(), e.at("lag").get<int>(), e.at("coeff").get<double>()});
    }
    s.noise_std = j.at("noise_std").get<std::vector<double>>();
    s.observed_idx = j.at("observed_idx").get<std::vector<int>>();
    s.target = j.at("target").get<int>();
    s.tau_max = j.value("tau_max", 1);
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

bool contemporaneous_acyclic(const Scm& s) {
    try {
        topological_order(s);
        return true;
    } catch (const GenerationError&) {
        return false;
    }
}

}  // namespace

Scm sample_scm(const SamplingConfig& cfg, Rng& rng) {
    if (cfg.n_total < 1 || cfg.n_observed < 1 || cfg.n_observed > cfg.n_total)
        throw UnsatisfiableConfig("sample_scm: need 1 <= n_observed <= n_total");
    if (cfg.n_links < 1) throw UnsatisfiableConfig("sample_scm: n_links must be >= 1");
    const int n = cfg.n_total;
    const int n_pairs = n * (n - 1);
    if (cfg.n_links > n_pairs)
        throw UnsatisfiableConfig("sample_scm: n_links exceeds the " + std::to_string(n_pairs) +
                                  " available ordered variable pairs");

    std::vector<std::pair<int, int>> pairs;  // (source, target)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) pairs.emplace_back(i, j);

    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        Scm s;
        s.n_total = n;
        s.tau_max = 1;
        s.auto_coeff.resize(static_cast<std::size_t>(n));
        for (auto& a : s.auto_coeff) a = uniform(rng, cfg.auto_min, cfg.auto_max);
        s.cross.assign(static_cast<std::size_t>(n), {});

        // Partial Fisher-Yates: the first n_links entries become the links. A
        // contemporaneous link is drawn among the pairs that keep the
        // contemporaneous graph acyclic.
        std::bernoulli_distribution contemporaneous(cfg.frac_contemporaneous);
        std::bernoulli_distribution negative(0.5);
        std::vector<std::vector<char>> reach(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
        bool stuck = false;
        for (int k = 0; k < cfg.n_links && !stuck; ++k) {
            const int lag = contemporaneous(rng) ? 0 : 1;
            std::vector<int> ok;
            for (int c = k; c < n_pairs; ++c) {
                const auto [src, dst] = pairs[static_cast<std::size_t>(c)];
                if (lag == 1 || !reach[static_cast<std::size_t>(dst)][static_cast<std::size_t>(src)]) ok.push_back(c);
            }
            if (ok.empty()) {
                stuck = true;
                break;
            }
            std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
            std::swap(pairs[static_cast<std::size_t>(k)], pairs[static_cast<std::size_t>(ok[pick(rng)])]);
            const auto [src, dst] = pairs[static_cast<std::size_t>(k)];
            if (lag == 0) {
                const auto us = static_cast<std::size_t>(src), ud = static_cast<std::size_t>(dst);
                for (std::size_t a = 0; a < reach.size(); ++a)
                    if (a == us || reach[a][us])
                        for (std::size_t b = 0; b < reach.size(); ++b)
                            if (b == ud || reach[ud][b]) reach[a][b] = 1;
            }
            const double mag = uniform(rng, cfg.coeff_min, cfg.coeff_max);
            const double coeff = negative(rng) ? -mag : mag;
            s.cross[static_cast<std::size_t>(dst)].push_back({src, lag, coeff});
        }
        if (stuck) continue;
        s.noise_std.resize(static_cast<std::size_t>(n));
        for (auto& sd : s.noise_std) sd = uniform(rng, cfg.noise_min, cfg.noise_max);

        std::uniform_int_distribution<int> pick_target(0, n - 1);
        s.target = pick_target(rng);
        std::vector<int> others;
        for (int v = 0; v < n; ++v)
            if (v != s.target) others.push_back(v);
        for (int k = 0; k < cfg.n_observed - 1; ++k) {
            std::uniform_int_distribution<int> pick(k, static_cast<int>(others.size()) - 1);
            std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(pick(rng))]);
        }
        s.observed_idx.assign(others.begin(), others.begin() + (cfg.n_observed - 1));
        s.observed_idx.push_back(s.target);
        std::sort(s.observed_idx.begin(), s.observed_idx.end());

        if (!contemporaneous_acyclic(s)) continue;
        if (cfg.target_rule == TargetRule::IncomingCross && s.cross[static_cast<std::size_t>(s.target)].empty())
            continue;
        if (!check_stationarity(s)) continue;
        return s;
    }
    throw UnsatisfiableConfig("sample_scm: no admissible SCM after " + std::to_string(cfg.max_attempts) +
                              " attempts");
}

}  // namespace ccl::scm
