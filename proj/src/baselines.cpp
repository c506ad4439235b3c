#include "crowdcertain/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdcertain/random.hpp"

namespace crowdcertain::baselines {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Dims {
    std::size_t n, m, k;
};

Dims dims(const LabelTensor& z) { return {z.extent(0), z.extent(1), z.extent(2)}; }

void check_binary(const LabelTensor& z) {
    for (Label v : z.flat())
        if (v > 1) throw Error("baselines: crowd labels must be 0 or 1");
}

LabelMatrix class_slice(const LabelTensor& z, std::size_t c) {
    const auto [n, m, k] = dims(z);
    LabelMatrix out({n, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) out(i, a) = z(i, a, c);
    return out;
}

BaselineResult empty_result(Method method, const LabelTensor& z) {
    const auto [n, m, k] = dims(z);
    BaselineResult r;
    r.method = method;
    r.nu = LabelMatrix({n, k});
    r.score = Matrix<double>({n, k});
    r.worker_scores = Matrix<double>({m, k});
    return r;
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// log(exp(a) + exp(b)) with -inf handled.
double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Posterior P(y = 1) from the two unnormalized log joints.
double posterior_one(double log0, double log1) {
    const double norm = log_add(log0, log1);
    if (norm == kNegInf) return 0.5;
    return std::exp(log1 - norm);
}

// Seed tied to a worker's answer column so that permuting workers permutes
// their initial values along with them.
std::uint64_t column_seed(const LabelMatrix& votes, std::size_t a, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < votes.extent(0); ++i) {
        h ^= votes(i, a);
        h *= 1099511628211ULL;
    }
    return splitmix64(h ^ splitmix64(seed));
}

// Pooled agreement of every worker with the current labels over all (i, k).
std::vector<double> pooled_agreement(const LabelTensor& z, const LabelMatrix& labels) {
    const auto [n, m, k] = dims(z);
    std::vector<double> skill(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c) skill[a] += z(i, a, c) == labels(i, c) ? 1.0 : 0.0;
    for (auto& s : skill) s /= static_cast<double>(n * k);
    return skill;
}

Matrix<double> normalized_columns(const std::vector<double>& skill, std::size_t k) {
    const std::size_t m = skill.size();
    const double total = std::accumulate(skill.begin(), skill.end(), 0.0);
    Matrix<double> w({m, k});
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < k; ++c) w(a, c) = total > 0.0 ? skill[a] / total : 1.0 / static_cast<double>(m);
    return w;
}

void require_iters(std::size_t iters, const char* what) {
    if (iters == 0) throw Error(std::string(what) + ": iteration budget must be at least 1");
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::mv: return "mv";
        case Method::sheng: return "sheng";
        case Method::tao: return "tao";
        case Method::wawa: return "wawa";
        case Method::zbs: return "zbs";
        case Method::kos: return "kos";
        case Method::mace: return "mace";
        case Method::mmsr: return "mmsr";
        case Method::glad: return "glad";
        case Method::dawid_skene: return "dawid-skene";
        case Method::gold_mv: return "gold-mv";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::mv, Method::sheng, Method::tao, Method::wawa, Method::zbs, Method::kos, Method::mace,
                     Method::mmsr, Method::glad, Method::dawid_skene, Method::gold_mv})
        if (to_string(m) == name) return m;
    if (name == "dawid_skene" || name == "ds") return Method::dawid_skene;
    if (name == "gold_mv") return Method::gold_mv;
    throw Error("unknown baseline method: " + std::string(name));
}

std::vector<Method> standard_methods() {
    return {Method::mv,   Method::sheng, Method::tao,  Method::wawa, Method::zbs,
            Method::kos,  Method::mace,  Method::mmsr, Method::glad, Method::dawid_skene};
}

LabelMatrix majority_vote(const LabelTensor& z) {
    const auto [n, m, k] = dims(z);
    LabelMatrix out({n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t ones = 0;
            for (std::size_t a = 0; a < m; ++a) ones += z(i, a, c);
            out(i, c) = 2 * ones > m ? 1 : 0;
        }
    return out;
}

WeightedVote baseline_aggregate(const LabelTensor& z, const Matrix<double>& weights) {
    const auto [n, m, k] = dims(z);
    if (weights.extent(0) != m || weights.extent(1) != k)
        throw Error("baseline_aggregate: weights must be M x K matching the labels");
    WeightedVote out{LabelMatrix({n, k}), Matrix<double>({n, k})};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) s += weights(a, c) * z(i, a, c);
            out.score(i, c) = s;
            out.nu(i, c) = s > 0.5 ? 1 : 0;
        }
    return out;
}

BaselineResult mv(const LabelTensor& z) {
    check_binary(z);
    auto r = empty_result(Method::mv, z);
    const auto [n, m, k] = dims(z);
    r.nu = majority_vote(z);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double ones = 0.0;
            for (std::size_t a = 0; a < m; ++a) ones += z(i, a, c);
            r.score(i, c) = m ? ones / static_cast<double>(m) : 0.0;
        }
    for (auto& w : r.worker_scores.flat()) w = 1.0 / static_cast<double>(m);
    return r;
}

BaselineResult sheng(const LabelTensor& z) {
    auto r = mv(z);
    r.method = Method::sheng;
    const auto [n, m, k] = dims(z);
    Tensor3<double> freq({n, m, k}, 1.0 / static_cast<double>(m));
    Tensor3<double> unit({n, m, k}, 1.0);
    r.confidence = confidence::compute(z, freq, unit, r.nu);
    return r;
}

double tao_gamma(double tau, double agreement) { return tau * (1.0 + agreement * agreement); }

BaselineResult tao(const LabelTensor& z, const Matrix<double>& features, const data::FoldPlan& folds,
                   const ensemble::ForestConfig& forest, std::uint64_t seed) {
    check_binary(z);
    const auto [n, m, k] = dims(z);
    if (m < 2) throw Error("tao: at least two workers are required");
    if (features.extent(0) != n) throw Error("tao: feature rows do not match the labels");
    if (folds.assignments.size() != n) throw Error("tao: fold plan does not cover the instances");
    auto r = empty_result(Method::tao, z);

    // tau: mean held-out accuracy of forests trained on the worker's own labels.
    Matrix<double> tau({m, k});
    for (std::size_t f = 0; f < folds.k_folds; ++f) {
        const auto train = folds.train_indices(f);
        const auto test = folds.test_indices(f);
        if (train.empty() || test.empty()) throw Error("tao: empty cross-validation fold");
        const auto x_train = data::select_rows(features, train);
        const auto x_test = data::select_rows(features, test);
        std::vector<Label> y(train.size());
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t t = 0; t < train.size(); ++t) y[t] = z(train[t], a, c);
                const auto model = ensemble::RandomForest::fit(x_train, y, forest, splitmix64(seed + f));
                const auto p = model.predict_proba(x_test);
                double hits = 0.0;
                for (std::size_t t = 0; t < test.size(); ++t)
                    hits += (p[t] > 0.5 ? 1 : 0) == z(test[t], a, c) ? 1.0 : 0.0;
                tau(a, c) += hits / static_cast<double>(test.size());
            }
    }
    for (auto& t : tau.flat()) t /= static_cast<double>(folds.k_folds);

    Tensor3<double> gamma({n, m, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double total = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double same = 0.0;
                for (std::size_t b = 0; b < m; ++b)
                    if (b != a && z(i, b, c) == z(i, a, c)) same += 1.0;
                const double s = same / static_cast<double>(m - 1);
                gamma(i, a, c) = tao_gamma(tau(a, c), s);
                total += gamma(i, a, c);
            }
            double score = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                gamma(i, a, c) = total > 0.0 ? gamma(i, a, c) / total : 1.0 / static_cast<double>(m);
                score += gamma(i, a, c) * z(i, a, c);
                r.worker_scores(a, c) += gamma(i, a, c) / static_cast<double>(n);
            }
            r.score(i, c) = score;
            r.nu(i, c) = score > 0.5 ? 1 : 0;
        }
    r.confidence = confidence::compute(z, gamma, r.nu);
    return r;
}

BaselineResult tao(const LabelTensor& z, const Matrix<double>& features, const Hyperparameters& hp) {
    return tao(z, features, data::make_folds(z.extent(0), hp.tao_folds, hp.seed), hp.tao_forest, hp.seed);
}

BaselineResult wawa(const LabelTensor& z) {
    check_binary(z);
    auto r = empty_result(Method::wawa, z);
    const auto skill = pooled_agreement(z, majority_vote(z));
    const auto w = normalized_columns(skill, z.extent(2));
    auto vote = baseline_aggregate(z, w);
    r.nu = std::move(vote.nu);
    r.score = std::move(vote.score);
    for (std::size_t a = 0; a < skill.size(); ++a)
        for (std::size_t c = 0; c < z.extent(2); ++c) r.worker_scores(a, c) = skill[a];
    r.iterations_run = 1;
    return r;
}

BaselineResult zero_based_skill(const LabelTensor& z, std::size_t max_iters) {
    require_iters(max_iters, "zero_based_skill");
    check_binary(z);
    auto r = empty_result(Method::zbs, z);
    const std::size_t k = z.extent(2);
    // Uniform skills give the plain majority vote.
    LabelMatrix labels = majority_vote(z);
    std::vector<double> skill;
    WeightedVote vote;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        skill = pooled_agreement(z, labels);
        vote = baseline_aggregate(z, normalized_columns(skill, k));
        r.iterations_run = it;
        const bool fixpoint = vote.nu == labels;
        labels = vote.nu;
        if (fixpoint) break;
    }
    r.nu = std::move(vote.nu);
    r.score = std::move(vote.score);
    for (std::size_t a = 0; a < skill.size(); ++a)
        for (std::size_t c = 0; c < k; ++c) r.worker_scores(a, c) = skill[a];
    return r;
}

BaselineResult kos(const LabelTensor& z, std::size_t iters, std::uint64_t seed) {
    check_binary(z);
    auto r = empty_result(Method::kos, z);
    const auto [n, m, k] = dims(z);
    r.iterations_run = iters;
    for (std::size_t c = 0; c < k; ++c) {
        const auto votes = class_slice(z, c);
        Matrix<double> A({n, m});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < m; ++a) A(i, a) = votes(i, a) ? 1.0 : -1.0;
        // y(i, a): worker-to-task message y_{a->i}; x(i, a): task-to-worker x_{i->a}.
        Matrix<double> y({n, m}), x({n, m});
        for (std::size_t a = 0; a < m; ++a) {
            Rng rng(column_seed(votes, a, seed));
            for (std::size_t i = 0; i < n; ++i) y(i, a) = 1.0 + rng.normal();
        }
        for (std::size_t it = 0; it < iters; ++it) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t a = 0; a < m; ++a) s += A(i, a) * y(i, a);
                for (std::size_t a = 0; a < m; ++a) x(i, a) = s - A(i, a) * y(i, a);
            }
            double sq = 0.0;
            Matrix<double> next({n, m});
            for (std::size_t a = 0; a < m; ++a) {
                double t = 0.0;
                for (std::size_t i = 0; i < n; ++i) t += A(i, a) * x(i, a);
                for (std::size_t i = 0; i < n; ++i) {
                    next(i, a) = t - A(i, a) * x(i, a);
                    sq += next(i, a) * next(i, a);
                }
            }
            if (!(sq > 0.0) || !std::isfinite(sq)) {
                // No information flows (a single worker or a single task):
                // every worker falls back to the prior mean reliability.
                for (auto& v : y.flat()) v = 1.0;
                break;
            }
            const double rms = std::sqrt(sq / static_cast<double>(n * m));
            for (std::size_t e = 0; e < next.size(); ++e) y.flat()[e] = next.flat()[e] / rms;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) s += A(i, a) * y(i, a);
            r.score(i, c) = s;
            r.nu(i, c) = s > 0.0 ? 1 : 0;
        }
        for (std::size_t a = 0; a < m; ++a) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += y(i, a);
            r.worker_scores(a, c) = s / static_cast<double>(n);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// MACE

MaceFit fit_mace(const LabelMatrix& votes, std::size_t em_iters, std::uint64_t seed) {
    require_iters(em_iters, "mace");
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    MaceFit fit;
    fit.competence.assign(m, 0.5);
    fit.spam_dist.assign(m, {0.5, 0.5});
    for (std::size_t a = 0; a < m; ++a) {
        Rng rng(column_seed(votes, a, seed));
        fit.competence[a] = 0.5 + rng.uniform(-0.01, 0.01);
        const double d = rng.uniform(-0.01, 0.01);
        fit.spam_dist[a] = {0.5 + d, 0.5 - d};
    }
    fit.posterior.assign(n, 0.5);

    auto likelihood = [&](std::size_t a, Label zv, Label c) {
        const double th = fit.competence[a];
        return std::max((zv == c ? th : 0.0) + (1.0 - th) * fit.spam_dist[a][zv], 1e-300);
    };

    for (std::size_t it = 1; it <= em_iters; ++it) {
        // E-step with the uniform label prior.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double l0 = std::log(0.5), l1 = std::log(0.5);
            for (std::size_t a = 0; a < m; ++a) {
                l0 += std::log(likelihood(a, votes(i, a), 0));
                l1 += std::log(likelihood(a, votes(i, a), 1));
            }
            ll += log_add(l0, l1);
            fit.posterior[i] = posterior_one(l0, l1);
        }
        fit.loglik.push_back(ll);
        fit.iterations = it;

        // M-step from expected spam indicators.
        for (std::size_t a = 0; a < m; ++a) {
            double honest = 0.0;
            std::array<double, 2> spam{0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                const Label zv = votes(i, a);
                const double th = fit.competence[a];
                for (Label c = 0; c < 2; ++c) {
                    const double q = c ? fit.posterior[i] : 1.0 - fit.posterior[i];
                    if (q == 0.0) continue;
                    const double honest_part = zv == c ? th : 0.0;
                    const double denom = honest_part + (1.0 - th) * fit.spam_dist[a][zv];
                    const double p_honest = denom > 0.0 ? honest_part / denom : 0.0;
                    honest += q * p_honest;
                    spam[zv] += q * (1.0 - p_honest);
                }
            }
            fit.competence[a] = honest / static_cast<double>(n);
            const double total = spam[0] + spam[1];
            if (total > 0.0) fit.spam_dist[a] = {spam[0] / total, spam[1] / total};
        }
    }
    // Final posterior under the last parameters.
    for (std::size_t i = 0; i < n; ++i) {
        double l0 = 0.0, l1 = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            l0 += std::log(likelihood(a, votes(i, a), 0));
            l1 += std::log(likelihood(a, votes(i, a), 1));
        }
        fit.posterior[i] = posterior_one(l0, l1);
    }
    return fit;
}

BaselineResult mace(const LabelTensor& z, std::size_t em_iters, std::uint64_t seed) {
    require_iters(em_iters, "mace");
    check_binary(z);
    auto r = empty_result(Method::mace, z);
    const auto [n, m, k] = dims(z);
    for (std::size_t c = 0; c < k; ++c) {
        const auto fit = fit_mace(class_slice(z, c), em_iters, seed);
        for (std::size_t i = 0; i < n; ++i) {
            r.score(i, c) = fit.posterior[i];
            r.nu(i, c) = fit.posterior[i] > 0.5 ? 1 : 0;
        }
        for (std::size_t a = 0; a < m; ++a) r.worker_scores(a, c) = fit.competence[a];
        r.iterations_run = std::max(r.iterations_run, fit.iterations);
        r.objective_trace.push_back(fit.loglik);
    }
    return r;
}

// ---------------------------------------------------------------------------
// MMSR

Matrix<double> agreement_target(const LabelMatrix& votes) {
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    if (n == 0) throw Error("mmsr: no instances");
    Matrix<double> t({m, m});
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            double agree = 0.0;
            for (std::size_t i = 0; i < n; ++i) agree += votes(i, a) == votes(i, b) ? 1.0 : 0.0;
            t(a, b) = t(b, a) = 2.0 * agree / static_cast<double>(n) - 1.0;
        }
    return t;
}

namespace {

// Largest algebraic eigenpair of a small symmetric matrix by shifted power iteration.
std::pair<double, std::vector<double>> top_eigen(const Matrix<double>& d) {
    const std::size_t m = d.extent(0);
    double shift = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < m; ++b) row += std::abs(d(a, b));
        shift = std::max(shift, row);
    }
    std::vector<double> u(m), w(m);
    for (std::size_t a = 0; a < m; ++a) u[a] = 1.0 + 1e-3 * static_cast<double>(a);
    double lambda = 0.0;
    for (int step = 0; step < 5000; ++step) {
        double norm = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            double s = shift * u[a];
            for (std::size_t b = 0; b < m; ++b) s += d(a, b) * u[b];
            w[a] = s;
            norm += s * s;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return {0.0, std::vector<double>(m, 0.0)};
        double change = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            w[a] /= norm;
            change = std::max(change, std::abs(w[a] - u[a]));
        }
        u.swap(w);
        lambda = norm - shift;
        if (change < 1e-14) break;
    }
    return {lambda, u};
}

}  // namespace

MmsrFit fit_mmsr(const LabelMatrix& votes, std::size_t iters) {
    require_iters(iters, "mmsr");
    const std::size_t m = votes.extent(1);
    if (m < 3) throw Error("mmsr: at least three workers are required");
    constexpr double eps = 1e-4;
    auto d = agreement_target(votes);
    for (std::size_t a = 0; a < m; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < m; ++b)
            if (b != a) s += d(a, b);
        d(a, a) = std::max(s / static_cast<double>(m - 1), 0.0);
    }
    MmsrFit fit;
    fit.rank_one.assign(m, 0.0);
    for (std::size_t it = 1; it <= iters; ++it) {
        const auto [lambda, u] = top_eigen(d);
        const double scale = std::sqrt(std::max(lambda, 0.0));
        double change = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            fit.rank_one[a] = scale * u[a];
            const double diag = fit.rank_one[a] * fit.rank_one[a];
            change = std::max(change, std::abs(diag - d(a, a)));
            d(a, a) = diag;
        }
        fit.iterations = it;
        if (change < 1e-12) break;
    }
    if (std::accumulate(fit.rank_one.begin(), fit.rank_one.end(), 0.0) < 0.0)
        for (auto& v : fit.rank_one) v = -v;
    fit.skills.resize(m);
    for (std::size_t a = 0; a < m; ++a) fit.skills[a] = std::clamp((fit.rank_one[a] + 1.0) / 2.0, eps, 1.0 - eps);
    return fit;
}

BaselineResult mmsr(const LabelTensor& z, std::size_t iters) {
    check_binary(z);
    auto r = empty_result(Method::mmsr, z);
    const auto [n, m, k] = dims(z);
    for (std::size_t c = 0; c < k; ++c) {
        const auto votes = class_slice(z, c);
        const auto fit = fit_mmsr(votes, iters);
        std::vector<double> w(m);
        for (std::size_t a = 0; a < m; ++a) {
            w[a] = std::log(fit.skills[a] / (1.0 - fit.skills[a]));
            r.worker_scores(a, c) = fit.skills[a];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) s += w[a] * (votes(i, a) ? 1.0 : -1.0);
            r.score(i, c) = s;
            r.nu(i, c) = s > 0.0 ? 1 : 0;
        }
        r.iterations_run = std::max(r.iterations_run, fit.iterations);
    }
    return r;
}

// ---------------------------------------------------------------------------
// GLAD

namespace glad_detail {

namespace {

void check_params(const LabelMatrix& votes, const GladParams& p) {
    if (p.ability.size() != votes.extent(1) || p.log_difficulty.size() != votes.extent(0))
        throw Error("glad: parameter sizes do not match the votes");
}

}  // namespace

std::vector<double> e_step(const LabelMatrix& votes, const GladParams& params, double* loglik) {
    check_params(votes, params);
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    std::vector<double> post(n);
    const double lp0 = safe_log(1.0 - params.prior1), lp1 = safe_log(params.prior1);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = std::exp(params.log_difficulty[i]);
        double l0 = lp0, l1 = lp1;
        for (std::size_t a = 0; a < m; ++a) {
            const double x = params.ability[a] * beta;
            const double right = log_sigmoid(x), wrong = log_sigmoid(-x);
            l0 += votes(i, a) == 0 ? right : wrong;
            l1 += votes(i, a) == 1 ? right : wrong;
        }
        ll += log_add(l0, l1);
        post[i] = posterior_one(l0, l1);
    }
    if (loglik) *loglik = ll;
    return post;
}

double q_value(const LabelMatrix& votes, std::span<const double> posterior, const GladParams& params) {
    check_params(votes, params);
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q1 = posterior[i], q0 = 1.0 - q1;
        if (q1 > 0.0) q += q1 * safe_log(params.prior1);
        if (q0 > 0.0) q += q0 * safe_log(1.0 - params.prior1);
        const double beta = std::exp(params.log_difficulty[i]);
        for (std::size_t a = 0; a < m; ++a) {
            const double x = params.ability[a] * beta;
            const double right = votes(i, a) ? q1 : q0;
            q += right * log_sigmoid(x) + (1.0 - right) * log_sigmoid(-x);
        }
    }
    return q;
}

void q_gradient(const LabelMatrix& votes, std::span<const double> posterior, const GladParams& params,
                std::vector<double>& d_ability, std::vector<double>& d_log_difficulty) {
    check_params(votes, params);
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    d_ability.assign(m, 0.0);
    d_log_difficulty.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = std::exp(params.log_difficulty[i]);
        for (std::size_t a = 0; a < m; ++a) {
            const double x = params.ability[a] * beta;
            const double right = votes(i, a) ? posterior[i] : 1.0 - posterior[i];
            const double g = right - sigmoid(x);
            d_ability[a] += g * beta;
            d_log_difficulty[i] += g * x;
        }
    }
}

}  // namespace glad_detail

GladFit fit_glad(const LabelMatrix& votes, std::size_t em_iters, double step) {
    require_iters(em_iters, "glad");
    if (!(step > 0.0) || !std::isfinite(step)) throw Error("glad: step must be positive");
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    constexpr int inner_steps = 10;
    GladFit fit;
    fit.params.ability.assign(m, 1.0);
    fit.params.log_difficulty.assign(n, 0.0);
    fit.params.prior1 = 0.5;
    double lr = step;
    std::vector<double> ga, gb;
    for (std::size_t it = 1; it <= em_iters; ++it) {
        double ll = 0.0;
        fit.posterior = glad_detail::e_step(votes, fit.params, &ll);
        fit.loglik.push_back(ll);
        fit.iterations = it;

        double mean = 0.0;
        for (double q : fit.posterior) mean += q;
        fit.params.prior1 = n ? mean / static_cast<double>(n) : 0.5;

        // Gradient ascent with backtracking so the expected log-likelihood never drops.
        double current = glad_detail::q_value(votes, fit.posterior, fit.params);
        for (int s = 0; s < inner_steps; ++s) {
            glad_detail::q_gradient(votes, fit.posterior, fit.params, ga, gb);
            bool accepted = false;
            for (int tries = 0; tries < 40 && !accepted; ++tries) {
                GladParams trial = fit.params;
                for (std::size_t a = 0; a < m; ++a) trial.ability[a] += lr * ga[a];
                for (std::size_t i = 0; i < n; ++i) trial.log_difficulty[i] += lr * gb[i];
                const double value = glad_detail::q_value(votes, fit.posterior, trial);
                if (std::isfinite(value) && value >= current) {
                    fit.params = std::move(trial);
                    current = value;
                    accepted = true;
                    lr *= 1.2;
                } else {
                    lr *= 0.5;
                }
            }
            if (!accepted) break;
        }
    }
    fit.posterior = glad_detail::e_step(votes, fit.params);
    return fit;
}

BaselineResult glad(const LabelTensor& z, std::size_t em_iters, double step) {
    require_iters(em_iters, "glad");
    if (!(step > 0.0)) throw Error("glad: step must be positive");
    check_binary(z);
    auto r = empty_result(Method::glad, z);
    const auto [n, m, k] = dims(z);
    for (std::size_t c = 0; c < k; ++c) {
        const auto fit = fit_glad(class_slice(z, c), em_iters, step);
        for (std::size_t i = 0; i < n; ++i) {
            r.score(i, c) = fit.posterior[i];
            r.nu(i, c) = fit.posterior[i] > 0.5 ? 1 : 0;
        }
        for (std::size_t a = 0; a < m; ++a) r.worker_scores(a, c) = fit.params.ability[a];
        r.iterations_run = std::max(r.iterations_run, fit.iterations);
        r.objective_trace.push_back(fit.loglik);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Dawid-Skene

DawidSkeneFit fit_dawid_skene(const LabelMatrix& votes, std::size_t em_iters, double tol) {
    require_iters(em_iters, "dawid_skene");
    if (std::isnan(tol) || tol < 0.0) throw Error("dawid_skene: tolerance must be non-negative");
    const std::size_t n = votes.extent(0), m = votes.extent(1);
    DawidSkeneFit fit;
    fit.confusion.assign(m, {0.5, 0.5, 0.5, 0.5});
    fit.posterior.assign(n, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
        double ones = 0.0;
        for (std::size_t a = 0; a < m; ++a) ones += votes(i, a);
        fit.posterior[i] = m ? ones / static_cast<double>(m) : 0.5;
    }
    for (std::size_t it = 1; it <= em_iters; ++it) {
        // M-step: class prior and smoothed confusion matrices.
        double mass1 = 0.0;
        for (double q : fit.posterior) mass1 += q;
        const double mass0 = static_cast<double>(n) - mass1;
        fit.prior = {mass0 / static_cast<double>(n), mass1 / static_cast<double>(n)};
        double log_prior = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            std::array<double, 4> counts{1.0, 1.0, 1.0, 1.0};
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = votes(i, a);
                counts[2 * j + 0] += 1.0 - fit.posterior[i];
                counts[2 * j + 1] += fit.posterior[i];
            }
            for (std::size_t c = 0; c < 2; ++c) {
                const double total = counts[c] + counts[2 + c];
                fit.confusion[a][c] = counts[c] / total;
                fit.confusion[a][2 + c] = counts[2 + c] / total;
                log_prior += std::log(fit.confusion[a][c]) + std::log(fit.confusion[a][2 + c]);
            }
        }
        // E-step.
        double ll = 0.0, change = 0.0;
        const double lp0 = safe_log(fit.prior[0]), lp1 = safe_log(fit.prior[1]);
        for (std::size_t i = 0; i < n; ++i) {
            double l0 = lp0, l1 = lp1;
            for (std::size_t a = 0; a < m; ++a) {
                const std::size_t j = votes(i, a);
                l0 += std::log(fit.confusion[a][2 * j + 0]);
                l1 += std::log(fit.confusion[a][2 * j + 1]);
            }
            ll += log_add(l0, l1);
            const double q = posterior_one(l0, l1);
            change = std::max(change, std::abs(q - fit.posterior[i]));
            fit.posterior[i] = q;
        }
        fit.objective.push_back(ll + log_prior);
        fit.iterations = it;
        if (change < tol) break;
    }
    return fit;
}

BaselineResult dawid_skene(const LabelTensor& z, std::size_t em_iters, double tol) {
    require_iters(em_iters, "dawid_skene");
    check_binary(z);
    auto r = empty_result(Method::dawid_skene, z);
    const auto [n, m, k] = dims(z);
    for (std::size_t c = 0; c < k; ++c) {
        const auto fit = fit_dawid_skene(class_slice(z, c), em_iters, tol);
        for (std::size_t i = 0; i < n; ++i) {
            r.score(i, c) = fit.posterior[i];
            r.nu(i, c) = fit.posterior[i] > 0.5 ? 1 : 0;
        }
        for (std::size_t a = 0; a < m; ++a) r.worker_scores(a, c) = 0.5 * (fit.confusion[a][0] + fit.confusion[a][3]);
        r.iterations_run = std::max(r.iterations_run, fit.iterations);
        r.objective_trace.push_back(fit.objective);
    }
    return r;
}

// ---------------------------------------------------------------------------

BaselineResult gold_majority_vote(const LabelTensor& z, const LabelMatrix& truth, double gold_fraction,
                                  std::uint64_t seed) {
    check_binary(z);
    const auto [n, m, k] = dims(z);
    if (truth.extent(0) != n || truth.extent(1) != k) throw Error("gold_majority_vote: truth shape mismatch");
    if (!(gold_fraction > 0.0 && gold_fraction <= 1.0))
        throw Error("gold_majority_vote: gold fraction must be in (0, 1]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = Rng::substream(seed, "gold");
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_gold = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(gold_fraction * n)));
    auto r = empty_result(Method::gold_mv, z);
    for (std::size_t t = 0; t < n_gold; ++t)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c)
                r.worker_scores(a, c) += z(order[t], a, c) == truth(order[t], c) ? 1.0 : 0.0;
    for (auto& s : r.worker_scores.flat()) s /= static_cast<double>(n_gold);
    Matrix<double> w({m, k});
    for (std::size_t c = 0; c < k; ++c) {
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) total += r.worker_scores(a, c);
        for (std::size_t a = 0; a < m; ++a)
            w(a, c) = total > 0.0 ? r.worker_scores(a, c) / total : 1.0 / static_cast<double>(m);
    }
    auto vote = baseline_aggregate(z, w);
    r.nu = std::move(vote.nu);
    r.score = std::move(vote.score);
    return r;
}

BaselineResult run(Method method, const LabelTensor& z, const Matrix<double>& features, const LabelMatrix& truth,
                   const Hyperparameters& hp) {
    switch (method) {
        case Method::mv: return mv(z);
        case Method::sheng: return sheng(z);
        case Method::tao: return tao(z, features, hp);
        case Method::wawa: return wawa(z);
        case Method::zbs: return zero_based_skill(z, hp.em_iters);
        case Method::kos: return kos(z, hp.kos_iters, hp.seed);
        case Method::mace: return mace(z, hp.em_iters, hp.seed);
        case Method::mmsr: return mmsr(z, hp.mmsr_iters);
        case Method::glad: return glad(z, hp.em_iters, hp.glad_step);
        case Method::dawid_skene: return dawid_skene(z, hp.em_iters, hp.tol);
        case Method::gold_mv: return gold_majority_vote(z, truth, hp.gold_fraction, hp.seed);
    }
    throw Error("unknown baseline method");
}

}  // namespace crowdcertain::baselines
