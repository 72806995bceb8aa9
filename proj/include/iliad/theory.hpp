#pragma once

// Exact and sampled EpochADEL engine for one-step (contextual bandit)
// instances, together with numeric verifiers for the convergence results it
// is expected to satisfy (potential decrease per epoch, the 1/sqrt(t) rate
// for the averaged marginal, the fixed point of the Bayes-update operator,
// and the smoothness constant of that operator).

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iliad/linalg.hpp"
#include "iliad/rng.hpp"

#include "json.hpp"

namespace iliad::theory {

using nlohmann::json;

class SupportViolation : public std::runtime_error {
public:
    SupportViolation(int epoch, int state, int description)
        : std::runtime_error("support violation at epoch " + std::to_string(epoch) +
                             ", state " + std::to_string(state) + ", description " +
                             std::to_string(description)),
          epoch(epoch), state(state), description(description) {}
    int epoch, state, description;
};

// A conditional distribution row. Rows over zero-mass conditioning events are
// flagged undefined instead of being zero-filled.
struct Row {
    std::vector<double> p;
    bool defined = false;
};

// Finite contextual-bandit world: joint distribution P*(s, d, a).
struct CBInstance {
    int n_states = 0;
    int n_descriptions = 0;
    int n_actions = 0;
    std::vector<double> joint;  // [s][d][a] row-major
    std::uint64_t seed = 0;

    CBInstance() = default;
    CBInstance(int s, int d, int a)
        : n_states(s), n_descriptions(d), n_actions(a),
          joint(static_cast<std::size_t>(s) * d * a, 0.0) {}

    double& p(int s, int d, int a) {
        return joint[(static_cast<std::size_t>(s) * n_descriptions + d) * n_actions + a];
    }
    double p(int s, int d, int a) const {
        return joint[(static_cast<std::size_t>(s) * n_descriptions + d) * n_actions + a];
    }

    double total_mass() const {
        double t = 0.0;
        for (double v : joint) t += v;
        return t;
    }

    void validate() const {
        if (std::abs(total_mass() - 1.0) > 1e-12)
            throw std::invalid_argument("CBInstance joint must sum to 1 within 1e-12");
        for (double v : joint)
            if (v < 0.0) throw std::invalid_argument("CBInstance joint must be nonnegative");
    }

    json to_json() const {
        return json{{"shape", {n_states, n_descriptions, n_actions}},
                    {"joint", joint},
                    {"seed", seed}};
    }

    static CBInstance from_json(const json& j) {
        CBInstance inst(j["shape"][0].get<int>(), j["shape"][1].get<int>(),
                        j["shape"][2].get<int>());
        inst.joint = j["joint"].get<std::vector<double>>();
        inst.seed = j.value("seed", std::uint64_t{0});
        inst.validate();
        return inst;
    }
};

// The reference two-description instance used throughout the tests: a single
// state, deterministic optimal policy pi*(a_i | s0, d_i) = 1, request prior
// (0.7, 0.3). Its teacher matrix is the identity.
inline CBInstance identity_instance() {
    CBInstance inst(1, 2, 2);
    inst.p(0, 0, 0) = 0.7;
    inst.p(0, 1, 1) = 0.3;
    return inst;
}

// All conditionals derived from the joint. Teacher rows equal the joint's
// conditional P*(d | [s, a]) by construction (the consistent-teacher setting).
struct DerivedDistributions {
    int n_states = 0, n_descriptions = 0, n_actions = 0;
    std::vector<double> state_marginal;          // P*(s)
    std::vector<double> request_dist;            // P*(s, d), [s][d]
    std::vector<Row> teacher;                    // P*(d | [s,a]), [s][a] -> row over d
    std::vector<Row> optimal_policy;             // P*(a | s, d), [s][d] -> row over a
    std::vector<Row> optimal_marginal;           // P*(a | s), [s] -> row over a
    std::vector<Row> description_prior;          // P*(d | s), [s] -> row over d
    std::vector<Matrix> description_matrix;      // P_s, rows = d, cols = a

    const Row& teacher_row(int s, int a) const { return teacher[s * n_actions + a]; }
    const Row& policy_row(int s, int d) const { return optimal_policy[s * n_descriptions + d]; }
    double request(int s, int d) const { return request_dist[s * n_descriptions + d]; }
};

inline DerivedDistributions derive_conditionals(const CBInstance& inst) {
    inst.validate();
    const int S = inst.n_states, D = inst.n_descriptions, A = inst.n_actions;
    DerivedDistributions out;
    out.n_states = S;
    out.n_descriptions = D;
    out.n_actions = A;
    out.state_marginal.assign(S, 0.0);
    out.request_dist.assign(static_cast<std::size_t>(S) * D, 0.0);
    out.teacher.assign(static_cast<std::size_t>(S) * A, {});
    out.optimal_policy.assign(static_cast<std::size_t>(S) * D, {});
    out.optimal_marginal.assign(S, {});
    out.description_prior.assign(S, {});
    out.description_matrix.assign(S, Matrix(D, A));

    for (int s = 0; s < S; ++s) {
        for (int d = 0; d < D; ++d)
            for (int a = 0; a < A; ++a) {
                out.state_marginal[s] += inst.p(s, d, a);
                out.request_dist[s * D + d] += inst.p(s, d, a);
            }

        // P*(d | [s,a]) and the P_s matrix.
        for (int a = 0; a < A; ++a) {
            double mass = 0.0;
            for (int d = 0; d < D; ++d) mass += inst.p(s, d, a);
            Row& row = out.teacher[s * A + a];
            if (mass > 0.0) {
                row.defined = true;
                row.p.assign(D, 0.0);
                for (int d = 0; d < D; ++d) row.p[d] = inst.p(s, d, a) / mass;
                for (int d = 0; d < D; ++d) out.description_matrix[s].at(d, a) = row.p[d];
            }
        }

        // P*(a | s, d).
        for (int d = 0; d < D; ++d) {
            const double mass = out.request_dist[s * D + d];
            Row& row = out.optimal_policy[s * D + d];
            if (mass > 0.0) {
                row.defined = true;
                row.p.assign(A, 0.0);
                for (int a = 0; a < A; ++a) row.p[a] = inst.p(s, d, a) / mass;
            }
        }

        // P*(a | s) and P*(d | s).
        if (out.state_marginal[s] > 0.0) {
            Row& am = out.optimal_marginal[s];
            am.defined = true;
            am.p.assign(A, 0.0);
            Row& dp = out.description_prior[s];
            dp.defined = true;
            dp.p.assign(D, 0.0);
            for (int d = 0; d < D; ++d)
                for (int a = 0; a < A; ++a) {
                    am.p[a] += inst.p(s, d, a) / out.state_marginal[s];
                    dp.p[d] += inst.p(s, d, a) / out.state_marginal[s];
                }
        }
    }
    return out;
}

inline double sigma_min(const DerivedDistributions& derived, int state) {
    return min_singular_value(derived.description_matrix[state]);
}

// ----------------------------------------------------------------------------
// Exact epoch dynamics.

// Lemma-4 style marginal update: the infinite-sample limit of one EpochADEL
// epoch, P_{n+1}(a|s) = sum_d P*(d|[s,a]) P_n(a|s) P*(d|s) / P_n(d|s).
inline std::vector<double> epoch_update_exact(const DerivedDistributions& derived, int state,
                                              std::span<const double> marginal,
                                              int epoch_for_errors = -1) {
    const int D = derived.n_descriptions, A = derived.n_actions;
    const Row& prior = derived.description_prior[state];
    std::vector<double> next(A, 0.0);
    for (int d = 0; d < D; ++d) {
        if (!prior.defined || prior.p[d] <= 0.0) continue;
        double denom = 0.0;  // P_n(d|s)
        for (int a = 0; a < A; ++a) {
            const Row& t = derived.teacher_row(state, a);
            if (t.defined) denom += t.p[d] * marginal[a];
        }
        if (denom <= 0.0) throw SupportViolation(epoch_for_errors, state, d);
        for (int a = 0; a < A; ++a) {
            const Row& t = derived.teacher_row(state, a);
            if (t.defined) next[a] += t.p[d] * marginal[a] * prior.p[d] / denom;
        }
    }
    return next;
}

// Bayes-optimal conditional induced by a marginal (Lemma 2):
// D_n(a|s,d) = P*(d|[s,a]) P_n(a|s) / sum_a' P*(d|[s,a']) P_n(a'|s).
// Rows where the induced description mass is zero are flagged undefined.
inline std::vector<Row> bayes_optimal_policy(const DerivedDistributions& derived, int state,
                                             std::span<const double> marginal,
                                             int epoch_for_errors = -1) {
    const int D = derived.n_descriptions, A = derived.n_actions;
    std::vector<Row> rows(D);
    for (int d = 0; d < D; ++d) {
        double denom = 0.0;
        for (int a = 0; a < A; ++a) {
            const Row& t = derived.teacher_row(state, a);
            if (t.defined) denom += t.p[d] * marginal[a];
        }
        const Row& prior = derived.description_prior[state];
        const bool needed = prior.defined && prior.p[d] > 0.0;
        if (denom <= 0.0) {
            if (needed) throw SupportViolation(epoch_for_errors, state, d);
            continue;  // left undefined
        }
        rows[d].defined = true;
        rows[d].p.assign(A, 0.0);
        for (int a = 0; a < A; ++a) {
            const Row& t = derived.teacher_row(state, a);
            if (t.defined) rows[d].p[a] = t.p[d] * marginal[a] / denom;
        }
    }
    return rows;
}

// Table policy over (s, d) pairs.
struct TablePolicy {
    int n_states = 0, n_descriptions = 0, n_actions = 0;
    std::vector<Row> rows;  // [s][d]

    TablePolicy() = default;
    TablePolicy(int s, int d, int a)
        : n_states(s), n_descriptions(d), n_actions(a),
          rows(static_cast<std::size_t>(s) * d) {}

    Row& row(int s, int d) { return rows[s * n_descriptions + d]; }
    const Row& row(int s, int d) const { return rows[s * n_descriptions + d]; }

    static TablePolicy uniform(int s, int d, int a) {
        TablePolicy p(s, d, a);
        for (auto& r : p.rows) {
            r.defined = true;
            r.p.assign(a, 1.0 / a);
        }
        return p;
    }
};

// Marginal P(a|s) induced by a conditional policy via Lemma 1:
// P(a|s) = sum_d P*(d|s) P(a|s,d). Undefined policy rows under a positive
// prior are treated as uniform (they are never exercised by the exact engine,
// which keeps every supported row defined).
inline std::vector<double> induced_marginal(const DerivedDistributions& derived, int state,
                                            const TablePolicy& policy) {
    const int D = derived.n_descriptions, A = derived.n_actions;
    std::vector<double> m(A, 0.0);
    const Row& prior = derived.description_prior[state];
    if (!prior.defined) return m;
    for (int d = 0; d < D; ++d) {
        if (prior.p[d] <= 0.0) continue;
        const Row& r = policy.row(state, d);
        if (r.defined) {
            for (int a = 0; a < A; ++a) m[a] += prior.p[d] * r.p[a];
        } else {
            for (int a = 0; a < A; ++a) m[a] += prior.p[d] / A;
        }
    }
    return m;
}

// The W operator: marginalize the policy per Assumption 1's Q_theta, then map
// to the Bayes-optimal policy of the induced data distribution. pi* is its
// fixed point.
inline TablePolicy w_operator(const DerivedDistributions& derived, const TablePolicy& policy) {
    TablePolicy out(derived.n_states, derived.n_descriptions, derived.n_actions);
    for (int s = 0; s < derived.n_states; ++s) {
        if (derived.state_marginal[s] <= 0.0) continue;
        const auto marginal = induced_marginal(derived, s, policy);
        auto rows = bayes_optimal_policy(derived, s, marginal);
        for (int d = 0; d < derived.n_descriptions; ++d) out.row(s, d) = std::move(rows[d]);
    }
    return out;
}

inline TablePolicy optimal_policy_table(const DerivedDistributions& derived) {
    TablePolicy p(derived.n_states, derived.n_descriptions, derived.n_actions);
    for (int s = 0; s < derived.n_states; ++s)
        for (int d = 0; d < derived.n_descriptions; ++d) p.row(s, d) = derived.policy_row(s, d);
    return p;
}

// Probability-weighted mean L1 distance between two conditional policies,
// restricted to rows supported by P*(s, d) and defined in both.
inline double policy_l1(const DerivedDistributions& derived, const TablePolicy& p,
                        const TablePolicy& q) {
    double total_w = 0.0, acc = 0.0;
    for (int s = 0; s < derived.n_states; ++s)
        for (int d = 0; d < derived.n_descriptions; ++d) {
            const double w = derived.request(s, d);
            if (w <= 0.0) continue;
            const Row& a = p.row(s, d);
            const Row& b = q.row(s, d);
            if (!a.defined || !b.defined) continue;
            acc += w * l1_distance(a.p, b.p);
            total_w += w;
        }
    return total_w > 0.0 ? acc / total_w : 0.0;
}

// Worst-row L1 distance over supported, mutually defined rows.
inline double policy_l1_max(const DerivedDistributions& derived, const TablePolicy& p,
                            const TablePolicy& q) {
    double worst = 0.0;
    for (int s = 0; s < derived.n_states; ++s)
        for (int d = 0; d < derived.n_descriptions; ++d) {
            if (derived.request(s, d) <= 0.0) continue;
            const Row& a = p.row(s, d);
            const Row& b = q.row(s, d);
            if (!a.defined || !b.defined) continue;
            worst = std::max(worst, l1_distance(a.p, b.p));
        }
    return worst;
}

// ----------------------------------------------------------------------------
// Traces.

struct EpochStats {
    int epoch = 0;                        // n, starting at 1
    std::vector<double> kl_potential;     // per state: KL(P*(a|s) || P_n(a|s))
    std::vector<double> lemma5_lhs;       // per state: KL_{n+1} - KL_n
    std::vector<double> lemma5_rhs;       // per state: -KL(P*(d|s) || P_n(d|s))
    std::vector<double> avg_gap_l2;       // per state: ||P*(a|s) - avg_{k<=n} P_k(a|s)||_2
    std::vector<double> theorem6_bound;   // per state: (1/sigma_min) sqrt(2 ln|A| / n)
    double sampled_l1_error = 0.0;        // sampled mode: E_{D_n}||D_n - fitted||_1
};

struct TheoryTrace {
    bool exact = true;
    bool uniform_init = true;
    int epochs = 0;
    int samples_per_epoch = 0;
    std::vector<double> sigma;                    // per state
    std::vector<EpochStats> stats;                // one per epoch
    std::vector<std::vector<double>> marginals;   // [epoch][s*A + a], P_n(a|s)
    std::vector<std::vector<double>> avg_marginals;
    TablePolicy final_policy;                     // P_{t+1}(a|s,d)
    TablePolicy avg_policy;                       // (1/t) sum_n P_n(a|s,d)
};

struct EpochAdelOptions {
    int epochs = 16;
    bool exact = true;
    int samples_per_epoch = 0;      // sampled mode only
    double smoothing = 1e-3;        // add-lambda_s for the sampled-mode MLE
    std::uint64_t seed = 1;
};

namespace detail {

inline void accumulate_epoch_stats(const DerivedDistributions& derived,
                                   const std::vector<double>& marginal_flat,
                                   const std::vector<double>& avg_flat, int epoch,
                                   const std::vector<double>& sigma, EpochStats& st) {
    const int S = derived.n_states, A = derived.n_actions;
    st.epoch = epoch;
    st.kl_potential.assign(S, 0.0);
    st.avg_gap_l2.assign(S, 0.0);
    st.theorem6_bound.assign(S, 0.0);
    for (int s = 0; s < S; ++s) {
        if (derived.state_marginal[s] <= 0.0) continue;
        std::span<const double> m(marginal_flat.data() + s * A, static_cast<std::size_t>(A));
        std::span<const double> avg(avg_flat.data() + s * A, static_cast<std::size_t>(A));
        st.kl_potential[s] = kl_divergence(derived.optimal_marginal[s].p, m);
        st.avg_gap_l2[s] = l2_distance(derived.optimal_marginal[s].p, avg);
        st.theorem6_bound[s] = sigma[s] > 0.0
            ? (1.0 / sigma[s]) * std::sqrt(2.0 * std::log(static_cast<double>(A)) / epoch)
            : std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

// Runs EpochADEL for `epochs` epochs from the uniform initial policy. Exact
// mode applies the Bayes-optimal update in closed form (the M -> infinity
// idealization); sampled mode draws `samples_per_epoch` (task, execution,
// description) triples per epoch and fits an add-lambda smoothed count MLE.
inline TheoryTrace run_epoch_adel(const CBInstance& inst, const EpochAdelOptions& opt) {
    const DerivedDistributions derived = derive_conditionals(inst);
    const int S = derived.n_states, D = derived.n_descriptions, A = derived.n_actions;
    if (opt.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!opt.exact && opt.samples_per_epoch < 1)
        throw std::invalid_argument("sampled mode requires samples_per_epoch >= 1");

    TheoryTrace trace;
    trace.exact = opt.exact;
    trace.epochs = opt.epochs;
    trace.samples_per_epoch = opt.exact ? 0 : opt.samples_per_epoch;
    trace.sigma.resize(S);
    for (int s = 0; s < S; ++s) trace.sigma[s] = sigma_min(derived, s);

    TablePolicy policy = TablePolicy::uniform(S, D, A);
    TablePolicy avg_policy = policy;  // running average of conditionals
    std::vector<double> marginal_flat(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<double> avg_marginal_flat(static_cast<std::size_t>(S) * A, 0.0);

    Rng rng(opt.seed);
    Rng task_rng = rng.stream("theory-task");
    Rng act_rng = rng.stream("theory-action");
    Rng desc_rng = rng.stream("theory-desc");

    auto refresh_marginal = [&](const TablePolicy& p, std::vector<double>& flat) {
        for (int s = 0; s < S; ++s) {
            const auto m = induced_marginal(derived, s, p);
            for (int a = 0; a < A; ++a) flat[s * A + a] = m[a];
        }
    };
    refresh_marginal(policy, marginal_flat);

    for (int n = 1; n <= opt.epochs; ++n) {
        // running average over epochs 1..n
        for (std::size_t i = 0; i < marginal_flat.size(); ++i)
            avg_marginal_flat[i] += (marginal_flat[i] - avg_marginal_flat[i]) / n;
        for (int s = 0; s < S; ++s)
            for (int d = 0; d < D; ++d) {
                Row& acc = avg_policy.row(s, d);
                const Row& cur = policy.row(s, d);
                if (!cur.defined) continue;
                for (int a = 0; a < A; ++a) acc.p[a] += (cur.p[a] - acc.p[a]) / n;
            }

        EpochStats st;
        detail::accumulate_epoch_stats(derived, marginal_flat, avg_marginal_flat, n,
                                       trace.sigma, st);
        st.lemma5_lhs.assign(S, 0.0);
        st.lemma5_rhs.assign(S, 0.0);

        TablePolicy next_policy(S, D, A);
        if (opt.exact) {
            for (int s = 0; s < S; ++s) {
                if (derived.state_marginal[s] <= 0.0) continue;
                std::span<const double> m(marginal_flat.data() + s * A,
                                          static_cast<std::size_t>(A));
                auto rows = bayes_optimal_policy(derived, s, m, n);
                for (int d = 0; d < D; ++d) next_policy.row(s, d) = std::move(rows[d]);
            }
        } else {
            // One sampled epoch: roll the current policy, query the consistent
            // teacher, fit the smoothed count MLE over (s, d-hat, a) triples.
            std::vector<double> counts(static_cast<std::size_t>(S) * D * A, 0.0);
            for (int m = 0; m < opt.samples_per_epoch; ++m) {
                const int sd = task_rng.categorical(derived.request_dist);
                const int s = sd / D, d_star = sd % D;
                const Row& prow = policy.row(s, d_star);
                const int a = prow.defined ? act_rng.categorical(prow.p)
                                           : static_cast<int>(act_rng.below(A));
                const Row& trow = derived.teacher_row(s, a);
                const int d_hat = desc_rng.categorical(trow.p);
                counts[(static_cast<std::size_t>(s) * D + d_hat) * A + a] += 1.0;
            }
            for (int s = 0; s < S; ++s)
                for (int d = 0; d < D; ++d) {
                    Row& r = next_policy.row(s, d);
                    r.defined = true;
                    r.p.assign(A, 0.0);
                    double z = 0.0;
                    for (int a = 0; a < A; ++a)
                        z += counts[(static_cast<std::size_t>(s) * D + d) * A + a] + opt.smoothing;
                    for (int a = 0; a < A; ++a)
                        r.p[a] = (counts[(static_cast<std::size_t>(s) * D + d) * A + a] +
                                  opt.smoothing) / z;
                }
            // Distance of the fitted conditional from its Bayes-optimal target,
            // weighted by the epoch's own data distribution D_n(s, d).
            double err = 0.0, wtot = 0.0;
            for (int s = 0; s < S; ++s) {
                if (derived.state_marginal[s] <= 0.0) continue;
                std::span<const double> m(marginal_flat.data() + s * A,
                                          static_cast<std::size_t>(A));
                auto target = bayes_optimal_policy(derived, s, m, n);
                for (int d = 0; d < D; ++d) {
                    if (!target[d].defined) continue;
                    double dn_sd = 0.0;
                    for (int a = 0; a < A; ++a) {
                        const Row& t = derived.teacher_row(s, a);
                        if (t.defined) dn_sd += t.p[d] * derived.state_marginal[s] * m[a];
                    }
                    if (dn_sd <= 0.0) continue;
                    err += dn_sd * l1_distance(target[d].p, next_policy.row(s, d).p);
                    wtot += dn_sd;
                }
            }
            st.sampled_l1_error = wtot > 0.0 ? err / wtot : 0.0;
        }

        std::vector<double> next_marginal_flat(marginal_flat.size(), 0.0);
        refresh_marginal(next_policy, next_marginal_flat);

        for (int s = 0; s < S; ++s) {
            if (derived.state_marginal[s] <= 0.0) continue;
            std::span<const double> m(marginal_flat.data() + s * A, static_cast<std::size_t>(A));
            std::span<const double> mn(next_marginal_flat.data() + s * A,
                                       static_cast<std::size_t>(A));
            const double kl_next = kl_divergence(derived.optimal_marginal[s].p, mn);
            st.lemma5_lhs[s] = kl_next - st.kl_potential[s];
            // P_n(d|s) = sum_a P*(d|[s,a]) P_n(a|s)
            std::vector<double> dn(D, 0.0);
            for (int a = 0; a < A; ++a) {
                const Row& t = derived.teacher_row(s, a);
                if (t.defined)
                    for (int d = 0; d < D; ++d) dn[d] += t.p[d] * m[a];
            }
            st.lemma5_rhs[s] = -kl_divergence(derived.description_prior[s].p, dn);
        }

        trace.stats.push_back(std::move(st));
        trace.marginals.push_back(marginal_flat);
        trace.avg_marginals.push_back(avg_marginal_flat);
        policy = std::move(next_policy);
        marginal_flat = std::move(next_marginal_flat);
    }

    trace.final_policy = std::move(policy);
    trace.avg_policy = std::move(avg_policy);
    return trace;
}

// ----------------------------------------------------------------------------
// Verification reports.

struct CheckReport {
    std::string name;
    int checks = 0;
    int violations = 0;
    int skipped = 0;                 // states skipped (Assumption 2 violated, etc.)
    double max_violation = 0.0;      // worst amount by which a bound was exceeded
    double min_slack = std::numeric_limits<double>::infinity();  // tightest margin seen
    bool passed() const { return violations == 0 && checks > 0; }

    json to_json() const {
        return json{{"name", name},       {"checks", checks},
                    {"violations", violations}, {"skipped", skipped},
                    {"max_violation", max_violation},
                    {"min_slack", std::isfinite(min_slack) ? json(min_slack) : json("inf")}};
    }
};

inline constexpr double kBoundSlack = 1e-9;
// Below this, a computed minimum singular value is treated as zero
// (Assumption 2 violated); well under any meaningful sigma floor.
inline constexpr double kSigmaEps = 1e-7;

// Theorem-6 rate check: for every state and epoch t,
// ||P*(a|s) - (1/t) sum P_n(a|s)||_2 <= (1/sigma_min) sqrt(2 ln|A| / t).
inline CheckReport verify_theorem6(const TheoryTrace& trace, const DerivedDistributions& derived) {
    if (!trace.exact || !trace.uniform_init)
        throw std::invalid_argument("theorem6 verification needs an exact-mode trace with uniform init");
    CheckReport rep{.name = "theorem6"};
    for (int s = 0; s < derived.n_states; ++s) {
        if (derived.state_marginal[s] <= 0.0) continue;
        if (trace.sigma[s] < kSigmaEps) {
            rep.skipped++;  // Assumption 2 violated for this state
            continue;
        }
        for (const auto& st : trace.stats) {
            const double slack = st.theorem6_bound[s] - st.avg_gap_l2[s];
            rep.checks++;
            rep.min_slack = std::min(rep.min_slack, slack);
            if (slack < -kBoundSlack) {
                rep.violations++;
                rep.max_violation = std::max(rep.max_violation, -slack);
            }
        }
    }
    return rep;
}

// Lemma-5 potential difference check per epoch and state.
inline CheckReport verify_lemma5(const TheoryTrace& trace) {
    CheckReport rep{.name = "lemma5"};
    for (const auto& st : trace.stats)
        for (std::size_t s = 0; s < st.lemma5_lhs.size(); ++s) {
            const double slack = st.lemma5_rhs[s] - st.lemma5_lhs[s];
            rep.checks++;
            rep.min_slack = std::min(rep.min_slack, slack);
            if (slack < -kBoundSlack) {
                rep.violations++;
                rep.max_violation = std::max(rep.max_violation, -slack);
            }
        }
    return rep;
}

// ----------------------------------------------------------------------------
// Alg. 2: learning with access to the true marginal. Draws (e-hat, d-hat) with
// e-hat ~ P*(e | s) and d-hat from the consistent teacher, then fits the plain
// count MLE conditional. Unobserved (s, d) rows stay undefined.
inline TablePolicy true_marginal_learner(const DerivedDistributions& derived, int n_samples,
                                         Rng& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const int S = derived.n_states, D = derived.n_descriptions, A = derived.n_actions;
    std::vector<double> counts(static_cast<std::size_t>(S) * D * A, 0.0);
    for (int i = 0; i < n_samples; ++i) {
        const int s = rng.categorical(derived.state_marginal);
        const int a = rng.categorical(derived.optimal_marginal[s].p);
        const int d = rng.categorical(derived.teacher_row(s, a).p);
        counts[(static_cast<std::size_t>(s) * D + d) * A + a] += 1.0;
    }
    TablePolicy policy(S, D, A);
    for (int s = 0; s < S; ++s)
        for (int d = 0; d < D; ++d) {
            double z = 0.0;
            for (int a = 0; a < A; ++a) z += counts[(static_cast<std::size_t>(s) * D + d) * A + a];
            if (z <= 0.0) continue;
            Row& r = policy.row(s, d);
            r.defined = true;
            r.p.assign(A, 0.0);
            for (int a = 0; a < A; ++a)
                r.p[a] = counts[(static_cast<std::size_t>(s) * D + d) * A + a] / z;
        }
    return policy;
}

// ----------------------------------------------------------------------------
// Random instance generation: Dirichlet(1) joints, rejection-resampled until
// every state's description matrix clears the sigma_min floor.
struct InstanceGenOptions {
    int max_states = 4;
    int max_actions = 6;
    int max_descriptions = 8;
    double sigma_floor = 1e-3;
    int max_attempts = 1000;
};

inline CBInstance random_instance(Rng rng, const InstanceGenOptions& opt = {}) {
    for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
        const int S = 1 + static_cast<int>(rng.below(opt.max_states));
        const int A = 2 + static_cast<int>(rng.below(opt.max_actions - 1));
        // sigma_min > 0 needs at least as many descriptions as actions.
        const int D = A + static_cast<int>(rng.below(opt.max_descriptions - A + 1));
        CBInstance inst(S, D, A);
        double total = 0.0;
        for (double& v : inst.joint) {
            v = rng.exponential();
            total += v;
        }
        for (double& v : inst.joint) v /= total;
        // exact renormalization pass
        total = inst.total_mass();
        for (double& v : inst.joint) v /= total;
        inst.seed = rng.root_seed();

        const auto derived = derive_conditionals(inst);
        bool ok = true;
        for (int s = 0; s < S && ok; ++s) {
            if (derived.state_marginal[s] <= 0.0 || sigma_min(derived, s) < opt.sigma_floor)
                ok = false;
        }
        if (ok) return inst;
    }
    throw std::runtime_error("random_instance: rejection sampling exhausted attempts");
}

}  // namespace iliad::theory
