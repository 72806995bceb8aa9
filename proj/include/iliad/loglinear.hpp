#pragma once

// Softmax-over-valid-actions policy on hashed features, temperature 1.
// Trained by plain stochastic gradient ascent on log-likelihood.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "iliad/features.hpp"
#include "iliad/protocol.hpp"
#include "iliad/types.hpp"

#include "json.hpp"

namespace iliad {

class LogLinearPolicy : public ConditionalPolicy {
public:
    explicit LogLinearPolicy(std::uint32_t dim = 1u << 19) : dim_(round_pow2(dim)), w_(dim_, 0.0) {}

    std::uint32_t dim() const { return dim_; }
    std::vector<double>& weights() { return w_; }
    const std::vector<double>& weights() const { return w_; }

    void action_distribution(const EnvView& env, StateId s, const Description& request,
                             std::span<const ActionId> valid,
                             std::vector<double>& probs) const override {
        Scratch& sc = scratch();
        score_actions(env, s, request, valid, sc);
        probs.assign(valid.size(), 0.0);
        double mx = sc.scores[0];
        for (double v : sc.scores) mx = std::max(mx, v);
        double z = 0.0;
        for (std::size_t i = 0; i < valid.size(); ++i) {
            probs[i] = std::exp(sc.scores[i] - mx);
            z += probs[i];
        }
        for (double& p : probs) p /= z;
    }

    double log_prob(const EnvView& env, StateId s, const Description& request, ActionId action)
        const {
        Scratch& sc = scratch();
        sc.valid.clear();
        env.valid_actions(s, sc.valid);
        std::vector<double> probs;
        action_distribution(env, s, request, sc.valid, probs);
        for (std::size_t i = 0; i < sc.valid.size(); ++i)
            if (sc.valid[i] == action) return std::log(probs[i]);
        throw ProtocolViolation("action not valid in state", s, action);
    }

    // One SGA step on log pi(action | s, request), step size alpha.
    void mle_step(const EnvView& env, StateId s, const Description& request, ActionId action,
                  double alpha) {
        gradient_step(env, s, request, action, alpha, 1.0);
    }

    // REINFORCE-style step: alpha * coeff * grad log pi(action | s, request).
    void weighted_step(const EnvView& env, StateId s, const Description& request, ActionId action,
                       double alpha, double coeff) {
        gradient_step(env, s, request, action, alpha, coeff);
    }

    json checkpoint(double lambda, long episode) const {
        json idx = json::array(), val = json::array();
        for (std::uint32_t i = 0; i < dim_; ++i)
            if (w_[i] != 0.0) {
                idx.push_back(i);
                val.push_back(w_[i]);
            }
        return json{{"feature_dim", dim_},
                    {"weights", {{"indices", idx}, {"values", val}}},
                    {"lambda", lambda},
                    {"episode", episode}};
    }

    static LogLinearPolicy from_checkpoint(const json& j) {
        LogLinearPolicy p(j.at("feature_dim").get<std::uint32_t>());
        const auto& idx = j.at("weights").at("indices");
        const auto& val = j.at("weights").at("values");
        for (std::size_t i = 0; i < idx.size(); ++i)
            p.w_[idx[i].get<std::uint32_t>()] = val[i].get<double>();
        return p;
    }

private:
    struct Scratch {
        std::vector<ActionId> valid;
        std::vector<double> scores;
        std::vector<FeatureVec> feats;
        std::vector<AtomId> satoms, aatoms;
        std::vector<std::uint64_t> ctx;
    };

    static Scratch& scratch() {
        thread_local Scratch sc;
        return sc;
    }

    static std::uint32_t round_pow2(std::uint32_t v) {
        std::uint32_t p = 1;
        while (p < v) p <<= 1;
        return p;
    }

    void score_actions(const EnvView& env, StateId s, const Description& request,
                       std::span<const ActionId> valid, Scratch& sc) const {
        sc.satoms.clear();
        env.state_atoms(s, sc.satoms);
        featurize_context(sc.satoms, request, sc.ctx);
        if (sc.feats.size() < valid.size()) sc.feats.resize(valid.size());
        sc.scores.assign(valid.size(), 0.0);
        for (std::size_t i = 0; i < valid.size(); ++i) {
            sc.aatoms.clear();
            env.action_atoms(s, valid[i], sc.aatoms);
            featurize_action(sc.ctx, sc.aatoms, dim_, sc.feats[i]);
            double score = 0.0;
            for (std::uint32_t f : sc.feats[i].idx) score += w_[f];
            sc.scores[i] = score;
        }
    }

    void gradient_step(const EnvView& env, StateId s, const Description& request, ActionId action,
                       double alpha, double coeff) {
        Scratch& sc = scratch();
        sc.valid.clear();
        env.valid_actions(s, sc.valid);
        score_actions(env, s, request, sc.valid, sc);
        double mx = sc.scores[0];
        for (double v : sc.scores) mx = std::max(mx, v);
        double z = 0.0;
        for (double& v : sc.scores) {
            v = std::exp(v - mx);
            z += v;
        }
        int target = -1;
        for (std::size_t i = 0; i < sc.valid.size(); ++i)
            if (sc.valid[i] == action) target = static_cast<int>(i);
        if (target < 0) throw ProtocolViolation("action not valid in state", s, action);
        for (std::size_t i = 0; i < sc.valid.size(); ++i) {
            const double pi = sc.scores[i] / z;
            const double g = alpha * coeff * ((static_cast<int>(i) == target ? 1.0 : 0.0) - pi);
            if (g == 0.0) continue;
            for (std::uint32_t f : sc.feats[i].idx) w_[f] += g;
        }
    }

    std::uint32_t dim_;
    std::vector<double> w_;
};

}  // namespace iliad
