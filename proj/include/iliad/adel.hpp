#pragma once

// ADEL learners: the replay-buffer form (mixture sampling + repeated MLE over
// the buffer) and the dual-policy experimental form (a behavior policy fit to
// the mixture with a lambda-weighted loss). Both learn a request-conditioned
// log-linear policy purely from (execution, description) pairs.

#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iliad/loglinear.hpp"
#include "iliad/protocol.hpp"
#include "iliad/rng.hpp"
#include "iliad/types.hpp"

namespace iliad::adel {

// Request-agnostic explorer: a program or policy that synthesizes executions
// from a start state (the approximate marginal over executions).
class ExecutionSampler {
public:
    virtual ~ExecutionSampler() = default;
    virtual Execution sample(const EnvView& env, StateId start, Rng& rng) const = 0;
};

struct MixtureConfig {
    double lambda = 0.5;     // mass on the explorer
    double beta = 0.5;       // geometric annealing rate
    double lambda_min = 0.0;
    long anneal_every = 0;   // episodes; 0 = never

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
        if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("beta must be in (0,1)");
        if (lambda_min < 0.0) throw std::invalid_argument("lambda_min must be >= 0");
    }
};

inline double anneal(const MixtureConfig& cfg, double lambda) {
    return std::max(cfg.lambda_min, lambda * cfg.beta);
}

struct ReplayBuffer {
    std::size_t capacity = 0;  // 0 = unbounded
    std::vector<std::pair<Execution, Description>> items;
    std::size_t write_pos = 0;

    void push(Execution e, Description d) {
        if (capacity == 0 || items.size() < capacity) {
            items.emplace_back(std::move(e), std::move(d));
        } else {
            items[write_pos] = {std::move(e), std::move(d)};
            write_pos = (write_pos + 1) % capacity;
        }
    }
    std::size_t size() const { return items.size(); }
};

// Draws from the lambda-mixture of the explorer's execution distribution and
// the conditional policy's: Bernoulli(lambda) picks the component, so the
// induced distribution is exactly lambda * P_omega + (1 - lambda) * P_theta.
inline Execution sample_execution_mixture(const ExecutionSampler& explorer,
                                          const ConditionalPolicy& policy, double lambda,
                                          const EnvView& env, StateId start,
                                          const Description& request, Rng& rng) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
    if (rng.bernoulli(lambda)) return explorer.sample(env, start, rng);
    return rollout_policy(env, policy, start, request, rng, false);
}

struct AdelOptions {
    std::uint32_t feature_dim = 1u << 19;
    double step_size = 0.1;
    int grad_steps = 4;       // G
    int batch_size = 32;
    bool drop_empty = true;   // discard (e, null) pairs
    std::size_t buffer_capacity = 0;
    MixtureConfig mixture;
};

// Alg.-style replay learner: mixture rollout, buffer append, G mini-batch
// gradient steps on the buffer log-likelihood per episode.
class AdelLearner : public Learner {
public:
    AdelLearner(const ExecutionSampler* explorer, AdelOptions opt)
        : opt_(opt), explorer_(explorer), theta_(opt.feature_dim), lambda_(opt.mixture.lambda) {
        opt_.mixture.validate();
        buffer_.capacity = opt_.buffer_capacity;
    }

    Execution generate_execution(const EnvView& env, StateId start, const Description& request,
                                 Rng& rng) override {
        return sample_execution_mixture(*explorer_, theta_, lambda_, env, start, request, rng);
    }

    void update(const EnvView& env, const Description& /*request*/, const Execution& execution,
                const Description& teacher_description, Rng& rng) override {
        ++episode_;
        if (!teacher_description.is_empty() || !opt_.drop_empty)
            buffer_.push(execution, teacher_description);
        if (buffer_.size() > 0) {
            for (int g = 0; g < opt_.grad_steps; ++g)
                for (int b = 0; b < opt_.batch_size; ++b) {
                    const auto& [e, d] = buffer_.items[rng.below(buffer_.size())];
                    const Step& st = e.steps[rng.below(e.steps.size())];
                    theta_.mle_step(env, st.state, d, st.action, opt_.step_size);
                }
        }
        if (opt_.mixture.anneal_every > 0 && episode_ % opt_.mixture.anneal_every == 0)
            lambda_ = anneal(opt_.mixture, lambda_);
    }

    const ConditionalPolicy& policy() const override { return theta_; }
    const LogLinearPolicy& theta() const { return theta_; }
    LogLinearPolicy& theta_mutable() { return theta_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    double lambda() const { return lambda_; }
    long episodes_seen() const { return episode_; }

private:
    AdelOptions opt_;
    const ExecutionSampler* explorer_;
    LogLinearPolicy theta_;
    ReplayBuffer buffer_;
    double lambda_;
    long episode_ = 0;
};

// Dual-policy experimental form: executions come from a behavior policy
// pi_beta trained to approximate the mixture via the lambda-weighted loss
// lambda * loglik(explorer sample) + (1 - lambda) * loglik(own execution);
// the target policy pi_theta trains on (own execution, description) only.
class AdelPracticalLearner : public Learner {
public:
    AdelPracticalLearner(const ExecutionSampler* explorer, AdelOptions opt)
        : opt_(opt), explorer_(explorer), theta_(opt.feature_dim), beta_(opt.feature_dim),
          lambda_(opt.mixture.lambda) {
        opt_.mixture.validate();
    }

    Execution generate_execution(const EnvView& env, StateId start, const Description& request,
                                 Rng& rng) override {
        last_start_ = start;
        return rollout_policy(env, beta_, start, request, rng, false);
    }

    void update(const EnvView& env, const Description& /*request*/, const Execution& execution,
                const Description& teacher_description, Rng& rng) override {
        ++episode_;
        // The conditional policy trains only on described executions; the
        // behavior policy's lambda-weighted fit runs every episode (with the
        // description as given, empty included), otherwise it cannot track
        // the mixture through the early all-empty phase.
        if (!teacher_description.is_empty() || !opt_.drop_empty)
            for (const Step& st : execution.steps)
                theta_.mle_step(env, st.state, teacher_description, st.action, opt_.step_size);
        const Execution marginal_sample = explorer_->sample(env, last_start_, rng);
        if (lambda_ > 0.0)
            for (const Step& st : marginal_sample.steps)
                beta_.weighted_step(env, st.state, teacher_description, st.action,
                                    opt_.step_size, lambda_);
        if (lambda_ < 1.0)
            for (const Step& st : execution.steps)
                beta_.weighted_step(env, st.state, teacher_description, st.action,
                                    opt_.step_size, 1.0 - lambda_);
        if (opt_.mixture.anneal_every > 0 && episode_ % opt_.mixture.anneal_every == 0)
            lambda_ = anneal(opt_.mixture, lambda_);
    }

    const ConditionalPolicy& policy() const override { return theta_; }
    const LogLinearPolicy& theta() const { return theta_; }
    const LogLinearPolicy& beta() const { return beta_; }
    double lambda() const { return lambda_; }

private:
    AdelOptions opt_;
    const ExecutionSampler* explorer_;
    LogLinearPolicy theta_;
    LogLinearPolicy beta_;
    double lambda_;
    long episode_ = 0;
    StateId last_start_ = 0;
};

}  // namespace iliad::adel
