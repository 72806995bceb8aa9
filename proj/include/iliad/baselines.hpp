#pragma once

// Interactive IL and RL baselines: DAgger-style learning from an optimal-
// action oracle over the learner's own visited states, and episodic
// REINFORCE with a moving-average baseline.

#include <utility>
#include <vector>

#include "iliad/loglinear.hpp"
#include "iliad/protocol.hpp"
#include "iliad/rng.hpp"

namespace iliad::baselines {

struct DaggerOptions {
    std::uint32_t feature_dim = 1u << 19;
    double step_size = 0.1;
    int grad_steps = 4;  // mirrored from the description learner for fairness
    int batch_size = 32;
};

struct LabeledState {
    StateId state;
    Description request;
    ActionId oracle_action;
};

class DaggerLearner {
public:
    explicit DaggerLearner(DaggerOptions opt) : opt_(opt), theta_(opt.feature_dim) {}

    Execution generate_execution(const EnvView& env, StateId start, const Description& request,
                                 Rng& rng) {
        return rollout_policy(env, theta_, start, request, rng, false);
    }

    // Labels every visited state with the oracle action and takes G
    // mini-batch MLE steps over the aggregated buffer.
    void dagger_step(const Environment& env, const Task& task, const Execution& execution,
                     Rng& rng) {
        for (const Step& st : execution.steps)
            buffer_.push_back({st.state, task.request, env.oracle_action(task, st.state)});
        for (int g = 0; g < opt_.grad_steps; ++g)
            for (int b = 0; b < opt_.batch_size; ++b) {
                const LabeledState& ls = buffer_[rng.below(buffer_.size())];
                theta_.mle_step(env, ls.state, ls.request, ls.oracle_action, opt_.step_size);
            }
    }

    const ConditionalPolicy& policy() const { return theta_; }
    const LogLinearPolicy& theta() const { return theta_; }
    const std::vector<LabeledState>& buffer() const { return buffer_; }

private:
    DaggerOptions opt_;
    LogLinearPolicy theta_;
    std::vector<LabeledState> buffer_;
};

// Convex-combination running baseline, initialized at zero.
struct MovingBaseline {
    double value = 0.0;
    double decay = 0.05;  // eta_b

    void observe(double episode_return) {
        value = (1.0 - decay) * value + decay * episode_return;
    }
};

enum class RewardKind { Binary, Continuous };

struct ReinforceOptions {
    std::uint32_t feature_dim = 1u << 19;
    double step_size = 0.05;
    double baseline_decay = 0.05;
    RewardKind reward_kind = RewardKind::Binary;
};

class ReinforceLearner {
public:
    explicit ReinforceLearner(ReinforceOptions opt) : opt_(opt), theta_(opt.feature_dim) {
        baseline_.decay = opt.baseline_decay;
    }

    Execution generate_execution(const EnvView& env, StateId start, const Description& request,
                                 Rng& rng) {
        return rollout_policy(env, theta_, start, request, rng, false);
    }

    // End-of-episode scalar feedback only: ascends
    // sum_t grad log pi(a_t | s_t, d) * (G - b), then updates b.
    void reinforce_step(const Environment& env, const Task& task, const Execution& execution) {
        const double ret = opt_.reward_kind == RewardKind::Binary
                               ? env.reward_binary(task, execution)
                               : env.reward_continuous(task, execution);
        const double advantage = ret - baseline_.value;
        if (advantage != 0.0)
            for (const Step& st : execution.steps)
                theta_.weighted_step(env, st.state, task.request, st.action, opt_.step_size,
                                     advantage);
        baseline_.observe(ret);
    }

    const ConditionalPolicy& policy() const { return theta_; }
    const LogLinearPolicy& theta() const { return theta_; }
    LogLinearPolicy& theta_mutable() { return theta_; }
    double baseline_value() const { return baseline_.value; }

private:
    ReinforceOptions opt_;
    LogLinearPolicy theta_;
    MovingBaseline baseline_;
};

}  // namespace iliad::baselines
