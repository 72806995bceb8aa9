#pragma once

// Adapter exposing a CBInstance as a one-step Environment, plus the
// consistent teacher that samples descriptions from the ground-truth
// conditional. Used by the protocol-level tests and the theory CLI.

#include <stdexcept>
#include <string>
#include <vector>

#include "iliad/protocol.hpp"
#include "iliad/theory.hpp"

namespace iliad::theory {

class CBEnv : public Environment {
public:
    explicit CBEnv(CBInstance inst)
        : inst_(std::move(inst)), derived_(derive_conditionals(inst_)) {
        for (int d = 0; d < inst_.n_descriptions; ++d)
            vocab_.intern("d" + std::to_string(d));
        for (int s = 0; s < inst_.n_states; ++s)
            for (int d = 0; d < inst_.n_descriptions; ++d)
                if (derived_.request(s, d) > 0.0) {
                    Task t;
                    t.start_state = s;
                    t.request.tokens = {static_cast<TokenId>(d)};
                    t.goal_id = s * inst_.n_descriptions + d;
                    tasks_.push_back(t);
                    task_weights_.push_back(derived_.request(s, d));
                }
    }

    const CBInstance& instance() const { return inst_; }
    const DerivedDistributions& derived() const { return derived_; }

    int horizon() const override { return 1; }
    int num_actions() const override { return inst_.n_actions; }
    ActionId stop_action() const override { return -1; }  // no stop in one-step worlds

    void valid_actions(StateId /*s*/, std::vector<ActionId>& out) const override {
        out.resize(inst_.n_actions);
        for (int a = 0; a < inst_.n_actions; ++a) out[a] = a;
    }

    StateId apply_action(StateId s, ActionId a) const override {
        if (a < 0 || a >= inst_.n_actions) throw ProtocolViolation("invalid bandit action", s, a);
        return s;
    }

    void state_atoms(StateId s, std::vector<AtomId>& out) const override {
        out.push_back(static_cast<AtomId>(s));
    }

    void action_atoms(StateId /*s*/, ActionId a, std::vector<AtomId>& out) const override {
        out.push_back(1000u + static_cast<AtomId>(a));
    }

    const Vocab& vocab() const override { return vocab_; }

    Task sample_task(Split /*split*/, Rng& rng) const override {
        return tasks_[rng.categorical(task_weights_)];
    }

    std::span<const Task> eval_tasks(Split /*split*/) const override { return tasks_; }

    // Hidden reward: 1 iff the action is optimal for the request.
    double evaluation_return(const Task& task, const Execution& e) const override {
        return reward_binary(task, e);
    }

    double reward_binary(const Task& task, const Execution& e) const override {
        const int s = task.start_state;
        const int d = task.goal_id % inst_.n_descriptions;
        const Row& row = derived_.policy_row(s, d);
        return row.defined && row.p[e.steps.front().action] > 0.0 ? 1.0 : 0.0;
    }

    double reward_continuous(const Task& task, const Execution& e) const override {
        return reward_binary(task, e);
    }

    ActionId oracle_action(const Task& task, StateId /*s*/) const override {
        const int s = task.start_state;
        const int d = task.goal_id % inst_.n_descriptions;
        const Row& row = derived_.policy_row(s, d);
        int best = 0;
        for (int a = 1; a < inst_.n_actions; ++a)
            if (row.p[a] > row.p[best]) best = a;
        return best;
    }

    // Exact policy value under the task distribution.
    double exact_policy_value(const TablePolicy& policy) const {
        double v = 0.0;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            const int s = tasks_[i].start_state;
            const int d = tasks_[i].goal_id % inst_.n_descriptions;
            const Row& pi = policy.row(s, d);
            const Row& star = derived_.policy_row(s, d);
            if (!pi.defined) continue;
            double succ = 0.0;
            for (int a = 0; a < inst_.n_actions; ++a)
                if (star.p[a] > 0.0) succ += pi.p[a];
            v += task_weights_[i] * succ;
        }
        double z = 0.0;
        for (double w : task_weights_) z += w;
        return v / z;
    }

private:
    CBInstance inst_;
    DerivedDistributions derived_;
    Vocab vocab_;
    std::vector<Task> tasks_;
    std::vector<double> task_weights_;
};

// Wraps a theory TablePolicy (descriptions indexed by their single token).
class CBTablePolicy : public ConditionalPolicy {
public:
    explicit CBTablePolicy(TablePolicy table) : table_(std::move(table)) {}

    void action_distribution(const EnvView& /*env*/, StateId s, const Description& request,
                             std::span<const ActionId> valid,
                             std::vector<double>& probs) const override {
        const int d = request.tokens.front();
        const Row& row = table_.row(s, d);
        probs.assign(valid.size(), 1.0 / valid.size());
        if (row.defined)
            for (std::size_t i = 0; i < valid.size(); ++i) probs[i] = row.p[valid[i]];
    }

    const TablePolicy& table() const { return table_; }

private:
    TablePolicy table_;
};

// Teachers whose response distribution is enumerable per execution.
class EnumerableTeacher : public Teacher {
public:
    virtual std::vector<double> response_distribution(StateId s, ActionId a) const = 0;
};

// Consistent teacher: d-hat ~ P*(d | [s, a]).
class CBTeacher : public EnumerableTeacher {
public:
    explicit CBTeacher(const CBEnv* env) : env_(env) {}

    Description describe(const Task& /*task*/, const Execution& e, Rng& rng) const override {
        const Step& st = e.steps.front();
        const Row& row = env_->derived().teacher_row(st.state, st.action);
        Description d;
        if (row.defined) d.tokens = {static_cast<TokenId>(rng.categorical(row.p))};
        return d;
    }

    std::vector<double> response_distribution(StateId s, ActionId a) const override {
        const Row& row = env_->derived().teacher_row(s, a);
        if (row.defined) return row.p;
        return std::vector<double>(env_->instance().n_descriptions, 0.0);
    }

protected:
    const CBEnv* env_;
};

class UnsupportedOperation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// alpha-consistency diagnostic: max over executions of the total-variation
// distance between the teacher's response distribution and P*(d | e).
// Only enumerable (contextual-bandit) teachers support it.
inline double tv_consistency(const Teacher& teacher, const CBEnv& env) {
    const auto* enumerable = dynamic_cast<const EnumerableTeacher*>(&teacher);
    if (!enumerable)
        throw UnsupportedOperation("tv_consistency needs an enumerable description space");
    const auto& derived = env.derived();
    double worst = 0.0;
    for (int s = 0; s < env.instance().n_states; ++s)
        for (int a = 0; a < env.instance().n_actions; ++a) {
            const Row& truth = derived.teacher_row(s, a);
            if (!truth.defined) continue;  // execution has zero mass
            const auto got = enumerable->response_distribution(s, a);
            worst = std::max(worst, total_variation(truth.p, got));
        }
    return worst;
}

}  // namespace iliad::theory
