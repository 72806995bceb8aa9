#pragma once

// The interaction protocol: environment/teacher/learner interfaces, episode
// and run loops, and Monte-Carlo policy evaluation. Learners only ever see
// the EnvView slice of an environment and the (request, execution,
// description) triplet; rewards, goals, and oracles live on the Environment
// side of the fence.

#include <memory>
#include <span>
#include <vector>

#include "iliad/rng.hpp"
#include "iliad/types.hpp"

#include "json.hpp"

namespace iliad {

using nlohmann::json;

// The learner-visible slice of an environment: dynamics and featurization
// descriptors only.
class EnvView {
public:
    virtual ~EnvView() = default;
    virtual int horizon() const = 0;
    virtual int num_actions() const = 0;
    virtual ActionId stop_action() const = 0;
    virtual void valid_actions(StateId s, std::vector<ActionId>& out) const = 0;
    virtual StateId apply_action(StateId s, ActionId a) const = 0;
    virtual void state_atoms(StateId s, std::vector<AtomId>& out) const = 0;
    virtual void action_atoms(StateId s, ActionId a, std::vector<AtomId>& out) const = 0;
};

class Environment : public EnvView {
public:
    virtual const Vocab& vocab() const = 0;
    virtual Task sample_task(Split split, Rng& rng) const = 0;
    virtual std::span<const Task> eval_tasks(Split split) const = 0;

    // Hidden evaluation; never reachable from learner inputs.
    virtual double evaluation_return(const Task& task, const Execution& e) const = 0;
    virtual double reward_binary(const Task& task, const Execution& e) const = 0;
    virtual double reward_continuous(const Task& task, const Execution& e) const = 0;

    // Optimal-action oracle for interactive IL baselines.
    virtual ActionId oracle_action(const Task& task, StateId s) const = 0;
};

class Teacher {
public:
    virtual ~Teacher() = default;
    virtual Description describe(const Task& task, const Execution& execution, Rng& rng) const = 0;
};

class ConditionalPolicy {
public:
    virtual ~ConditionalPolicy() = default;
    virtual void action_distribution(const EnvView& env, StateId s, const Description& request,
                                     std::span<const ActionId> valid,
                                     std::vector<double>& probs) const = 0;
};

class Learner {
public:
    virtual ~Learner() = default;
    virtual Execution generate_execution(const EnvView& env, StateId start,
                                         const Description& request, Rng& rng) = 0;
    // The one feedback channel: exactly the (d-star, e-hat, d-hat) triplet.
    virtual void update(const EnvView& env, const Description& request,
                        const Execution& execution, const Description& teacher_description,
                        Rng& rng) = 0;
    virtual const ConditionalPolicy& policy() const = 0;
};

// Greedy pick: highest probability, ties to the lowest action id.
inline ActionId greedy_action(std::span<const ActionId> valid, std::span<const double> probs) {
    int best = 0;
    for (std::size_t i = 1; i < valid.size(); ++i)
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    return valid[best];
}

inline Execution rollout_policy(const EnvView& env, const ConditionalPolicy& policy,
                                StateId start, const Description& request, Rng& rng,
                                bool greedy = false) {
    Execution e;
    std::vector<ActionId> valid;
    std::vector<double> probs;
    StateId s = start;
    for (int t = 0; t < env.horizon(); ++t) {
        valid.clear();
        env.valid_actions(s, valid);
        policy.action_distribution(env, s, request, valid, probs);
        const ActionId a = greedy ? greedy_action(valid, probs)
                                  : valid[rng.categorical(probs)];
        e.steps.push_back({s, a});
        if (a == env.stop_action()) break;
        s = env.apply_action(s, a);
    }
    return e;
}

// One protocol episode: the learner produces an execution, the teacher
// describes it, and the learner is offered exactly one update with the
// triplet. No reward crosses the boundary; the record's return is filled by
// the harness for its own bookkeeping.
inline EpisodeRecord run_iliad_episode(const Environment& env, const Teacher& teacher,
                                       Learner& learner, const Task& task, Rng& policy_rng,
                                       Rng& teacher_rng) {
    EpisodeRecord record;
    record.task = task;
    record.execution = learner.generate_execution(env, task.start_state, task.request, policy_rng);
    record.teacher_description = teacher.describe(task, record.execution, teacher_rng);
    learner.update(env, task.request, record.execution, record.teacher_description, policy_rng);
    record.evaluation_return = env.evaluation_return(task, record.execution);
    return record;
}

struct EvalSnapshot {
    long episode = 0;
    double val_success = 0.0;
    double train_success_cum = 0.0;
};

struct RunTrace {
    std::vector<float> train_returns;  // binary return per training episode
    std::vector<EvalSnapshot> snapshots;

    json to_json() const {
        json snaps = json::array();
        for (const auto& s : snapshots)
            snaps.push_back({{"episode", s.episode},
                             {"val_success", s.val_success},
                             {"train_success_cum", s.train_success_cum}});
        return json{{"train_returns", train_returns}, {"snapshots", snaps}};
    }
};

// Mean greedy success over a task set (binary reward).
inline double evaluate_success(const Environment& env, const ConditionalPolicy& policy,
                               std::span<const Task> tasks, int max_tasks = 0) {
    const std::size_t n =
        max_tasks > 0 ? std::min<std::size_t>(max_tasks, tasks.size()) : tasks.size();
    if (n == 0) return 0.0;
    Rng dummy(0);  // greedy rollouts draw nothing
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Execution e = rollout_policy(env, policy, tasks[i].start_state, tasks[i].request,
                                           dummy, /*greedy=*/true);
        total += env.reward_binary(tasks[i], e);
    }
    return total / static_cast<double>(n);
}

// Full ILIAD run: `episodes` interactions with held-out success snapshots
// every `eval_every` episodes (and once more at the end if unaligned).
inline RunTrace run_protocol(const Environment& env, const Teacher& teacher, Learner& learner,
                             long episodes, long eval_every, Rng root, Split eval_split = Split::Val,
                             int eval_max_tasks = 0) {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    Rng task_rng = root.stream("task-sampling");
    Rng policy_rng = root.stream("policy-sampling");
    Rng teacher_rng = root.stream("teacher-sampling");

    RunTrace trace;
    trace.train_returns.reserve(episodes);
    double train_sum = 0.0;
    for (long n = 1; n <= episodes; ++n) {
        const Task task = env.sample_task(Split::Sim, task_rng);
        const EpisodeRecord rec =
            run_iliad_episode(env, teacher, learner, task, policy_rng, teacher_rng);
        const double r = env.reward_binary(task, rec.execution);
        train_sum += r;
        trace.train_returns.push_back(static_cast<float>(r));
        if ((eval_every > 0 && n % eval_every == 0) || n == episodes) {
            if (!trace.snapshots.empty() && trace.snapshots.back().episode == n) continue;
            EvalSnapshot snap;
            snap.episode = n;
            snap.val_success = evaluate_success(env, learner.policy(), env.eval_tasks(eval_split),
                                                eval_max_tasks);
            snap.train_success_cum = train_sum / n;
            trace.snapshots.push_back(snap);
        }
    }
    return trace;
}

// Monte-Carlo estimate of the policy value (Eq. of the protocol objective):
// mean hidden-reward return over stochastic rollouts.
inline double policy_value_estimate(const Environment& env, const ConditionalPolicy& policy,
                                    std::span<const Task> tasks, int rollouts_per_task, Rng& rng) {
    if (rollouts_per_task < 1) throw std::invalid_argument("rollouts_per_task must be >= 1");
    if (tasks.empty()) return 0.0;
    double total = 0.0;
    for (const Task& task : tasks)
        for (int k = 0; k < rollouts_per_task; ++k) {
            const Execution e =
                rollout_policy(env, policy, task.start_state, task.request, rng, false);
            total += env.evaluation_return(task, e);
        }
    return total / (static_cast<double>(tasks.size()) * rollouts_per_task);
}

}  // namespace iliad
