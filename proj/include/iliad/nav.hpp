#pragma once

// Graph-navigation environment: nodes carry (room, color) attribute atoms,
// actions are <stop> plus moves to adjacent nodes, success is stopping within
// a hop radius of the hidden goal. Includes the compositional request
// grammar with split-disjoint template families, the shortest-path explorer
// program, and the BFS oracle for the IL baseline.

#include <algorithm>
#include <string>
#include <vector>

#include "iliad/adel.hpp"
#include "iliad/graph.hpp"
#include "iliad/protocol.hpp"
#include "iliad/rng.hpp"
#include "iliad/types.hpp"

namespace iliad::nav {

struct NavTemplate {
    int id;
    Split split;
    bool needs_mid;
    const char* pattern;  // slots: {EC} end color, {ER} end room, {MR} mid room
};

inline const std::vector<NavTemplate>& template_inventory() {
    // every destination phrase names the unique (color, room) pair; goals
    // are identifiable from the request alone
    static const std::vector<NavTemplate> templates{
        {0, Split::Sim, false, "go to the {EC} {ER}"},
        {1, Split::Sim, false, "walk to the {EC} {ER}"},
        {2, Split::Sim, false, "head to the {EC} {ER} and stop"},
        {3, Split::Sim, false, "find the {EC} {ER}"},
        {4, Split::Sim, true, "go to the {EC} {ER} past the {MR}"},
        {5, Split::Sim, false, "walk to the {EC} {ER} now"},
        {6, Split::Sim, false, "make your way to the {EC} {ER}"},
        {7, Split::Sim, false, "stop at the {EC} {ER}"},
        {8, Split::Val, false, "travel to the {EC} {ER}"},
        {9, Split::Val, false, "move to the {EC} {ER}"},
        {10, Split::Val, true, "march to the {EC} {ER} past the {MR}"},
        {11, Split::Test, false, "proceed to the {EC} {ER}"},
        {12, Split::Test, false, "reach the {EC} {ER}"},
        {13, Split::Test, true, "advance to the {EC} {ER} past the {MR}"},
    };
    return templates;
}

// Semantic frame of a navigation path: start, ordered intermediate visits,
// end, as (room, color) attribute pairs.
struct NavFrame {
    std::pair<int, int> start;
    std::vector<std::pair<int, int>> mids;
    std::pair<int, int> end;

    std::string key() const {
        std::string k = std::to_string(start.first) + "." + std::to_string(start.second);
        for (const auto& [r, c] : mids) k += "|" + std::to_string(r) + "." + std::to_string(c);
        k += ">" + std::to_string(end.first) + "." + std::to_string(end.second);
        return k;
    }
};

struct NavItem {
    int id = 0;
    Split split = Split::Sim;
    int start = 0, goal = 0;
    std::vector<int> path;  // ground-truth execution nodes, start..goal
    std::vector<Description> requests;
    std::vector<int> template_ids;
};

struct NavConfig {
    int nodes = 60;
    int horizon = 10;       // H
    int radius = 1;         // success radius rho, in hops
    int min_len = 2, max_len = 6;
    int sim_items = 400;
    int val_items = 60;
    int test_items = 60;
    int sim_requests = 3;   // M for the simulation split
    std::uint64_t seed = 11;
};

class NavEnv : public Environment {
public:
    explicit NavEnv(NavConfig cfg)
        : cfg_(cfg), graph_(NavGraph::generate(cfg.nodes, Rng(cfg.seed).stream("graph"))) {
        build_atoms();
        build_vocab();
        generate_corpus();
    }

    // ---- EnvView ----
    int horizon() const override { return cfg_.horizon; }
    int num_actions() const override { return graph_.size() + 1; }
    ActionId stop_action() const override { return 0; }

    void valid_actions(StateId s, std::vector<ActionId>& out) const override {
        out.push_back(0);
        for (int v : graph_.neighbors(s)) out.push_back(1 + v);
    }

    StateId apply_action(StateId s, ActionId a) const override {
        if (a <= 0 || a > graph_.size() || !graph_.has_edge(s, a - 1))
            throw ProtocolViolation("action is not an adjacent node", s, a);
        return a - 1;
    }

    void state_atoms(StateId s, std::vector<AtomId>& out) const override {
        out.push_back(atom_cur_room_ + graph_.node(s).room);
        out.push_back(atom_cur_color_ + graph_.node(s).color);
    }

    void action_atoms(StateId s, ActionId a, std::vector<AtomId>& out) const override {
        if (a == 0) {
            out.push_back(atom_stop_);
            out.push_back(atom_end_room_ + graph_.node(s).room);
            out.push_back(atom_end_color_ + graph_.node(s).color);
            // stopping is also correct anywhere inside the success radius,
            // so expose what the radius covers
            for (int w : graph_.neighbors(s)) {
                out.push_back(atom_end_near_room_ + graph_.node(w).room);
                out.push_back(atom_end_near_color_ + graph_.node(w).color);
            }
            std::sort(out.begin() + 1, out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            return;
        }
        const int v = a - 1;
        out.push_back(atom_go_);
        out.push_back(atom_at_room_ + graph_.node(v).room);
        out.push_back(atom_at_color_ + graph_.node(v).color);
        for (AtomId near : near_atoms_[v]) out.push_back(near);
    }

    // ---- Environment ----
    const Vocab& vocab() const override { return vocab_; }

    Task sample_task(Split split, Rng& rng) const override {
        const auto& idx = split_index(split);
        const NavItem& item = items_[idx[rng.below(idx.size())]];
        return make_task(item, rng.below(item.requests.size()));
    }

    std::span<const Task> eval_tasks(Split split) const override {
        return split == Split::Val ? std::span<const Task>(val_tasks_)
                                   : std::span<const Task>(test_tasks_);
    }

    double evaluation_return(const Task& task, const Execution& e) const override {
        return reward_binary(task, e);
    }

    double reward_binary(const Task& task, const Execution& e) const override {
        const NavItem& item = items_[task.goal_id];
        return graph_.distance(path_of(e).back(), item.goal) <= cfg_.radius ? 1.0 : 0.0;
    }

    // (shortest(s1,g) - shortest(sH,g)) / shortest(s1,g), clipped to [-1, 1];
    // degenerate start-at-goal falls back to the binary value.
    double reward_continuous(const Task& task, const Execution& e) const override {
        const NavItem& item = items_[task.goal_id];
        const auto path = path_of(e);
        const double d1 = graph_.distance(path.front(), item.goal);
        if (d1 <= 0.0) return reward_binary(task, e);
        const double dh = graph_.distance(path.back(), item.goal);
        return std::clamp((d1 - dh) / d1, -1.0, 1.0);
    }

    // BFS teacher: <stop> within the success radius, else the first hop of a
    // shortest path (lowest node id on ties).
    ActionId oracle_action(const Task& task, StateId s) const override {
        const NavItem& item = items_[task.goal_id];
        if (graph_.distance(s, item.goal) <= cfg_.radius) return 0;
        return 1 + graph_.first_hop(s, item.goal);
    }

    // ---- nav specifics ----
    const NavGraph& graph() const { return graph_; }
    const NavConfig& config() const { return cfg_; }
    const std::vector<NavItem>& items() const { return items_; }
    const std::vector<int>& split_index(Split split) const {
        switch (split) {
            case Split::Sim: return sim_idx_;
            case Split::Val: return val_idx_;
            default: return test_idx_;
        }
    }

    // Node sequence visited by an execution.
    std::vector<int> path_of(const Execution& e) const {
        std::vector<int> path{e.steps.front().state};
        for (const Step& st : e.steps)
            if (st.action != 0) path.push_back(st.action - 1);
        return path;
    }

    Execution execution_from_path(std::span<const int> path) const {
        Execution e;
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            e.steps.push_back({path[i], 1 + path[i + 1]});
        if (static_cast<int>(e.steps.size()) < cfg_.horizon)
            e.steps.push_back({path.back(), 0});
        return e;
    }

    Task make_task(const NavItem& item, std::size_t request_idx) const {
        return Task{item.start, item.requests[request_idx], item.id};
    }

    NavFrame frame_of(std::span<const int> path) const {
        NavFrame f;
        auto attrs = [&](int v) { return std::make_pair(graph_.node(v).room, graph_.node(v).color); };
        f.start = attrs(path.front());
        for (std::size_t i = 1; i + 1 < path.size(); ++i) f.mids.push_back(attrs(path[i]));
        f.end = attrs(path.back());
        return f;
    }

    // Request text for a template rendered against a frame.
    Description render_template(int template_id, const NavFrame& frame) const {
        const NavTemplate& t = template_inventory()[template_id];
        std::string text(t.pattern);
        auto replace_slot = [&](const std::string& slot, const std::string& value) {
            const auto pos = text.find(slot);
            if (pos != std::string::npos) text = text.substr(0, pos) + value + text.substr(pos + slot.size());
        };
        replace_slot("{EC}", color_inventory()[frame.end.second]);
        replace_slot("{ER}", room_inventory()[frame.end.first]);
        const int mid_room = frame.mids.empty() ? frame.end.first : frame.mids.back().first;
        replace_slot("{MR}", room_inventory()[mid_room]);
        return vocab_.tokenize_existing(text);
    }

    std::string corpus_jsonl() const {
        std::string out;
        for (const auto& item : items_) {
            json rec{{"id", item.id},
                     {"split", split_name(item.split)},
                     {"requests", json::array()},
                     {"execution", item.path},
                     {"goal", item.goal}};
            for (const auto& r : item.requests) rec["requests"].push_back(vocab_.render(r));
            out += rec.dump();
            out += '\n';
        }
        return out;
    }

private:
    void build_atoms() {
        const int R = static_cast<int>(room_inventory().size());
        const int C = static_cast<int>(color_inventory().size());
        atom_cur_room_ = 0;
        atom_cur_color_ = atom_cur_room_ + R;
        atom_stop_ = atom_cur_color_ + C;
        atom_go_ = atom_stop_ + 1;
        atom_end_room_ = atom_go_ + 1;
        atom_end_color_ = atom_end_room_ + R;
        atom_at_room_ = atom_end_color_ + C;
        atom_at_color_ = atom_at_room_ + R;
        atom_near_room_ = atom_at_color_ + C;          // + 8 * distance-bucket + room
        atom_near_color_ = atom_near_room_ + 8u * R;   // + 8 * distance + color
        atom_end_near_room_ = atom_near_color_ + 8u * C;
        atom_end_near_color_ = atom_end_near_room_ + R;

        // distance-graded region summary per node: attribute atoms of nodes
        // in hop rings 1..4 and a 5+ bucket, so moving toward a distant
        // described destination strictly improves the action's atom grade
        near_atoms_.resize(graph_.size());
        for (int v = 0; v < graph_.size(); ++v) {
            std::vector<int> room_best(R, 1 << 20), color_best(C, 1 << 20);
            for (int w = 0; w < graph_.size(); ++w) {
                const int d = graph_.distance(v, w);
                if (d < 1) continue;
                room_best[graph_.node(w).room] = std::min(room_best[graph_.node(w).room], d);
                color_best[graph_.node(w).color] = std::min(color_best[graph_.node(w).color], d);
            }
            std::vector<AtomId> atoms;
            auto bucket = [](int d) { return d <= 4 ? d : 5; };
            for (int r = 0; r < R; ++r)
                if (room_best[r] < (1 << 20))
                    atoms.push_back(atom_near_room_ + 8u * bucket(room_best[r]) + r);
            for (int c = 0; c < C; ++c)
                if (color_best[c] < (1 << 20) && color_best[c] <= 2)
                    atoms.push_back(atom_near_color_ + 8u * color_best[c] + c);
            std::sort(atoms.begin(), atoms.end());
            near_atoms_[v] = std::move(atoms);
        }
    }

    // Freeze the request vocabulary up front so rendering stays const.
    void build_vocab() {
        for (const auto& t : template_inventory()) {
            std::string text(t.pattern);
            for (std::size_t i = 0; i < text.size(); ++i)
                if (text[i] == '{') {
                    const auto close = text.find('}', i);
                    text = text.substr(0, i) + text.substr(close + 1);
                    --i;
                }
            vocab_.tokenize(text);  // interns the fixed words
        }
        for (const auto& w : room_inventory()) vocab_.intern(w);
        for (const auto& w : color_inventory()) vocab_.intern(w);
    }

    void generate_corpus() {
        Rng rng(cfg_.seed);
        Rng pick = rng.stream("nav-corpus");
        int id = 0;
        auto sim_templates = collect_templates(Split::Sim);
        auto val_templates = collect_templates(Split::Val);
        auto test_templates = collect_templates(Split::Test);

        auto gen_split = [&](Split split, int count) {
            const auto& family = split == Split::Sim ? sim_templates
                                : split == Split::Val ? val_templates : test_templates;
            for (int i = 0; i < count; ++i) {
                NavItem item;
                for (;;) {
                    item.start = static_cast<int>(pick.below(graph_.size()));
                    std::vector<int> goals;
                    for (int g = 0; g < graph_.size(); ++g) {
                        const int d = graph_.distance(item.start, g);
                        if (d >= cfg_.min_len && d <= cfg_.max_len) goals.push_back(g);
                    }
                    if (goals.empty()) continue;
                    item.goal = goals[pick.below(goals.size())];
                    break;
                }
                item.path = graph_.random_shortest_path(item.start, item.goal, pick);
                const NavFrame frame = frame_of(item.path);
                const int n_requests = split == Split::Sim ? cfg_.sim_requests : 1;
                // distinct templates per item, uniformly shuffled
                std::vector<int> order = family;
                for (int k = static_cast<int>(order.size()) - 1; k > 0; --k)
                    std::swap(order[k], order[pick.below(k + 1)]);
                for (int t : order) {
                    if (static_cast<int>(item.requests.size()) >= n_requests) break;
                    if (template_inventory()[t].needs_mid && frame.mids.empty()) continue;
                    item.requests.push_back(render_template(t, frame));
                    item.template_ids.push_back(t);
                }
                item.id = id++;
                item.split = split;
                items_.push_back(std::move(item));
            }
        };
        gen_split(Split::Sim, cfg_.sim_items);
        gen_split(Split::Val, cfg_.val_items);
        gen_split(Split::Test, cfg_.test_items);

        for (const auto& item : items_) {
            switch (item.split) {
                case Split::Sim: sim_idx_.push_back(item.id); break;
                case Split::Val: val_idx_.push_back(item.id); break;
                case Split::Test: test_idx_.push_back(item.id); break;
            }
        }
        for (int i : val_idx_)
            for (std::size_t r = 0; r < items_[i].requests.size(); ++r)
                val_tasks_.push_back(make_task(items_[i], r));
        for (int i : test_idx_)
            for (std::size_t r = 0; r < items_[i].requests.size(); ++r)
                test_tasks_.push_back(make_task(items_[i], r));
    }

    static std::vector<int> collect_templates(Split split) {
        std::vector<int> ids;
        for (const auto& t : template_inventory())
            if (t.split == split) ids.push_back(t.id);
        return ids;
    }

    NavConfig cfg_;
    NavGraph graph_;
    Vocab vocab_;
    std::vector<NavItem> items_;
    std::vector<int> sim_idx_, val_idx_, test_idx_;
    std::vector<Task> val_tasks_, test_tasks_;
    std::vector<std::vector<AtomId>> near_atoms_;

    AtomId atom_cur_room_ = 0, atom_cur_color_ = 0, atom_stop_ = 0, atom_go_ = 0;
    AtomId atom_end_room_ = 0, atom_end_color_ = 0, atom_at_room_ = 0, atom_at_color_ = 0;
    AtomId atom_near_room_ = 0, atom_near_color_ = 0;
    AtomId atom_end_near_room_ = 0, atom_end_near_color_ = 0;
};

// The approximate-marginal program: a random shortest path of length 2..6
// from the start state, then <stop>.
class ShortestPathExplorer : public adel::ExecutionSampler {
public:
    explicit ShortestPathExplorer(const NavEnv* env) : env_(env) {}

    Execution sample(const EnvView& /*env*/, StateId start, Rng& rng) const override {
        const NavGraph& g = env_->graph();
        const auto& cfg = env_->config();
        std::vector<int> targets;
        for (int v = 0; v < g.size(); ++v) {
            const int d = g.distance(start, v);
            if (d >= cfg.min_len && d <= cfg.max_len) targets.push_back(v);
        }
        if (targets.empty())
            for (int v : g.neighbors(start)) targets.push_back(v);
        const int goal = targets[rng.below(targets.size())];
        const auto path = g.random_shortest_path(start, goal, rng);
        return env_->execution_from_path(path);
    }

private:
    const NavEnv* env_;
};

}  // namespace iliad::nav
