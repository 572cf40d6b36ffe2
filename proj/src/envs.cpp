#include "moppo/envs.hpp"

#include <algorithm>
#include <cmath>

#include "moppo/csv.hpp"
#include "moppo/errors.hpp"

namespace moppo {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void check_action(const MOMDPSpec& spec, const std::vector<double>& action) {
    if (static_cast<int>(action.size()) != spec.action_dim)
        throw InvalidAction("action has dimension " + std::to_string(action.size()) +
                            ", expected " + std::to_string(spec.action_dim));
    for (double a : action)
        if (!std::isfinite(a)) throw InvalidAction("action has non-finite component");
}

class EpisodicEnv : public Environment {
public:
    const MOMDPSpec& spec() const override { return spec_; }
    bool done() const override { return t_ >= spec_.horizon; }
    const std::vector<double>& state() const override { return state_; }

    std::vector<double> reset(std::uint64_t) override {
        t_ = 0;
        state_ = initial_state();
        return state_;
    }

    Transition step(const std::vector<double>& action) override {
        if (done()) throw EpisodeFinished(spec_.name + ": episode already finished");
        check_action(spec_, action);
        std::vector<double> clipped(action.size());
        for (std::size_t i = 0; i < action.size(); ++i)
            clipped[i] = clip(action[i], spec_.action_bounds[i].first,
                              spec_.action_bounds[i].second);
        Transition tr;
        tr.state = state_;
        tr.action = action;
        dynamics(state_, clipped, tr.next_state, tr.reward);
        ++t_;
        tr.terminal = done();
        state_ = tr.next_state;
        return tr;
    }

protected:
    virtual std::vector<double> initial_state() const = 0;
    virtual void dynamics(const std::vector<double>& state,
                          const std::vector<double>& clipped_action,
                          std::vector<double>& next_state,
                          ObjectiveVector& reward) const = 0;

    MOMDPSpec spec_;
    std::vector<double> state_;
    int t_ = 0;
};

/// One-step bandit: the scalar action in [-1, 1] maps affinely to an angle
/// theta in [0, pi/2] and the reward is (cos theta, sin theta). The true
/// coverage set is the first-quadrant unit arc.
class ConcaveBandit final : public EpisodicEnv {
public:
    ConcaveBandit() {
        spec_.name = "concave-bandit";
        spec_.state_dim = 1;
        spec_.action_dim = 1;
        spec_.objectives = 2;
        spec_.action_bounds = {{-1.0, 1.0}};
        spec_.horizon = 1;
        state_ = initial_state();
        t_ = spec_.horizon; // requires reset() before stepping
    }

    std::vector<ObjectiveVector> true_ccs() const override {
        std::vector<ObjectiveVector> ccs;
        ccs.reserve(1001);
        for (int i = 0; i <= 1000; ++i) {
            double theta = (kPi / 2.0) * static_cast<double>(i) / 1000.0;
            ccs.push_back({std::cos(theta), std::sin(theta)});
        }
        return ccs;
    }

    std::unique_ptr<Environment> clone() const override {
        return std::make_unique<ConcaveBandit>(*this);
    }

protected:
    std::vector<double> initial_state() const override { return {0.0}; }

    void dynamics(const std::vector<double>&, const std::vector<double>& a,
                  std::vector<double>& next_state, ObjectiveVector& reward) const override {
        double theta = (a[0] + 1.0) * (kPi / 4.0);
        next_state = {0.0};
        reward = {std::cos(theta), std::sin(theta)};
    }
};

/// Velocity-controlled point on a line. v' = clip(v + 0.1 a, -1, 1),
/// x' = x + 0.1 v'; rewards are speed v' and control economy 0.3 - 0.15 a^2.
class PointMass2 final : public EpisodicEnv {
public:
    PointMass2() {
        spec_.name = "pointmass-2";
        spec_.state_dim = 2;
        spec_.action_dim = 1;
        spec_.objectives = 2;
        spec_.action_bounds = {{-1.0, 1.0}};
        spec_.horizon = 50;
        state_ = initial_state();
        t_ = spec_.horizon;
    }

    std::unique_ptr<Environment> clone() const override {
        return std::make_unique<PointMass2>(*this);
    }

protected:
    std::vector<double> initial_state() const override { return {0.0, 0.0}; }

    void dynamics(const std::vector<double>& s, const std::vector<double>& a,
                  std::vector<double>& next_state, ObjectiveVector& reward) const override {
        double v = clip(s[1] + 0.1 * a[0], -1.0, 1.0);
        double x = s[0] + 0.1 * v;
        next_state = {x, v};
        reward = {v, 0.3 - 0.15 * a[0] * a[0]};
    }
};

/// Two independent pointmass-2 axes sharing one control-economy objective:
/// rewards are (vx', vy', 1 - 0.5 (ax^2 + ay^2)).
class PointMass3 final : public EpisodicEnv {
public:
    PointMass3() {
        spec_.name = "pointmass-3";
        spec_.state_dim = 4;
        spec_.action_dim = 2;
        spec_.objectives = 3;
        spec_.action_bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
        spec_.horizon = 50;
        state_ = initial_state();
        t_ = spec_.horizon;
    }

    std::unique_ptr<Environment> clone() const override {
        return std::make_unique<PointMass3>(*this);
    }

protected:
    std::vector<double> initial_state() const override { return {0.0, 0.0, 0.0, 0.0}; }

    void dynamics(const std::vector<double>& s, const std::vector<double>& a,
                  std::vector<double>& next_state, ObjectiveVector& reward) const override {
        double vx = clip(s[2] + 0.1 * a[0], -1.0, 1.0);
        double vy = clip(s[3] + 0.1 * a[1], -1.0, 1.0);
        double x = s[0] + 0.1 * vx;
        double y = s[1] + 0.1 * vy;
        next_state = {x, y, vx, vy};
        reward = {vx, vy, 1.0 - 0.5 * (a[0] * a[0] + a[1] * a[1])};
    }
};

} // namespace

std::unique_ptr<Environment> make_environment(const std::string& name) {
    if (name == "concave-bandit") return std::make_unique<ConcaveBandit>();
    if (name == "pointmass-2") return std::make_unique<PointMass2>();
    if (name == "pointmass-3") return std::make_unique<PointMass3>();
    throw UnknownEnvironment("unknown environment: " + name);
}

std::vector<std::string> list_environments() {
    return {"concave-bandit", "pointmass-2", "pointmass-3"};
}

void write_trace_csv(const std::string& path, const std::vector<Transition>& trace) {
    if (trace.empty()) throw EmptyFront("no transitions to export");
    std::vector<std::string> header = {"step"};
    for (std::size_t i = 0; i < trace[0].state.size(); ++i)
        header.push_back("s_" + std::to_string(i + 1));
    for (std::size_t i = 0; i < trace[0].action.size(); ++i)
        header.push_back("a_" + std::to_string(i + 1));
    for (std::size_t i = 0; i < trace[0].reward.size(); ++i)
        header.push_back("r_" + std::to_string(i + 1));
    CsvFile csv(path, header);
    for (std::size_t t = 0; t < trace.size(); ++t) {
        std::vector<std::string> cells = {std::to_string(t + 1)};
        for (double v : trace[t].state) cells.push_back(fmt_full(v));
        for (double v : trace[t].action) cells.push_back(fmt_full(v));
        for (double v : trace[t].reward) cells.push_back(fmt_full(v));
        csv.row(cells);
    }
}

} // namespace moppo
