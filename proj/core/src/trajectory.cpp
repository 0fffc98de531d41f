#include "nslab/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace nslab {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::SwitchUp: return "switch-up";
        case EventKind::SwitchDown: return "switch-down";
        case EventKind::SurfaceHit: return "surface-hit";
        case EventKind::SectionCrossing: return "section-crossing";
    }
    return "unknown";
}

void Trajectory::start(double t, Vec state, int mode, double control) {
    if (!times_.empty()) throw std::logic_error("Trajectory::start called twice");
    times_.push_back(t);
    states_.push_back(std::move(state));
    modes_.push_back(mode);
    controls_.push_back(control);
}

void Trajectory::append_segment(double t1, Vec state, Vec d0, Vec d1, int mode, double control) {
    if (times_.empty()) throw std::logic_error("Trajectory::append_segment before start");
    if (!(t1 > times_.back())) throw std::logic_error("Trajectory times must be strictly increasing");
    times_.push_back(t1);
    states_.push_back(std::move(state));
    modes_.push_back(mode);
    controls_.push_back(control);
    d0_.push_back(std::move(d0));
    d1_.push_back(std::move(d1));
}

void Trajectory::splice(const Trajectory& other) {
    if (other.empty()) return;
    if (times_.empty()) {
        *this = other;
        return;
    }
    if (other.times_.front() != times_.back()) {
        throw std::logic_error("Trajectory::splice: trajectories are not contiguous");
    }
    // The junction node takes the incoming trajectory's annotations.
    modes_.back() = other.modes_.front();
    controls_.back() = other.controls_.front();
    for (std::size_t i = 1; i < other.times_.size(); ++i) {
        times_.push_back(other.times_[i]);
        states_.push_back(other.states_[i]);
        modes_.push_back(other.modes_[i]);
        controls_.push_back(other.controls_[i]);
        d0_.push_back(other.d0_[i - 1]);
        d1_.push_back(other.d1_[i - 1]);
    }
    events_.insert(events_.end(), other.events_.begin(), other.events_.end());
}

void Trajectory::truncate(std::size_t last) {
    if (last + 1 >= times_.size()) return;
    times_.resize(last + 1);
    states_.resize(last + 1);
    modes_.resize(last + 1);
    controls_.resize(last + 1);
    d0_.resize(last);
    d1_.resize(last);
    const double t_end = times_.back();
    std::erase_if(events_, [t_end](const TrajectoryEvent& e) { return e.time > t_end; });
}

Vec Trajectory::eval(double t) const {
    if (times_.empty()) throw std::logic_error("Trajectory::eval on empty trajectory");
    if (t <= times_.front()) return states_.front();
    if (t >= times_.back()) return states_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    if (times_[i] == t) return states_[i];

    const double t0 = times_[i];
    const double h = times_[i + 1] - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;

    const Vec& p0 = states_[i];
    const Vec& p1 = states_[i + 1];
    const Vec& m0 = d0_[i];
    const Vec& m1 = d1_[i];
    Vec out(p0.size());
    for (std::size_t c = 0; c < p0.size(); ++c) {
        out[c] = h00 * p0[c] + h10 * h * m0[c] + h01 * p1[c] + h11 * h * m1[c];
    }
    return out;
}

Vec Trajectory::eval_x(double t) const {
    Vec s = eval(t);
    s.resize(layout_.x_dim);
    return s;
}

}  // namespace nslab
