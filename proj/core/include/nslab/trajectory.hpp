#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "nslab/model.hpp"

namespace nslab {

enum class EventKind { SwitchUp, SwitchDown, SurfaceHit, SectionCrossing };

std::string_view to_string(EventKind kind);

struct TrajectoryEvent {
    double time = 0.0;
    EventKind kind = EventKind::SurfaceHit;
    int tag = 0;  // section index for section crossings, otherwise 0
};

/// Which components a trajectory state carries, in order: x (x_dim), then
/// optionally y, then optionally u.
struct StateLayout {
    std::size_t x_dim = 1;
    bool has_y = false;
    bool has_u = false;

    std::size_t size() const { return x_dim + (has_y ? 1 : 0) + (has_u ? 1 : 0); }
    std::size_t y_index() const { return x_dim; }
    std::size_t u_index() const { return x_dim + (has_y ? 1 : 0); }

    static StateLayout plain(std::size_t n) { return {n, false, false}; }
    static StateLayout planar(std::size_t k) { return {k, true, false}; }
    static StateLayout embedded(std::size_t k) { return {k, true, true}; }
};

/// Time-stamped states with a piecewise cubic Hermite interpolant.
///
/// Segment i spans [times[i], times[i+1]] and keeps its own endpoint slopes,
/// so slopes may jump across a node where the vector field switches.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(StateLayout layout) : layout_(layout) {}

    const StateLayout& layout() const { return layout_; }
    void set_layout(StateLayout layout) { layout_ = layout; }

    /// Starts the trajectory. Must be called once before any append_segment.
    void start(double t, Vec state, int mode = 0, double control = 0.0);

    /// Appends a node at t1 > back time. d0 is the slope at the segment start
    /// and d1 at its end (one-sided with respect to the segment).
    void append_segment(double t1, Vec state, Vec d0, Vec d1, int mode = 0, double control = 0.0);

    /// Appends every segment of `other`, whose first node must coincide in time
    /// with this trajectory's last node. The duplicated node is dropped.
    void splice(const Trajectory& other);

    void add_event(TrajectoryEvent ev) { events_.push_back(ev); }
    void annotate(std::size_t i, int mode, double control) {
        modes_.at(i) = mode;
        controls_.at(i) = control;
    }

    /// Keep only nodes up to and including index `last`.
    void truncate(std::size_t last);

    bool empty() const { return times_.empty(); }
    std::size_t size() const { return times_.size(); }
    double front_time() const { return times_.front(); }
    double back_time() const { return times_.back(); }
    const Vec& back_state() const { return states_.back(); }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vec>& states() const { return states_; }
    const std::vector<int>& modes() const { return modes_; }
    const std::vector<double>& controls() const { return controls_; }
    const std::vector<TrajectoryEvent>& events() const { return events_; }
    std::vector<TrajectoryEvent>& events() { return events_; }

    /// Dense output. Exact at stored nodes; clamps outside [t0, t_end].
    Vec eval(double t) const;
    /// Dense output of the leading x components only.
    Vec eval_x(double t) const;

    /// Slopes stored for segment i (start and end).
    const Vec& segment_start_slope(std::size_t i) const { return d0_[i]; }
    const Vec& segment_end_slope(std::size_t i) const { return d1_[i]; }

private:
    StateLayout layout_{};
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<int> modes_;
    std::vector<double> controls_;
    std::vector<Vec> d0_;
    std::vector<Vec> d1_;
    std::vector<TrajectoryEvent> events_;
};

}  // namespace nslab
