#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ucoreps/mdp.hpp"

namespace ucoreps {

/// Random layered MDP: every transition row is drawn from a symmetric Dirichlet.
struct MdpSpec {
    /// Sizes of X_0..X_L; the first and last must be 1.
    std::vector<int> layer_sizes;
    int num_actions = 2;
    /// Dirichlet concentration per entry. Small values give near-deterministic rows;
    /// infinity gives exactly uniform rows.
    double concentration = 1.0;
    std::uint64_t seed = 0;
};

/// Deterministic given `spec`. Each pair's row uses its own derived generator.
LayeredMdp generate_mdp(const MdpSpec& spec);

enum class ScheduleKind {
    /// The same base tensor every episode.
    constant,
    /// Independent draws: l = m + w (2u - 1) with w = min(m, 1 - m), so E[l] = m.
    iid,
    /// Two base tensors alternating every `period` episodes.
    switching,
    /// (1 - amplitude) base + amplitude (1 + sin(2 pi t / period + phase)) / 2, per-triple phase.
    sinusoidal,
};

/// Generator of one loss dimension.
struct LossComponent {
    ScheduleKind kind = ScheduleKind::iid;
    /// iid only: per-triple means are 0.5 + heterogeneity (b - 0.5) for a uniform base b.
    /// 0 gives plain U[0,1] losses; 1 gives means spread over the whole unit interval.
    double heterogeneity = 0.0;
    std::int64_t period = 100;
    double amplitude = 0.5;
};

/// Oblivious loss sequence; dimension d = components.size().
struct LossSchedule {
    std::vector<LossComponent> components{LossComponent{}};
    std::uint64_t seed = 0;

    int dim() const noexcept { return static_cast<int>(components.size()); }
};

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

/// Throws ConfigError on an empty schedule or out-of-range parameters.
void validate_schedule(const LossSchedule& schedule);

/// l_t for episode t >= 1; a pure function of (schedule, shape, t). Entries lie in [0, 1] exactly.
LossFunction loss_at(const LossSchedule& schedule, const ShapePtr& shape, std::int64_t t);

} // namespace ucoreps
