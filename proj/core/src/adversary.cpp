#include "ucoreps/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ucoreps/errors.hpp"

namespace ucoreps {
namespace {

// Sub-stream ids of Rng::derived.
constexpr std::uint64_t mdp_stream = 0x4d4450;
constexpr std::uint64_t loss_stream = 0x4c4f5353;

std::uint64_t component_stream(std::size_t component, std::uint64_t role) {
    return loss_stream + 0x100 * (static_cast<std::uint64_t>(component) + 1) + role;
}

std::vector<double> base_tensor(std::uint64_t seed, std::size_t component, std::uint64_t role, std::size_t n) {
    Rng rng = Rng::derived(seed, component_stream(component, role));
    std::vector<double> b(n);
    for (double& v : b)
        v = rng.uniform();
    return b;
}

} // namespace

LayeredMdp generate_mdp(const MdpSpec& spec) {
    if (!(spec.concentration > 0.0))
        throw ConfigError("mdp.concentration", "must be positive");
    auto shape = make_shape(spec.layer_sizes, spec.num_actions);
    TransitionFunction p(shape);
    const bool uniform = std::isinf(spec.concentration);
    for (std::size_t pair = 0; pair < shape->num_pairs(); ++pair) {
        auto row = p.row(pair);
        if (uniform) {
            std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
            continue;
        }
        Rng rng = Rng::derived(spec.seed, mdp_stream, pair);
        double sum = 0.0;
        for (double& v : row) {
            v = rng.gamma(spec.concentration);
            sum += v;
        }
        if (!(sum > 0.0)) {
            // Every gamma draw underflowed; the Dirichlet limit is a vertex.
            std::fill(row.begin(), row.end(), 0.0);
            row[rng.next_u64() % row.size()] = 1.0;
            continue;
        }
        for (double& v : row)
            v /= sum;
    }
    return LayeredMdp(std::move(shape), std::move(p));
}

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "constant")
        return ScheduleKind::constant;
    if (name == "iid")
        return ScheduleKind::iid;
    if (name == "switching")
        return ScheduleKind::switching;
    if (name == "sinusoidal")
        return ScheduleKind::sinusoidal;
    throw ConfigError("losses.kind", "unknown schedule '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::constant:
        return "constant";
    case ScheduleKind::iid:
        return "iid";
    case ScheduleKind::switching:
        return "switching";
    case ScheduleKind::sinusoidal:
        return "sinusoidal";
    }
    return "unknown";
}

void validate_schedule(const LossSchedule& schedule) {
    if (schedule.components.empty())
        throw ConfigError("losses.components", "need at least one component");
    for (std::size_t j = 0; j < schedule.components.size(); ++j) {
        const auto& c = schedule.components[j];
        const std::string where = "losses.components[" + std::to_string(j) + "]";
        if (!(c.heterogeneity >= 0.0 && c.heterogeneity <= 1.0))
            throw ConfigError(where + ".heterogeneity", "must lie in [0, 1]");
        if ((c.kind == ScheduleKind::switching || c.kind == ScheduleKind::sinusoidal) && c.period < 1)
            throw ConfigError(where + ".period", "must be at least 1");
        if (!(c.amplitude >= 0.0 && c.amplitude <= 1.0))
            throw ConfigError(where + ".amplitude", "must lie in [0, 1]");
    }
}

LossFunction loss_at(const LossSchedule& schedule, const ShapePtr& shape, std::int64_t t) {
    validate_schedule(schedule);
    if (t < 1)
        throw DomainError("loss_at: episodes are numbered from 1");
    const std::size_t n = shape->num_triples();
    const int d = schedule.dim();
    std::vector<double> values(n * static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const auto& c = schedule.components[static_cast<std::size_t>(j)];
        const auto cj = static_cast<std::size_t>(j);
        double* out = values.data() + cj * n;
        switch (c.kind) {
        case ScheduleKind::constant: {
            const auto b = base_tensor(schedule.seed, cj, 0, n);
            std::copy(b.begin(), b.end(), out);
            break;
        }
        case ScheduleKind::iid: {
            const auto b = base_tensor(schedule.seed, cj, 0, n);
            Rng rng = Rng::derived(schedule.seed, component_stream(cj, 1), static_cast<std::uint64_t>(t));
            for (std::size_t i = 0; i < n; ++i) {
                const double m = 0.5 + c.heterogeneity * (b[i] - 0.5);
                const double w = std::min(m, 1.0 - m);
                out[i] = std::clamp(m + w * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
            }
            break;
        }
        case ScheduleKind::switching: {
            const std::uint64_t phase = static_cast<std::uint64_t>((t - 1) / c.period) % 2;
            const auto b = base_tensor(schedule.seed, cj, phase, n);
            std::copy(b.begin(), b.end(), out);
            break;
        }
        case ScheduleKind::sinusoidal: {
            const auto b = base_tensor(schedule.seed, cj, 0, n);
            const auto phase = base_tensor(schedule.seed, cj, 2, n);
            const double omega = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(c.period);
            for (std::size_t i = 0; i < n; ++i) {
                const double wave = 0.5 * (1.0 + std::sin(omega + 2.0 * std::numbers::pi * phase[i]));
                out[i] = std::clamp((1.0 - c.amplitude) * b[i] + c.amplitude * wave, 0.0, 1.0);
            }
            break;
        }
        }
    }
    return LossFunction(shape, d, std::move(values));
}

} // namespace ucoreps
