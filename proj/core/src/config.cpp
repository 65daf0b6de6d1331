#include "ucoreps/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "ucoreps/errors.hpp"

#ifndef UCOREPS_VERSION_STRING
#define UCOREPS_VERSION_STRING "unknown"
#endif

namespace ucoreps {

std::string_view library_version() {
    return UCOREPS_VERSION_STRING;
}

using json = nlohmann::json;

namespace {

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void expect_object(const json& v, const std::string& path) {
    if (!v.is_object())
        throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& v, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : v.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(join(path, key), "unknown key");
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError(path, "expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer())
        throw ConfigError(path, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        throw ConfigError(path, "integer out of range");
    return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& v, const std::string& path) {
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path, "expected a nonnegative integer seed");
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean())
        throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string())
        throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

int get_int(const json& v, const std::string& path) {
    const auto x = get_integer(v, path);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(path, "integer out of range");
    return static_cast<int>(x);
}

void read_mdp(const json& v, ExperimentConfig& c) {
    const std::string path = "mdp";
    expect_object(v, path);
    reject_unknown(v, path, {"layers", "actions", "concentration", "seed", "file"});
    if (v.contains("file")) {
        c.mdp_file = get_string(v["file"], join(path, "file"));
        for (const char* key : {"layers", "actions", "concentration"})
            if (v.contains(key))
                throw ConfigError(join(path, key), "not allowed together with mdp.file");
    }
    if (v.contains("layers")) {
        const auto& layers = v["layers"];
        if (!layers.is_array() || layers.empty())
            throw ConfigError(join(path, "layers"), "expected a nonempty array of layer sizes");
        c.mdp.layer_sizes.clear();
        for (std::size_t i = 0; i < layers.size(); ++i)
            c.mdp.layer_sizes.push_back(get_int(layers[i], index(join(path, "layers"), i)));
    }
    if (v.contains("actions"))
        c.mdp.num_actions = get_int(v["actions"], join(path, "actions"));
    if (v.contains("concentration")) {
        const auto& x = v["concentration"];
        if (x.is_string() && (x == "inf" || x == "infinity"))
            c.mdp.concentration = std::numeric_limits<double>::infinity();
        else
            c.mdp.concentration = get_number(x, join(path, "concentration"));
    }
    if (v.contains("seed")) {
        c.mdp.seed = get_seed(v["seed"], join(path, "seed"));
        c.mdp_seed_pinned = true;
    }
}

LossComponent read_component(const json& v, const std::string& path) {
    expect_object(v, path);
    reject_unknown(v, path, {"kind", "heterogeneity", "period", "amplitude"});
    LossComponent out;
    if (v.contains("kind")) {
        try {
            out.kind = parse_schedule_kind(get_string(v["kind"], join(path, "kind")));
        } catch (const ConfigError& e) {
            if (e.field() == "losses.kind")
                throw ConfigError(join(path, "kind"), "unknown schedule '" + v["kind"].get<std::string>() + "'");
            throw;
        }
    }
    if (v.contains("heterogeneity"))
        out.heterogeneity = get_number(v["heterogeneity"], join(path, "heterogeneity"));
    if (v.contains("period"))
        out.period = get_integer(v["period"], join(path, "period"));
    if (v.contains("amplitude"))
        out.amplitude = get_number(v["amplitude"], join(path, "amplitude"));
    return out;
}

void read_losses(const json& v, ExperimentConfig& c) {
    const std::string path = "losses";
    expect_object(v, path);
    reject_unknown(v, path, {"kind", "heterogeneity", "period", "amplitude", "components", "seed"});
    if (v.contains("components")) {
        for (const char* key : {"kind", "heterogeneity", "period", "amplitude"})
            if (v.contains(key))
                throw ConfigError(join(path, key), "give per-component settings inside losses.components");
        const auto& comps = v["components"];
        if (!comps.is_array() || comps.empty())
            throw ConfigError(join(path, "components"), "expected a nonempty array");
        c.losses.components.clear();
        for (std::size_t i = 0; i < comps.size(); ++i)
            c.losses.components.push_back(read_component(comps[i], index(join(path, "components"), i)));
    } else {
        json single = json::object();
        for (const char* key : {"kind", "heterogeneity", "period", "amplitude"})
            if (v.contains(key))
                single[key] = v[key];
        c.losses.components = {read_component(single, path)};
    }
    if (v.contains("seed")) {
        c.losses.seed = get_seed(v["seed"], join(path, "seed"));
        c.loss_seed_pinned = true;
    }
}

void read_criterion(const json& v, ExperimentConfig& c) {
    const std::string path = "criterion";
    if (v.is_string()) {
        c.criterion.name = v.get<std::string>();
        return;
    }
    expect_object(v, path);
    reject_unknown(v, path, {"name", "alpha", "c"});
    if (v.contains("name"))
        c.criterion.name = get_string(v["name"], join(path, "name"));
    if (v.contains("alpha"))
        c.criterion.alpha = get_number(v["alpha"], join(path, "alpha"));
    if (v.contains("c"))
        c.criterion.c = get_number(v["c"], join(path, "c"));
}

void read_solver(const json& v, ExperimentConfig& c) {
    const std::string path = "solver";
    expect_object(v, path);
    reject_unknown(v, path, {"gtol", "max_iterations", "armijo", "backtrack", "nonmonotone_memory", "warm_start"});
    auto& s = c.solver;
    if (v.contains("gtol"))
        s.gtol = get_number(v["gtol"], join(path, "gtol"));
    if (v.contains("max_iterations"))
        s.max_iterations = get_int(v["max_iterations"], join(path, "max_iterations"));
    if (v.contains("armijo"))
        s.armijo = get_number(v["armijo"], join(path, "armijo"));
    if (v.contains("backtrack"))
        s.backtrack = get_number(v["backtrack"], join(path, "backtrack"));
    if (v.contains("nonmonotone_memory"))
        s.nonmonotone_memory = get_int(v["nonmonotone_memory"], join(path, "nonmonotone_memory"));
    if (v.contains("warm_start"))
        s.warm_start = get_bool(v["warm_start"], join(path, "warm_start"));
}

void read_comparator(const json& v, ExperimentConfig& c) {
    const std::string path = "comparator";
    expect_object(v, path);
    reject_unknown(v, path, {"gap_tolerance", "max_iterations"});
    if (v.contains("gap_tolerance"))
        c.comparator.gap_tolerance = get_number(v["gap_tolerance"], join(path, "gap_tolerance"));
    if (v.contains("max_iterations"))
        c.comparator.max_iterations = get_int(v["max_iterations"], join(path, "max_iterations"));
}

void read_output(const json& v, ExperimentConfig& c) {
    const std::string path = "output";
    expect_object(v, path);
    reject_unknown(v, path, {"dir", "traces"});
    if (v.contains("dir"))
        c.output_dir = get_string(v["dir"], join(path, "dir"));
    if (v.contains("traces"))
        c.write_traces = get_bool(v["traces"], join(path, "traces"));
}

} // namespace

Criterion make_criterion(const CriterionConfig& config) {
    if (config.name == "tel")
        return Criterion::total_expected_loss();
    if (config.name == "minmax")
        return Criterion::min_max();
    if (config.name == "risk") {
        try {
            return Criterion::risk(config.alpha, config.c);
        } catch (const DomainError& e) {
            throw ConfigError("criterion", e.what());
        }
    }
    throw ConfigError("criterion.name", "unknown criterion '" + config.name + "' (expected tel, minmax or risk)");
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    expect_object(root, "");
    reject_unknown(root, "",
                   {"mdp", "losses", "criterion", "episodes", "delta", "eta", "mode", "epoch_rule", "seeds",
                    "checkpoints", "solver", "comparator", "output", "threads"});
    ExperimentConfig c;
    if (root.contains("mdp"))
        read_mdp(root["mdp"], c);
    if (root.contains("losses"))
        read_losses(root["losses"], c);
    if (root.contains("criterion"))
        read_criterion(root["criterion"], c);
    if (root.contains("episodes"))
        c.episodes = get_integer(root["episodes"], "episodes");
    if (root.contains("delta")) {
        const auto& d = root["delta"];
        if (d.is_string() && d == "corollary")
            c.corollary_delta = true;
        else
            c.delta = get_number(d, "delta");
    }
    if (root.contains("eta") && !root["eta"].is_null())
        c.eta = get_number(root["eta"], "eta");
    if (root.contains("mode")) {
        const auto m = get_string(root["mode"], "mode");
        if (m == "unknown")
            c.mode = TransitionMode::unknown;
        else if (m == "known")
            c.mode = TransitionMode::known;
        else
            throw ConfigError("mode", "expected 'unknown' or 'known'");
    }
    if (root.contains("epoch_rule")) {
        const auto r = get_string(root["epoch_rule"], "epoch_rule");
        if (r == "literal")
            c.epoch_rule = EpochRule::literal;
        else if (r == "ucrl2")
            c.epoch_rule = EpochRule::ucrl2;
        else
            throw ConfigError("epoch_rule", "expected 'literal' or 'ucrl2'");
    }
    if (root.contains("seeds")) {
        const auto& s = root["seeds"];
        if (!s.is_array())
            throw ConfigError("seeds", "expected an array of seeds");
        c.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i)
            c.seeds.push_back(get_seed(s[i], index("seeds", i)));
    }
    if (root.contains("checkpoints")) {
        const auto& s = root["checkpoints"];
        if (!s.is_array())
            throw ConfigError("checkpoints", "expected an array of episode indices");
        for (std::size_t i = 0; i < s.size(); ++i)
            c.checkpoints.push_back(get_integer(s[i], index("checkpoints", i)));
    }
    if (root.contains("solver"))
        read_solver(root["solver"], c);
    if (root.contains("comparator"))
        read_comparator(root["comparator"], c);
    if (root.contains("output"))
        read_output(root["output"], c);
    if (root.contains("threads"))
        c.threads = get_int(root["threads"], "threads");
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void validate_config(const ExperimentConfig& c) {
    if (!c.mdp_file) {
        if (c.mdp.layer_sizes.size() < 2)
            throw ConfigError("mdp.layers", "need at least two layers");
        for (std::size_t i = 0; i < c.mdp.layer_sizes.size(); ++i)
            if (c.mdp.layer_sizes[i] < 1)
                throw ConfigError(index("mdp.layers", i), "layer sizes must be positive");
        if (c.mdp.layer_sizes.front() != 1 || c.mdp.layer_sizes.back() != 1)
            throw ConfigError("mdp.layers", "first and last layers must be singletons");
        if (c.mdp.num_actions < 1)
            throw ConfigError("mdp.actions", "must be at least 1");
        if (!(c.mdp.concentration > 0.0))
            throw ConfigError("mdp.concentration", "must be positive");
    }
    validate_schedule(c.losses);
    const Criterion criterion = make_criterion(c.criterion);
    if (criterion.required_dim() != 0 && criterion.required_dim() != c.losses.dim())
        throw ConfigError("losses.components", c.criterion.name + " criterion needs " +
                                                   std::to_string(criterion.required_dim()) + "-dimensional losses");
    if (c.episodes < 1)
        throw ConfigError("episodes", "must be at least 1");
    if (!c.corollary_delta && !(c.delta > 0.0 && c.delta < 1.0))
        throw ConfigError("delta", "must lie in (0, 1)");
    if (c.eta && !(*c.eta > 0.0 && std::isfinite(*c.eta)))
        throw ConfigError("eta", "must be positive and finite");
    if (c.seeds.empty())
        throw ConfigError("seeds", "need at least one seed");
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i)
        if (c.checkpoints[i] < 1 || c.checkpoints[i] > c.episodes)
            throw ConfigError(index("checkpoints", i), "must lie in [1, episodes]");
    if (!(c.solver.gtol > 0.0))
        throw ConfigError("solver.gtol", "must be positive");
    if (c.solver.max_iterations < 1)
        throw ConfigError("solver.max_iterations", "must be at least 1");
    if (!(c.solver.armijo > 0.0 && c.solver.armijo < 1.0))
        throw ConfigError("solver.armijo", "must lie in (0, 1)");
    if (!(c.solver.backtrack > 0.0 && c.solver.backtrack < 1.0))
        throw ConfigError("solver.backtrack", "must lie in (0, 1)");
    if (c.solver.nonmonotone_memory < 1)
        throw ConfigError("solver.nonmonotone_memory", "must be at least 1");
    if (!(c.comparator.gap_tolerance > 0.0))
        throw ConfigError("comparator.gap_tolerance", "must be positive");
    if (c.comparator.max_iterations < 1)
        throw ConfigError("comparator.max_iterations", "must be at least 1");
    if (c.threads < 0)
        throw ConfigError("threads", "must be nonnegative");
}

std::string canonical_json(const ExperimentConfig& c) {
    json root;
    json mdp;
    if (c.mdp_file) {
        mdp["file"] = c.mdp_file->generic_string();
    } else {
        mdp["layers"] = c.mdp.layer_sizes;
        mdp["actions"] = c.mdp.num_actions;
        if (std::isinf(c.mdp.concentration))
            mdp["concentration"] = "inf";
        else
            mdp["concentration"] = c.mdp.concentration;
    }
    if (c.mdp_seed_pinned)
        mdp["seed"] = c.mdp.seed;
    root["mdp"] = mdp;

    json losses;
    losses["components"] = json::array();
    for (const auto& comp : c.losses.components)
        losses["components"].push_back({{"kind", to_string(comp.kind)},
                                        {"heterogeneity", comp.heterogeneity},
                                        {"period", comp.period},
                                        {"amplitude", comp.amplitude}});
    if (c.loss_seed_pinned)
        losses["seed"] = c.losses.seed;
    root["losses"] = losses;

    root["criterion"] = {{"name", c.criterion.name}};
    if (c.criterion.name == "risk") {
        root["criterion"]["alpha"] = c.criterion.alpha;
        root["criterion"]["c"] = c.criterion.c;
    }
    root["episodes"] = c.episodes;
    if (c.corollary_delta)
        root["delta"] = "corollary";
    else
        root["delta"] = c.delta;
    root["eta"] = c.eta ? json(*c.eta) : json(nullptr);
    root["mode"] = c.mode == TransitionMode::known ? "known" : "unknown";
    root["epoch_rule"] = c.epoch_rule == EpochRule::ucrl2 ? "ucrl2" : "literal";
    root["seeds"] = c.seeds;
    root["checkpoints"] = resolve_checkpoints(c);
    root["solver"] = {{"gtol", c.solver.gtol},
                      {"max_iterations", c.solver.max_iterations},
                      {"armijo", c.solver.armijo},
                      {"backtrack", c.solver.backtrack},
                      {"nonmonotone_memory", c.solver.nonmonotone_memory},
                      {"warm_start", c.solver.warm_start}};
    root["comparator"] = {{"gap_tolerance", c.comparator.gap_tolerance},
                          {"max_iterations", c.comparator.max_iterations}};
    return root.dump();
}

std::vector<std::int64_t> resolve_checkpoints(const ExperimentConfig& c) {
    std::vector<std::int64_t> out = c.checkpoints;
    if (out.empty()) {
        for (std::int64_t t = 1; t <= c.episodes; t *= 2)
            out.push_back(t);
        out.push_back(c.episodes);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double resolve_delta(const ExperimentConfig& c, const Shape& shape) {
    if (!c.corollary_delta)
        return c.delta;
    const double d = static_cast<double>(shape.num_states()) * shape.num_actions() / static_cast<double>(c.episodes);
    if (!(d < 1.0))
        throw ConfigError("delta", "the corollary preset |X||A|/T is not below 1; use more episodes");
    return d;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace ucoreps
