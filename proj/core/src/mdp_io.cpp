#include "ucoreps/mdp_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "ucoreps/errors.hpp"

namespace ucoreps {
namespace {

std::vector<std::string_view> split_words(std::string_view line) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            words.push_back(line.substr(i, j - i));
        i = j;
    }
    return words;
}

int parse_int(std::string_view w, int line) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size())
        throw ParseError(line, "expected an integer, got '" + std::string(w) + "'");
    return v;
}

double parse_double(std::string_view w, int line) {
    // std::from_chars for double is not available in every toolchain we target.
    std::string s(w);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        throw ParseError(line, "expected a decimal number, got '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

LayeredMdp parse_mdp(std::string_view text) {
    std::optional<std::vector<int>> layers;
    std::optional<int> actions;
    ShapePtr shape;
    std::optional<TransitionFunction> transition;
    std::vector<char> seen;
    std::vector<std::vector<std::string>> state_labels;
    std::vector<std::string> action_labels;
    bool header = false;

    auto ensure_shape = [&](int line) {
        if (shape)
            return;
        if (!layers || !actions)
            throw ParseError(line, "'layers' and 'actions' must precede rows and labels");
        try {
            shape = make_shape(*layers, *actions);
        } catch (const StructuralError& e) {
            throw ParseError(line, e.what());
        }
        transition.emplace(shape);
        seen.assign(shape->num_pairs(), 0);
        state_labels.resize(layers->size());
        for (std::size_t k = 0; k < layers->size(); ++k)
            state_labels[k].assign(static_cast<std::size_t>((*layers)[k]), "");
        action_labels.assign(static_cast<std::size_t>(*actions), "");
    };

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const auto w = split_words(line);
        if (w.empty())
            continue;

        if (!header) {
            if (w.size() != 2 || w[0] != "ucoreps-mdp")
                throw ParseError(line_no, "expected header 'ucoreps-mdp 1'");
            if (parse_int(w[1], line_no) != 1)
                throw ParseError(line_no, "unsupported format version");
            header = true;
            continue;
        }

        if (w[0] == "layers") {
            if (layers)
                throw ParseError(line_no, "duplicate 'layers'");
            std::vector<int> sizes;
            for (std::size_t i = 1; i < w.size(); ++i)
                sizes.push_back(parse_int(w[i], line_no));
            layers = std::move(sizes);
        } else if (w[0] == "actions") {
            if (actions || w.size() != 2)
                throw ParseError(line_no, "malformed or duplicate 'actions'");
            actions = parse_int(w[1], line_no);
        } else if (w[0] == "state") {
            ensure_shape(line_no);
            if (w.size() != 4)
                throw ParseError(line_no, "'state' takes layer, index and name");
            const int k = parse_int(w[1], line_no), x = parse_int(w[2], line_no);
            if (k < 0 || k > shape->horizon() || x < 0 || x >= shape->layer_size(k))
                throw ParseError(line_no, "state index out of range");
            state_labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] = std::string(w[3]);
        } else if (w[0] == "action") {
            ensure_shape(line_no);
            if (w.size() != 3)
                throw ParseError(line_no, "'action' takes index and name");
            const int a = parse_int(w[1], line_no);
            if (a < 0 || a >= shape->num_actions())
                throw ParseError(line_no, "action index out of range");
            action_labels[static_cast<std::size_t>(a)] = std::string(w[2]);
        } else if (w[0] == "row") {
            ensure_shape(line_no);
            if (w.size() < 4)
                throw ParseError(line_no, "'row' takes layer, state, action and probabilities");
            const int k = parse_int(w[1], line_no), x = parse_int(w[2], line_no), a = parse_int(w[3], line_no);
            if (k < 0 || k >= shape->horizon() || x < 0 || x >= shape->layer_size(k) || a < 0 ||
                a >= shape->num_actions())
                throw ParseError(line_no, "row index out of range");
            const std::size_t pair = shape->pair_id(k, x, a);
            if (seen[pair])
                throw ParseError(line_no, "duplicate row");
            seen[pair] = 1;
            auto row = transition->row(pair);
            if (w.size() - 4 != row.size())
                throw ParseError(line_no, "row needs " + std::to_string(row.size()) + " probabilities");
            double sum = 0.0;
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] = parse_double(w[4 + i], line_no);
                if (row[i] < 0.0)
                    throw ParseError(line_no, "negative probability");
                sum += row[i];
            }
            if (std::abs(sum - 1.0) > load_row_tolerance)
                throw ParseError(line_no, "row sums to " + format_double(sum));
            if (std::abs(sum - 1.0) > structural_tolerance)
                for (double& v : row)
                    v /= sum;
        } else {
            throw ParseError(line_no, "unknown keyword '" + std::string(w[0]) + "'");
        }
    }
    if (!header)
        throw ParseError(line_no, "empty MDP description");
    ensure_shape(line_no);
    for (std::size_t pair = 0; pair < seen.size(); ++pair) {
        if (!seen[pair])
            throw ParseError(line_no, "missing row for layer " + std::to_string(shape->pair_layer(pair)) + " state " +
                                          std::to_string(shape->state_local(shape->pair_state(pair))) + " action " +
                                          std::to_string(shape->pair_action(pair)));
    }
    LayeredMdp mdp(shape, std::move(*transition));
    mdp.state_labels = std::move(state_labels);
    mdp.action_labels = std::move(action_labels);
    return mdp;
}

LayeredMdp load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open MDP file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_mdp(buffer.str());
}

std::string format_mdp(const LayeredMdp& mdp) {
    const Shape& s = mdp.shape();
    std::ostringstream out;
    out << "ucoreps-mdp 1\nlayers";
    for (int n : s.layer_sizes())
        out << ' ' << n;
    out << "\nactions " << s.num_actions() << '\n';
    for (std::size_t k = 0; k < mdp.state_labels.size(); ++k)
        for (std::size_t x = 0; x < mdp.state_labels[k].size(); ++x)
            if (!mdp.state_labels[k][x].empty())
                out << "state " << k << ' ' << x << ' ' << mdp.state_labels[k][x] << '\n';
    for (std::size_t a = 0; a < mdp.action_labels.size(); ++a)
        if (!mdp.action_labels[a].empty())
            out << "action " << a << ' ' << mdp.action_labels[a] << '\n';
    for (std::size_t pair = 0; pair < s.num_pairs(); ++pair) {
        out << "row " << s.pair_layer(pair) << ' ' << s.state_local(s.pair_state(pair)) << ' ' << s.pair_action(pair);
        for (double v : mdp.transition().row(pair))
            out << ' ' << format_double(v);
        out << '\n';
    }
    return out.str();
}

void save_mdp(const LayeredMdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write MDP file " + path.string());
    out << format_mdp(mdp);
}

} // namespace ucoreps
