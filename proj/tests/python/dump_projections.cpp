// Writes random projection instances and the library's projections as JSON,
// for the independent convex-solver check in check_projections.py.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "instances.hpp"
#include "json.hpp"
#include "ucoreps/projection.hpp"

using namespace ucoreps;
using namespace ucoreps::testing;

int main(int argc, char** argv) {
    CLI::App app{"Dump projection instances"};
    int count = 20;
    std::string out = "-";
    app.add_option("-n,--count", count, "Instances (seeds 1..n)")->check(CLI::PositiveNumber);
    app.add_option("-o,--out", out, "Output file, '-' for stdout");
    CLI11_PARSE(app, argc, argv);

    nlohmann::json doc = nlohmann::json::array();
    for (int i = 1; i <= count; ++i) {
        const auto inst = random_projection_instance(static_cast<std::uint64_t>(i));
        const Shape& s = *inst.shape;
        const DualProblem problem(inst.q_t, inst.z, inst.eta, inst.set);
        const auto target = problem.unconstrained();
        const auto result = project(problem);

        std::vector<std::size_t> pair;
        std::vector<int> source, target_state, layer;
        for (std::size_t j = 0; j < s.num_triples(); ++j) {
            pair.push_back(s.triple_pair(j));
            source.push_back(s.triple_source(j));
            target_state.push_back(s.triple_target(j));
            layer.push_back(s.triple_layer(j));
        }
        doc.push_back(
            {{"seed", i},
             {"layers", s.layer_sizes()},
             {"actions", s.num_actions()},
             {"num_states", s.num_states()},
             {"pair", pair},
             {"source", source},
             {"target", target_state},
             {"layer", layer},
             {"q_tilde", std::vector<double>(target.values().begin(), target.values().end())},
             {"estimate", std::vector<double>(inst.set.estimate.values().begin(), inst.set.estimate.values().end())},
             {"radius", inst.set.radius},
             {"q", std::vector<double>(result.q.values().begin(), result.q.values().end())},
             {"objective", unnormalized_kl(result.q, target)}});
    }
    const std::string text = doc.dump(1);
    if (out == "-") {
        std::cout << text << '\n';
    } else {
        std::ofstream f(out);
        f << text << '\n';
    }
    return 0;
}
