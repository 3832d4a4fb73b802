#include "dnr/fixtures.hpp"

namespace dnr::causal {

CausalDag example_graph(const std::string& name) {
    CausalDag g;
    if (name == "fig2") {
        g.add_edge("X", "Y");
        g.add_edge("X", "K");
        g.add_edge("K", "Y");
        g.add_edge("P", "K");
        g.add_edge("P", "F");
        g.add_edge("F", "Y");
        return g;
    }
    if (name == "fig3a") {
        g.add_edge("T", "X");
        g.add_edge("T", "Y");
        g.add_edge("X", "Y");
        return g;
    }
    if (name == "fig3b" || name == "fig3c" || name == "fig3d") {
        g.add_edge("X", "Y");
        g.add_edge("X", "W");
        g.add_edge("Z", "W");
        g.add_edge("T", "Z");
        g.add_edge("T", "Y");
        return g;
    }
    throw invalid_input("unknown fixture '" + name + "' (have: fig2, fig3a, fig3b, fig3c, fig3d)");
}

std::vector<std::string> example_graph_names() {
    return {"fig2", "fig3a", "fig3b", "fig3c", "fig3d"};
}

}  // namespace dnr::causal
