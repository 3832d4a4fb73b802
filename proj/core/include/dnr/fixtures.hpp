#pragma once

#include <string>
#include <vector>

#include "dnr/causal.hpp"

namespace dnr::causal {

// Built-in example graphs used by the documentation, the CLI (--fixture) and
// the test suite:
//   fig2  — five-variable distillation model: X -> Y, X -> K, K -> Y,
//           P -> K, P -> F, F -> Y. Conditioning on K opens the collider
//           route X -> K <- P -> F -> Y even though no path points into X.
//   fig3a — textbook confounder: T -> X, T -> Y, X -> Y.
//   fig3b — collider example: X -> Y, X -> W, Z -> W, T -> Z, T -> Y. The
//           route X -> W <- Z <- T -> Y is closed until W is conditioned on.
//   fig3c, fig3d — aliases of the fig3b graph; the scenarios they illustrate
//           differ only in the conditioning set of the query, not in
//           structure.
CausalDag example_graph(const std::string& name);

std::vector<std::string> example_graph_names();

}  // namespace dnr::causal
