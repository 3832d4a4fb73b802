#pragma once

#include <string>
#include <vector>

#include "dnr/causal.hpp"
#include "dnr/kd.hpp"
#include "dnr/scm.hpp"
#include "json.hpp"

namespace dnr::formats {

// ---------------------------------------------------------------------------
// Input formats
// ---------------------------------------------------------------------------

// Logit batches arrive as JSON Lines: one object per sample, e.g.
//
//     {"teacher": [2.0, 1.0, 0.5], "student": [1.0, 2.0, 0.0], "label": 0}
//     {"teacher": [0.5, -1.0, 1.5], "student": [1.5, 0.0, 1.0], "label": "bg"}
//
// "label" is a foreground class index or the string "bg". The optional
// "background_index" names the class playing the background role; it defaults
// to the last index and must agree across lines. Blank lines are skipped.
// Malformed input throws parse_error carrying the 1-based line number.
kd::SampleBatch parse_batch_jsonl(const std::string& text);

// Graph text: one edge per line as "A -> B"; a line with a single token
// declares an isolated node. '#' starts a comment; blank lines are skipped.
causal::CausalDag parse_graph_text(const std::string& text);

// Structural model JSON:
//
//     {"nodes": [
//       {"name": "X", "domain": ["0", "1"], "parents": [], "cpt": [[0.3, 0.7]]},
//       {"name": "Y", "domain": ["0", "1"], "parents": ["X"],
//        "cpt": [[0.2, 0.8], [0.9, 0.1]]}
//     ]}
//
// Edges are implied by the parent lists. CPT rows enumerate parent
// assignments in mixed radix with the first listed parent most significant;
// row r, column v is P(node = domain[v] | parents = decode(r)).
causal::DiscreteScm parse_scm_json(const std::string& text);

// Reads a whole file; throws invalid_input when the file cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// Output documents
// ---------------------------------------------------------------------------

// A rectangular result document that can render as an aligned text table,
// CSV, or JSON Lines records. Cells are JSON values so renderers can
// distinguish numbers from strings.
struct TableDoc {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    void add_row(std::vector<nlohmann::json> row);
};

enum class OutputFormat { table, csv, records };

OutputFormat parse_output_format(const std::string& name);

std::string render(const TableDoc& doc, OutputFormat format);
std::string render_table(const TableDoc& doc);
std::string render_csv(const TableDoc& doc);
std::string render_records(const TableDoc& doc);

// Shortest-round-trip style numeric rendering ("%.12g"): stable across runs,
// compact, and precise enough to distinguish any values the tolerances care
// about.
std::string format_double(double v);

}  // namespace dnr::formats
