#include "dnr/formats.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dnr/errors.hpp"

namespace dnr::formats {

namespace {

using nlohmann::json;

json parse_json_line(const std::string& line, long line_number) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what(), line_number);
    }
}

std::vector<double> number_array(const json& j, const char* field, long line_number) {
    if (!j.contains(field)) {
        throw parse_error(std::string("missing field \"") + field + "\"", line_number);
    }
    const json& arr = j.at(field);
    if (!arr.is_array() || arr.empty()) {
        throw parse_error(std::string("field \"") + field + "\" must be a non-empty array",
                          line_number);
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const json& v : arr) {
        if (!v.is_number()) {
            throw parse_error(std::string("field \"") + field + "\" must contain only numbers",
                              line_number);
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string strip_comment_and_trim(const std::string& line) {
    std::string s = line;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    return trim(s);
}

}  // namespace

kd::SampleBatch parse_batch_jsonl(const std::string& text) {
    kd::SampleBatch batch;
    std::vector<std::vector<double>> teacher_rows;
    std::vector<std::vector<double>> student_rows;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    bool background_seen = false;
    std::size_t background_index = 0;

    std::istringstream in(text);
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const json j = parse_json_line(trimmed, line_number);
        if (!j.is_object()) throw parse_error("each line must be a JSON object", line_number);

        const std::vector<double> teacher = number_array(j, "teacher", line_number);
        const std::vector<double> student = number_array(j, "student", line_number);
        if (teacher.size() != student.size()) {
            throw parse_error("\"teacher\" and \"student\" lengths differ", line_number);
        }
        if (num_classes == 0) {
            num_classes = teacher.size();
            if (num_classes < 2) {
                throw parse_error("at least two classes are required", line_number);
            }
        } else if (teacher.size() != num_classes) {
            throw parse_error("logit length differs from earlier lines", line_number);
        }

        if (!j.contains("label")) throw parse_error("missing field \"label\"", line_number);
        const json& label = j.at("label");
        int label_value = 0;
        if (label.is_string()) {
            if (label.get<std::string>() != "bg") {
                throw parse_error("\"label\" must be a class index or the string \"bg\"",
                                  line_number);
            }
            label_value = kd::kBackground;
        } else if (label.is_number_integer()) {
            label_value = label.get<int>();
            if (label_value < 0 || static_cast<std::size_t>(label_value) >= num_classes) {
                throw parse_error("\"label\" out of range", line_number);
            }
        } else {
            throw parse_error("\"label\" must be a class index or the string \"bg\"", line_number);
        }

        std::size_t line_bg = num_classes - 1;
        if (j.contains("background_index")) {
            const json& bg = j.at("background_index");
            if (!bg.is_number_integer() || bg.get<long>() < 0 ||
                bg.get<std::size_t>() >= num_classes) {
                throw parse_error("\"background_index\" out of range", line_number);
            }
            line_bg = bg.get<std::size_t>();
        }
        if (!background_seen) {
            background_seen = true;
            background_index = line_bg;
        } else if (line_bg != background_index) {
            throw parse_error("\"background_index\" differs from earlier lines", line_number);
        }
        if (label_value >= 0 && static_cast<std::size_t>(label_value) == line_bg) {
            throw parse_error("foreground \"label\" equals the background index", line_number);
        }

        teacher_rows.push_back(teacher);
        student_rows.push_back(student);
        labels.push_back(label_value);
    }

    if (teacher_rows.empty()) throw parse_error("input holds no samples");

    batch.teacher_logits = Matrix(teacher_rows.size(), num_classes, 0.0);
    batch.student_logits = Matrix(student_rows.size(), num_classes, 0.0);
    for (std::size_t i = 0; i < teacher_rows.size(); ++i) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            batch.teacher_logits(i, c) = teacher_rows[i][c];
            batch.student_logits(i, c) = student_rows[i][c];
        }
    }
    batch.labels = std::move(labels);
    batch.background_index = background_index;
    batch.validate();
    return batch;
}

causal::CausalDag parse_graph_text(const std::string& text) {
    causal::CausalDag dag;
    std::istringstream in(text);
    std::string line;
    long line_number = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string s = strip_comment_and_trim(line);
        if (s.empty()) continue;
        any = true;

        std::istringstream tokens(s);
        std::string from, arrow, to, extra;
        tokens >> from;
        if (!(tokens >> arrow)) {
            dag.add_node(from);  // bare name: isolated node
            continue;
        }
        if (arrow != "->" || !(tokens >> to) || (tokens >> extra)) {
            throw parse_error("expected \"A -> B\" or a bare node name", line_number);
        }
        try {
            dag.add_edge(from, to);
        } catch (const invalid_input& e) {
            throw parse_error(e.what(), line_number);
        }
    }
    if (!any) throw parse_error("graph text holds no nodes");
    return dag;
}

causal::DiscreteScm parse_scm_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc.at("nodes").is_array() ||
        doc.at("nodes").empty()) {
        throw parse_error("expected an object with a non-empty \"nodes\" array");
    }

    causal::CausalDag dag;
    struct NodeSpec {
        std::string name;
        std::vector<std::string> domain;
        std::vector<std::string> parents;
        std::vector<std::vector<double>> cpt;
    };
    std::vector<NodeSpec> specs;

    for (const json& nj : doc.at("nodes")) {
        if (!nj.is_object() || !nj.contains("name") || !nj.at("name").is_string()) {
            throw parse_error("every node needs a string \"name\"");
        }
        NodeSpec spec;
        spec.name = nj.at("name").get<std::string>();
        if (!nj.contains("domain") || !nj.at("domain").is_array() || nj.at("domain").size() < 2) {
            throw parse_error("node \"" + spec.name + "\" needs a domain of at least two labels");
        }
        for (const json& d : nj.at("domain")) {
            if (!d.is_string()) {
                throw parse_error("node \"" + spec.name + "\": domain labels must be strings");
            }
            spec.domain.push_back(d.get<std::string>());
        }
        if (nj.contains("parents")) {
            if (!nj.at("parents").is_array()) {
                throw parse_error("node \"" + spec.name + "\": \"parents\" must be an array");
            }
            for (const json& p : nj.at("parents")) {
                if (!p.is_string()) {
                    throw parse_error("node \"" + spec.name + "\": parent names must be strings");
                }
                spec.parents.push_back(p.get<std::string>());
            }
        }
        if (!nj.contains("cpt") || !nj.at("cpt").is_array()) {
            throw parse_error("node \"" + spec.name + "\" needs a \"cpt\" array of rows");
        }
        for (const json& row : nj.at("cpt")) {
            if (!row.is_array()) {
                throw parse_error("node \"" + spec.name + "\": cpt rows must be arrays");
            }
            std::vector<double> r;
            for (const json& v : row) {
                if (!v.is_number()) {
                    throw parse_error("node \"" + spec.name + "\": cpt entries must be numbers");
                }
                r.push_back(v.get<double>());
            }
            spec.cpt.push_back(std::move(r));
        }
        dag.add_node(spec.name);
        specs.push_back(std::move(spec));
    }

    for (const NodeSpec& spec : specs) {
        for (const std::string& parent : spec.parents) {
            if (!dag.has_node(parent)) {
                throw parse_error("node \"" + spec.name + "\": unknown parent \"" + parent + "\"");
            }
            try {
                dag.add_edge(parent, spec.name);
            } catch (const invalid_input& e) {
                throw parse_error("node \"" + spec.name + "\": " + e.what());
            }
        }
    }

    std::vector<std::vector<std::string>> domains(specs.size());
    std::vector<causal::Cpt> cpts(specs.size());
    for (const NodeSpec& spec : specs) {
        const int id = dag.node(spec.name);
        domains[static_cast<std::size_t>(id)] = spec.domain;

        causal::Cpt cpt;
        std::size_t rows = 1;
        for (const std::string& parent : spec.parents) {
            const int pid = dag.node(parent);
            cpt.parents.push_back(pid);
        }
        // Row count needs parent domain sizes, known only after all domains
        // are collected; fill the table below.
        for (const int pid : cpt.parents) {
            rows *= domains[static_cast<std::size_t>(pid)].size();
        }
        if (spec.cpt.size() != rows) {
            throw parse_error("node \"" + spec.name + "\": cpt needs " + std::to_string(rows) +
                              " rows, found " + std::to_string(spec.cpt.size()));
        }
        cpt.table = Matrix(rows, spec.domain.size(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            if (spec.cpt[r].size() != spec.domain.size()) {
                throw parse_error("node \"" + spec.name + "\": cpt row " + std::to_string(r) +
                                  " needs " + std::to_string(spec.domain.size()) + " entries");
            }
            for (std::size_t v = 0; v < spec.domain.size(); ++v) {
                cpt.table(r, v) = spec.cpt[r][v];
            }
        }
        cpts[static_cast<std::size_t>(id)] = std::move(cpt);
    }

    try {
        return causal::DiscreteScm(std::move(dag), std::move(domains), std::move(cpts));
    } catch (const invalid_input& e) {
        throw parse_error(e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw invalid_input("cannot open file for writing: " + path);
    out << content;
    if (!out) throw invalid_input("failed writing file: " + path);
}

void TableDoc::add_row(std::vector<nlohmann::json> row) {
    if (row.size() != columns.size()) {
        throw invalid_input("row width does not match the column count");
    }
    rows.push_back(std::move(row));
}

OutputFormat parse_output_format(const std::string& name) {
    if (name == "table") return OutputFormat::table;
    if (name == "csv") return OutputFormat::csv;
    if (name == "records") return OutputFormat::records;
    throw invalid_input("unknown output format \"" + name + "\" (expected table, csv, or records)");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::string cell_text(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

std::string render(const TableDoc& doc, OutputFormat format) {
    switch (format) {
        case OutputFormat::table: return render_table(doc);
        case OutputFormat::csv: return render_csv(doc);
        case OutputFormat::records: return render_records(doc);
    }
    throw invalid_input("unknown output format");
}

std::string render_table(const TableDoc& doc) {
    std::vector<std::size_t> width(doc.columns.size(), 0);
    std::vector<std::vector<std::string>> cells;
    cells.reserve(doc.rows.size());
    for (std::size_t c = 0; c < doc.columns.size(); ++c) width[c] = doc.columns[c].size();
    for (const auto& row : doc.rows) {
        std::vector<std::string> texts;
        texts.reserve(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            texts.push_back(cell_text(row[c]));
            width[c] = std::max(width[c], texts.back().size());
        }
        cells.push_back(std::move(texts));
    }

    std::string out;
    auto emit_row = [&](const std::vector<std::string>& texts) {
        for (std::size_t c = 0; c < texts.size(); ++c) {
            if (c > 0) out += "  ";
            out += texts[c];
            if (c + 1 < texts.size()) out.append(width[c] - texts[c].size(), ' ');
        }
        out += '\n';
    };
    emit_row(doc.columns);
    std::vector<std::string> rule;
    rule.reserve(doc.columns.size());
    for (const std::size_t w : width) rule.emplace_back(w, '-');
    emit_row(rule);
    for (const auto& texts : cells) emit_row(texts);
    return out;
}

std::string render_csv(const TableDoc& doc) {
    std::string out;
    for (std::size_t c = 0; c < doc.columns.size(); ++c) {
        if (c > 0) out += ',';
        out += csv_escape(doc.columns[c]);
    }
    out += '\n';
    for (const auto& row : doc.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ',';
            out += csv_escape(cell_text(row[c]));
        }
        out += '\n';
    }
    return out;
}

std::string render_records(const TableDoc& doc) {
    std::string out;
    for (const auto& row : doc.rows) {
        nlohmann::ordered_json rec;
        for (std::size_t c = 0; c < doc.columns.size(); ++c) {
            rec[doc.columns[c]] = row[c];
        }
        out += rec.dump();
        out += '\n';
    }
    return out;
}

}  // namespace dnr::formats
