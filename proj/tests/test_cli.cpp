#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

// Runs the installed CLI with the given argument string, capturing streams.
CommandResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string tag = "/tmp/dnr_cli_" + std::to_string(++counter);
    const std::string out_path = tag + ".out";
    const std::string err_path = tag + ".err";
    const std::string cmd =
        std::string("\"") + DNR_CLI_PATH + "\" " + args + " > " + out_path + " 2> " + err_path;

    CommandResult result;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

const char* kBatchFile = "/tmp/dnr_cli_batch.jsonl";

void write_reference_batch() {
    spill(kBatchFile,
          "{\"teacher\": [2.0, 1.0, 0.5, -0.5], \"student\": [1.0, 2.0, 0.0, 0.5], \"label\": 1}\n"
          "{\"teacher\": [0.5, -1.0, 1.5, 2.5], \"student\": [1.5, 0.0, 1.0, 0.5], "
          "\"label\": \"bg\"}\n");
}

}  // namespace

TEST_CASE("decompose reports per-sample terms and the remerged loss") {
    write_reference_batch();
    const CommandResult table = run_cli(std::string("decompose -i ") + kBatchFile + " -T 2");
    CHECK(table.exit_code == 0);
    CHECK(table.out.find("sample") != std::string::npos);
    CHECK(table.out.find("batch") != std::string::npos);

    const CommandResult records =
        run_cli(std::string("decompose -i ") + kBatchFile + " -T 2 --format records");
    REQUIRE(records.exit_code == 0);

    // The last record is the batch row; check the remerged loss against the
    // value the unit suite pins for these exact logits.
    std::istringstream lines(records.out);
    std::string line, last;
    while (std::getline(lines, line)) {
        if (!line.empty()) last = line;
    }
    const nlohmann::json batch_row = nlohmann::json::parse(last);
    CHECK(batch_row.at("sample") == "batch");
    CHECK(std::abs(batch_row.at("dnr_loss").get<double>() - 0.32518340301314681148) < 1e-12);
    CHECK(batch_row.at("residual").get<double>() < 1e-12);
}

TEST_CASE("gradcheck passes at the default tolerance and fails at an absurd one") {
    const CommandResult pass = run_cli("gradcheck --trials 10 --seed 4");
    CHECK(pass.exit_code == 0);
    CHECK(pass.out.find("gradient check: PASS") != std::string::npos);

    const CommandResult fail = run_cli("gradcheck --trials 5 --seed 4 --tolerance 1e-20");
    CHECK(fail.exit_code == 6);
    CHECK(fail.out.find("gradient check: FAIL") != std::string::npos);
}

TEST_CASE("causal dsep: conditioning on a collider couples the branch points") {
    const CommandResult unconditioned = run_cli("causal dsep X P --fixture fig2");
    CHECK(unconditioned.exit_code == 0);
    CHECK(unconditioned.out.find("dsep(X, P | {}) -> d-separated") != std::string::npos);

    const CommandResult conditioned = run_cli("causal dsep X P --fixture fig2 --given K");
    CHECK(conditioned.exit_code == 0);
    CHECK(conditioned.out.find("dsep(X, P | {K}) -> dependent") != std::string::npos);
    CHECK(conditioned.out.find("X -> K <- P") != std::string::npos);
}

TEST_CASE("causal backdoor: the five-node example has no classic backdoor paths") {
    const CommandResult r = run_cli("causal backdoor X Y --fixture fig2 --set \"\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("backdoor-criterion(X, Y | {}) -> satisfied") != std::string::npos);

    // Omitting --set entirely is an error, not an implicit empty set.
    const CommandResult missing = run_cli("causal backdoor X Y --fixture fig2");
    CHECK(missing.exit_code == 3);
}

TEST_CASE("causal general-backdoor: conditioning opens a confounding route") {
    const CommandResult closed = run_cli("causal general-backdoor X Y --fixture fig3b");
    CHECK(closed.exit_code == 0);
    CHECK(closed.out.find("-> 0 open non-causal paths") != std::string::npos);

    const CommandResult open = run_cli("causal general-backdoor X Y --fixture fig3b --given W");
    CHECK(open.exit_code == 0);
    CHECK(open.out.find("-> 1 open non-causal path") != std::string::npos);
    CHECK(open.out.find("X -> W <- Z <- T -> Y") != std::string::npos);

    // The record row names the fork the dependence flows from.
    const CommandResult records =
        run_cli("causal general-backdoor X Y --fixture fig3b --given W --format records");
    CHECK(records.exit_code == 0);
    CHECK(records.out.find("{\"path\":\"X -> W <- Z <- T -> Y\",\"kind\":\"general-backdoor\","
                           "\"status\":\"open\",\"confounder\":\"T\"}") != std::string::npos);
}

TEST_CASE("causal adjust: interventional distribution from a model file") {
    const char* scm_path = "/tmp/dnr_cli_scm.json";
    spill(scm_path, R"({
      "nodes": [
        {"name": "T", "domain": ["0", "1"], "parents": [], "cpt": [[0.4, 0.6]]},
        {"name": "X", "domain": ["0", "1"], "parents": ["T"],
         "cpt": [[0.7, 0.3], [0.2, 0.8]]},
        {"name": "Y", "domain": ["0", "1"], "parents": ["T", "X"],
         "cpt": [[0.9, 0.1], [0.5, 0.5], [0.6, 0.4], [0.1, 0.9]]}
      ]
    })");

    const CommandResult r = run_cli(std::string("causal adjust X Y --scm ") + scm_path +
                                    " --set T --x-value 1 --format records");
    REQUIRE(r.exit_code == 0);
    // P(Y | do(X=1)) = [0.26, 0.74] by direct summation over T.
    std::istringstream lines(r.out);
    std::string line;
    double p0 = -1.0, p1 = -1.0;
    while (std::getline(lines, line)) {
        if (line.empty() || line.front() != '{') continue;  // skip the summary line
        const nlohmann::json row = nlohmann::json::parse(line);
        if (row.at("value") == "0") p0 = row.at("probability").get<double>();
        if (row.at("value") == "1") p1 = row.at("probability").get<double>();
    }
    CHECK(std::abs(p0 - 0.26) < 1e-12);
    CHECK(std::abs(p1 - 0.74) < 1e-12);
}

TEST_CASE("exit codes distinguish the failure families") {
    // Unreadable input file: validation error.
    CHECK(run_cli("decompose -i /tmp/dnr_cli_missing.jsonl").exit_code == 3);

    // Malformed batch content: parse error.
    const char* bad_path = "/tmp/dnr_cli_bad.jsonl";
    spill(bad_path, "{\"teacher\": [1, 2], \"student\": [1, 2]}\n");
    CHECK(run_cli(std::string("decompose -i ") + bad_path).exit_code == 2);

    // Unknown flag: command-line parse error.
    CHECK(run_cli("decompose --frobnicate 3").exit_code == 2);

    // Unknown fixture name: validation error.
    CHECK(run_cli("causal dsep A B --fixture nope").exit_code == 3);

    // Conditioning on a zero-probability covariate value.
    const char* point_path = "/tmp/dnr_cli_point.json";
    spill(point_path, R"({
      "nodes": [
        {"name": "X", "domain": ["0", "1"], "parents": [], "cpt": [[0.5, 0.5]]},
        {"name": "Y", "domain": ["0", "1"], "parents": ["X"],
         "cpt": [[0.8, 0.2], [0.3, 0.7]]},
        {"name": "W", "domain": ["0", "1"], "parents": [], "cpt": [[1.0, 0.0]]}
      ]
    })");
    const CommandResult conditioning =
        run_cli(std::string("causal adjust X Y --scm ") + point_path +
                " --set \"\" --x-value 0 --given W=1");
    CHECK(conditioning.exit_code == 4);

    // A diverging training run.
    const CommandResult diverged =
        run_cli("toy --variant vanilla-kd --lr-all 1e10 --iters-base 40 --iters-all 20");
    CHECK(diverged.exit_code == 5);
    CHECK(diverged.err.find("error:") != std::string::npos);
}

TEST_CASE("config files configure the pipeline and reject unknown keys") {
    const char* cfg_path = "/tmp/dnr_cli_config.json";
    spill(cfg_path, R"({
      "task": {"base_classes": 3, "novel_classes": 2, "samples_per_base": 50,
               "feature_dim": 8, "seed": 5},
      "teacher": {"corruption_rate": 0.4},
      "train": {"iters_base": 60, "iters_all": 30, "preset": "coco"},
      "variant": "dnr"
    })");
    const CommandResult r = run_cli(std::string("toy --config ") + cfg_path + " --format records");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"metric\":\"variant\",\"value\":\"dnr\"") != std::string::npos);
    CHECK(r.out.find("novel_mean") != std::string::npos);

    const char* bad_cfg = "/tmp/dnr_cli_config_bad.json";
    spill(bad_cfg, R"({"task": {"n_classes": 4}})");
    CHECK(run_cli(std::string("toy --config ") + bad_cfg).exit_code == 2);
}

TEST_CASE("identical invocations write identical files") {
    const std::string args =
        "toy --seed 3 --iters-base 60 --iters-all 30 --variant dnr ";
    const CommandResult a = run_cli(args + "--out /tmp/dnr_cli_rep_a.jsonl");
    const CommandResult b = run_cli(args + "--out /tmp/dnr_cli_rep_b.jsonl");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out.find("wrote /tmp/dnr_cli_rep_a.jsonl") != std::string::npos);
    const std::string first = slurp("/tmp/dnr_cli_rep_a.jsonl");
    const std::string second = slurp("/tmp/dnr_cli_rep_b.jsonl");
    REQUIRE_FALSE(first.empty());
    CHECK(first == second);

    write_reference_batch();
    const std::string dec = std::string("decompose -i ") + kBatchFile + " --preset voc ";
    REQUIRE(run_cli(dec + "--out /tmp/dnr_cli_dec_a.jsonl").exit_code == 0);
    REQUIRE(run_cli(dec + "--out /tmp/dnr_cli_dec_b.jsonl").exit_code == 0);
    CHECK(slurp("/tmp/dnr_cli_dec_a.jsonl") == slurp("/tmp/dnr_cli_dec_b.jsonl"));
}

TEST_CASE("ablate and paradox produce one row per variant (and rate)") {
    const std::string shrink =
        " --iters-base 40 --iters-all 20 --seeds 2"
        " --config /tmp/dnr_cli_small_task.json";
    spill("/tmp/dnr_cli_small_task.json", R"({
      "task": {"base_classes": 3, "novel_classes": 2, "samples_per_base": 50, "feature_dim": 8},
      "teacher": {"corruption_rate": 0.4}
    })");

    const CommandResult ablate = run_cli(std::string("ablate --format csv") + shrink);
    REQUIRE(ablate.exit_code == 0);
    std::istringstream lines(ablate.out);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 9);  // header + eight variants
    CHECK(ablate.out.find("dnr") != std::string::npos);
    CHECK(ablate.out.find("vanilla-kd") != std::string::npos);

    const CommandResult paradox =
        run_cli(std::string("paradox --rhos 0,0.4 --format csv") + shrink);
    REQUIRE(paradox.exit_code == 0);
    std::istringstream plines(paradox.out);
    rows = 0;
    while (std::getline(plines, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 7);  // header + 2 rates x 3 variants
}
