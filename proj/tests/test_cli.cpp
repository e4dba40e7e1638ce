#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(KWGRAPH_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) {
        result.output.append(buf, got);
    }
    const int status = pclose(pipe);
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "kwgraph_cli_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

fs::path two_vertex_graph_file() {
    return write_file("graph2.json", R"({
        "vertices":[{"id":"a","mu":1.0},{"id":"b","mu":1.0}],
        "edges":[{"u":"a","v":"b","w":1.0}]
    })");
}

std::string strip_timing(const std::string& text) {
    json doc = json::parse(text);
    doc.erase("wall_time_ms");
    return doc.dump(2);
}

}  // namespace

TEST_CASE("solve emits an all-zero solution for c=1, h=1") {
    const auto graph = two_vertex_graph_file();
    CliResult r = run_cli("solve --graph " + graph.string() + " --c 1 --h-const 1 --p 2");
    CHECK(r.code == 0);
    const json doc = json::parse(r.output);
    CHECK(doc.at("command") == "solve");
    CHECK(doc.at("report").at("converged") == true);
    for (const auto& [id, value] : doc.at("report").at("solution").items()) {
        (void)id;
        CHECK(std::abs(value.get<double>()) <= 1e-6);
    }
}

TEST_CASE("precheck reports the violated condition with exit 2") {
    const auto graph = two_vertex_graph_file();
    CliResult r = run_cli("precheck --graph " + graph.string() + " --c 0 --h-const 1");
    CHECK(r.code == 2);
    const json doc = json::parse(r.output);
    CHECK(doc.at("verdict").at("status") == "Unsolvable");
    CHECK(doc.at("verdict").at("reason") == "h does not change sign");
}

TEST_CASE("solve then verify round-trips through the report file") {
    const auto graph = two_vertex_graph_file();
    const auto report_path = (work_dir() / "solution.json").string();
    CliResult solved = run_cli("solve --graph " + graph.string() +
                               " --c -4 --h-const -1 --p 2 --out " + report_path);
    REQUIRE(solved.code == 0);

    CliResult verified = run_cli("verify --graph " + graph.string() +
                                 " --c -4 --h-const -1 --p 2 --u " + report_path);
    CHECK(verified.code == 0);
    const json doc = json::parse(verified.output);
    CHECK(doc.at("verified") == true);

    // perturb one vertex: the residual leaves the tolerance, exit 3
    json report = json::parse(std::ifstream(report_path));
    json sol = report.at("report").at("solution");
    sol["a"] = sol["a"].get<double>() + 0.1;
    const auto bad_path = write_file("perturbed.json", sol.dump());
    CliResult rejected = run_cli("verify --graph " + graph.string() +
                                 " --c -4 --h-const -1 --p 2 --u " + bad_path.string());
    CHECK(rejected.code == 3);
    CHECK(json::parse(rejected.output).at("verified") == false);
}

TEST_CASE("reports are deterministic apart from the timing field") {
    const auto graph = two_vertex_graph_file();
    const std::string args = "solve --graph " + graph.string() +
                             " --c 0 --h " +
                             write_file("h.json", R"({"a":1.0,"b":-2.0})").string() +
                             " --p 2 --seed 5";
    CliResult first = run_cli(args);
    CliResult second = run_cli(args);
    REQUIRE(first.code == 0);
    REQUIRE(second.code == 0);
    CHECK(strip_timing(first.output) == strip_timing(second.output));
}

TEST_CASE("malformed inputs exit 1 and name the offending field") {
    const auto bad_mu = write_file("bad_mu.json", R"({
        "vertices":[{"id":"a","mu":-1.0},{"id":"b","mu":1.0}],
        "edges":[{"u":"a","v":"b","w":1.0}]
    })");
    CliResult r = run_cli("precheck --graph " + bad_mu.string() + " --c 0 --h-const 1");
    CHECK(r.code == 1);
    CHECK(r.output.find("mu") != std::string::npos);

    const auto bad_edge = write_file("bad_edge.json", R"({
        "vertices":[{"id":"a","mu":1.0},{"id":"b","mu":1.0}],
        "edges":[{"u":"a","v":"zz","w":1.0}]
    })");
    r = run_cli("precheck --graph " + bad_edge.string() + " --c 0 --h-const 1");
    CHECK(r.code == 1);
    CHECK(r.output.find("zz") != std::string::npos);

    const auto graph = two_vertex_graph_file();
    const auto bad_h = write_file("bad_h.json", R"({"a":1.0})");
    r = run_cli("precheck --graph " + graph.string() + " --c 0 --h " + bad_h.string());
    CHECK(r.code == 1);
    CHECK(r.output.find("missing value for vertex 'b'") != std::string::npos);

    // usage errors
    CHECK(run_cli("precheck --c 0 --h-const 1").code == 1);
    CHECK(run_cli("frobnicate --graph " + graph.string()).code == 1);
    CHECK(run_cli("solve --graph " + graph.string() + " --c 0 --h-const 1 --h " +
                  bad_h.string())
              .code == 1);
}

TEST_CASE("cmin prints the bracket and the non-certification note") {
    const auto graph = two_vertex_graph_file();
    const auto h = write_file("h_cmin.json", R"({"a":0.0,"b":-2.0})");
    CliResult r = run_cli("cmin --graph " + graph.string() + " --h " + h.string() + " --p 2");
    CHECK(r.code == 0);
    const json doc = json::parse(r.output);
    CHECK(doc.at("cmin").at("c_solvable") == "-inf");
    CHECK(doc.at("cmin").at("c_unresolved") == "-inf");
    const std::string note = doc.at("cmin").at("note");
    CHECK(note.find("not a certificate") != std::string::npos);

    const auto h2 = write_file("h_cmin2.json", R"({"a":1.0,"b":-3.0})");
    r = run_cli("cmin --graph " + graph.string() + " --h " + h2.string() + " --p 2");
    CHECK(r.code == 0);
    const json doc2 = json::parse(r.output);
    CHECK(doc2.at("cmin").at("c_solvable").get<double>() <= -0.05);
}

TEST_CASE("poincare, lsolve and poisson subcommands") {
    const auto graph = two_vertex_graph_file();

    CliResult r = run_cli("poincare --graph " + graph.string() + " --p 2 --seed 3");
    CHECK(r.code == 0);
    const json doc = json::parse(r.output);
    CHECK(std::abs(doc.at("poincare").at("constant").get<double>() - 0.5) <= 1e-6);

    r = run_cli("lsolve --graph " + graph.string() + " --p 2 --k-const 1 --f-const -1");
    CHECK(r.code == 0);
    const json lsol = json::parse(r.output);
    CHECK(lsol.at("report").at("converged") == true);
    for (const auto& [id, value] : lsol.at("report").at("solution").items()) {
        (void)id;
        CHECK(std::abs(value.get<double>() - 1.0) <= 1e-6);
    }

    const auto f = write_file("f_poisson.json", R"({"a":0.0,"b":2.0})");
    r = run_cli("poisson --graph " + graph.string() + " --p 2 --f " + f.string());
    CHECK(r.code == 0);
    const json poisson = json::parse(r.output);
    CHECK(std::abs(poisson.at("report").at("solution").at("a").get<double>() + 0.5) <= 1e-6);
    CHECK(std::abs(poisson.at("report").at("solution").at("b").get<double>() - 0.5) <= 1e-6);
}
