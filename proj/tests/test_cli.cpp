#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "hystlat/output.hpp"

using namespace hystlat;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "hystlat_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Run cli(const std::string& args) {
    const auto out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
    const std::string cmd =
        std::string("'") + HYSTLAT_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

const std::string kSmall = "--set params.n_sites=8 --set integrator.t_end=2 --set f_grid=[0.1,0.2,0.3]";

}  // namespace

TEST_CASE("help, version and missing arguments") {
    CHECK(cli("--help").status == 0);
    const auto v = cli("--version");
    CHECK(v.status == 0);
    CHECK_THAT(v.out, ContainsSubstring(kVersion));
    CHECK(cli("").status == 2);
    CHECK(cli("frobnicate").status == 2);
    CHECK(cli("--figure 15").status == 2);
    CHECK(cli("sweep --threads many").status == 2);
}

TEST_CASE("dry run prints the materialized spec") {
    const auto r = cli("sweep --dry-run --set omega=3.5 --set params.c=0.1");
    REQUIRE(r.status == 0);
    const json j = parse_json_text(r.out);
    CHECK(j.at("experiment") == "sweep");
    CHECK(j.at("omega") == 3.5);
    CHECK(j.at("params").at("c") == 0.1);
    CHECK(j.at("integrator").at("t_end") == 200.0);
    CHECK(spec_from_json(j) == parse_config(json::object(), {"omega=3.5", "params.c=0.1"}, ExperimentKind::sweep));
}

TEST_CASE("seed flag") {
    const auto r = cli("ensemble --dry-run --seed 42");
    REQUIRE(r.status == 0);
    CHECK(parse_json_text(r.out).at("seed_base") == 42);
    const auto w = cli("wavepacket --dry-run --seed 7");
    CHECK(parse_json_text(w.out).at("seed") == 7);
    const auto s = cli("sweep --dry-run --seed 7");
    CHECK(s.status == 0);
    CHECK_THAT(s.err, ContainsSubstring("ignored"));
}

TEST_CASE("invalid configuration exits with 2") {
    const auto r = cli("sweep --set params.n_sites=0");
    CHECK(r.status == 2);
    CHECK_THAT(r.err, ContainsSubstring("n_sites"));
    CHECK(cli("sweep --set bogus=1").status == 2);
    CHECK(cli("sweep --set omega").status == 2);

    const auto bad = scratch() / "bad.json";
    std::ofstream(bad) << "{\n  \"omega\": ,\n}";
    const auto p = cli("sweep --config '" + bad.string() + "'");
    CHECK(p.status == 2);
    CHECK_THAT(p.err, ContainsSubstring("line 2"));

    const auto mismatch = scratch() / "mismatch.json";
    std::ofstream(mismatch) << R"({"experiment": "ensemble"})";
    CHECK(cli("sweep --config '" + mismatch.string() + "'").status == 2);
}

TEST_CASE("I/O failures exit with 4") {
    CHECK(cli("sweep --config '" + (scratch() / "missing.json").string() + "'").status == 4);
    const auto file = scratch() / "occupied";
    std::ofstream(file) << "x";
    const auto r = cli("sweep " + kSmall + " --out '" + file.string() + "'");
    CHECK(r.status == 4);
}

TEST_CASE("a small run writes outputs and can be replayed from its manifest") {
    const auto out = scratch() / "run";
    const auto r = cli("sweep " + kSmall + " --threads 2 --out '" + out.string() + "'");
    REQUIRE(r.status == 0);
    CHECK_THAT(r.out, ContainsSubstring("f_critical"));
    const json m = parse_json_text(read_file(out / kManifestName));
    CHECK(m.at("threads") == 2);
    CHECK(m.at("spec").at("params").at("n_sites") == 8);

    const auto again = scratch() / "again";
    const auto r2 = cli("--config '" + (out / kManifestName).string() + "' --out '" + again.string() + "'");
    REQUIRE(r2.status == 0);
    const json m2 = parse_json_text(read_file(again / kManifestName));
    CHECK(m2.at("files") == m.at("files"));
}

TEST_CASE("a config file names its experiment") {
    const auto cfg = scratch() / "ensemble.json";
    std::ofstream(cfg) << R"({"experiment": "ensemble", "params": {"n_sites": 5}, "realizations": 2,
                              "sde": {"t_end": 1.0}})";
    const auto out = scratch() / "ens";
    const auto r = cli("--config '" + cfg.string() + "' --seed 3 --out '" + out.string() + "'");
    REQUIRE(r.status == 0);
    CHECK_THAT(r.out, ContainsSubstring("probability"));
    const auto t = read_table(out / "ensemble.csv");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "3");
}
