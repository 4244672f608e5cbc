#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hystlat/output.hpp"

using namespace hystlat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

SupraSweepSpec small_sweep() {
    SupraSweepSpec s;
    s.params.n_sites = 10;
    s.f_grid = {0.0, 0.5, 1.0};
    s.integrator.t_end = 5.0;
    return s;
}

json read_json(const fs::path& p) { return parse_json_text(read_file(p)); }

}  // namespace

TEST_CASE("sha256 known digests") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("format_double round-trips exactly") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(2.8) == "2.7999999999999998");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
    Catch::SimplePcg32 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::ldexp(static_cast<double>(rng()) - 2147483648.0, static_cast<int>(rng() % 200) - 100);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("zero trajectory table") {
    Trajectory traj;
    for (double t : {0.0, 0.1, 0.2}) {
        traj.sample_times.push_back(t);
        traj.states.emplace_back(2);
    }
    const Table t = displacement_table(traj);
    CHECK(t.header == std::vector<std::string>{"t", "x_1", "x_2"});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1] == std::vector<std::string>{"0.10000000000000001", "0", "0"});
    CHECK(render_table(t) == "t,x_1,x_2\n0,0,0\n0.10000000000000001,0,0\n0.20000000000000001,0,0\n");
    CHECK(displacement_table(traj, 12).header.back() == "x_13");
}

TEST_CASE("table render and parse are inverse") {
    Table t{{"a", "b"}, {{"1", "2.5"}, {"-3", "nan"}}};
    CHECK(parse_table(render_table(t)) == t);
    CHECK(parse_table("a,b\r\n1,2\r\n") == Table{{"a", "b"}, {{"1", "2"}}});
}

TEST_CASE("sweep outputs, manifest and rerun") {
    TempDir tmp("hystlat_test_output");
    const ExperimentSpec spec = small_sweep();
    const auto result = run_experiment(spec);
    const auto dir = tmp.path / "run";
    const RunManifest m = write_outputs(spec, result, dir, {1.5, 2});

    const json manifest = read_json(dir / kManifestName);
    CHECK(manifest.at("tool_version") == kVersion);
    CHECK(manifest.at("threads") == 2);
    CHECK(manifest.at("wall_clock_seconds") == 1.5);
    CHECK(manifest.at("integrator").at("method") == "tsit5");
    CHECK(spec_from_manifest(manifest) == spec);

    // Every listed file exists with the recorded size and digest; nothing else is written.
    std::size_t on_disk = 0;
    for (const auto& entry : fs::directory_iterator(dir)) on_disk += entry.path().filename() != kManifestName;
    CHECK(manifest.at("files").size() == on_disk);
    for (const auto& f : manifest.at("files")) {
        const auto bytes = read_file(dir / f.at("name").get<std::string>());
        CHECK(f.at("bytes") == bytes.size());
        CHECK(f.at("sha256") == sha256_hex(bytes));
    }
    CHECK(m.files.size() == on_disk);

    // f_critical, when present, is an element of the amplitude grid.
    const json summary = read_json(dir / "summary.json");
    const auto& sweep = std::get<SweepResult>(result);
    if (!summary.at("f_critical").is_null()) {
        const double f = summary.at("f_critical");
        CHECK(std::find(sweep.amplitudes.begin(), sweep.amplitudes.end(), f) != sweep.amplitudes.end());
    }

    // Parsing the table back and writing it again reproduces the bytes.
    const auto text = read_file(dir / "sweep.csv");
    Table back = parse_table(text);
    for (auto& row : back.rows)
        for (auto& cell : row) cell = format_double(std::strtod(cell.c_str(), nullptr));
    CHECK(render_table(back) == text);

    // Re-running the manifest's spec gives identical result files.
    const auto rerun_spec = spec_from_manifest(manifest);
    const auto rerun = write_outputs(rerun_spec, run_experiment(rerun_spec, {3}), tmp.path / "rerun");
    REQUIRE(rerun.files.size() == m.files.size());
    for (std::size_t i = 0; i < m.files.size(); ++i) {
        CHECK(rerun.files[i].name == m.files[i].name);
        CHECK(rerun.files[i].sha256 == m.files[i].sha256);
    }
}

TEST_CASE("outputs for every experiment kind") {
    TempDir tmp("hystlat_test_output_kinds");
    LatticeParams p;
    p.n_sites = 6;

    SingleSpec single;
    single.params = p;
    single.integrator.t_end = 1.0;
    single.snapshot_times = {0.5};
    FcrCurveSpec curve;
    curve.params = p;
    curve.omega_grid = {1.0, 3.0};
    curve.f_grid = {0.1, 0.2};
    curve.integrator.t_end = 1.0;
    WavePacketSpec packet;
    packet.params = p;
    packet.packet_length = 3;
    packet.integrator.t_end = 2.0;
    packet.integrator.sample_interval = 0.5;
    packet.snapshot_times = {0.0, 2.0};
    BreatherSpec breather;
    breather.params = p;
    breather.observed_first = 2;
    breather.observed_last = 4;
    breather.integrator.t_end = 12.0;
    StochasticEnsembleSpec ensemble;
    ensemble.params = p;
    ensemble.realizations = 3;
    ensemble.seed_base = 10;
    ensemble.sde.t_end = 1.0;
    FcrDistributionSpec dist;
    dist.params = p;
    dist.realizations = 2;
    dist.f_grid = {0.1, 0.2};
    dist.sde.t_end = 1.0;

    const std::vector<std::pair<ExperimentSpec, std::vector<std::string>>> cases{
        {single, {"trajectory.csv", "energy.csv", "snapshots.csv"}},
        {curve, {"fcr_curve.csv", "sweep_01.csv", "sweep_02.csv", "summary.json"}},
        {packet, {"energy.csv", "snapshots.csv"}},
        {breather, {"trajectory.csv", "observed.csv", "energy.csv", "envelope.csv", "summary.json"}},
        {ensemble, {"ensemble.csv", "summary.json"}},
        {dist, {"fcr_samples.csv", "ecdf.csv", "summary.json"}},
    };
    int i = 0;
    for (const auto& [spec, names] : cases) {
        const auto dir = tmp.path / std::to_string(i++);
        const auto m = write_outputs(spec, run_experiment(spec), dir);
        REQUIRE(m.files.size() == names.size());
        for (std::size_t k = 0; k < names.size(); ++k) CHECK(m.files[k].name == names[k]);
        CHECK(fs::exists(dir / kManifestName));
    }

    const auto ens = read_table(tmp.path / "4" / "ensemble.csv");
    CHECK(ens.header == std::vector<std::string>{"realization", "seed", "log10_Df", "supra_flag"});
    REQUIRE(ens.rows.size() == 3);
    CHECK(ens.rows[2][0] == "2");
    CHECK(ens.rows[2][1] == "12");
    CHECK(read_json(tmp.path / "4" / kManifestName).at("seeds") == json{10, 11, 12});

    const auto observed = read_table(tmp.path / "3" / "observed.csv");
    CHECK(observed.header == std::vector<std::string>{"t", "x_2", "x_3", "x_4"});
    const auto curve_table = read_table(tmp.path / "1" / "fcr_curve.csv");
    CHECK(curve_table.rows[0][1] == "nan");
    CHECK(curve_table.rows[0][2] == "0");
}

TEST_CASE("I/O failures clean up and raise IoError") {
    TempDir tmp("hystlat_test_output_fail");
    const ExperimentSpec spec = small_sweep();
    const auto result = run_experiment(spec);

    const auto file = tmp.path / "not_a_dir";
    std::ofstream(file) << "x";
    CHECK_THROWS_AS(write_outputs(spec, result, file), IoError);
    CHECK_THROWS_AS(write_outputs(spec, result, file / "sub"), IoError);

    // A file that cannot be created part-way through removes what was already written.
    const auto dir = tmp.path / "partial";
    fs::create_directories(dir / "summary.json");  // a directory where a file must go
    CHECK_THROWS_AS(write_outputs(spec, result, dir), IoError);
    CHECK_FALSE(fs::exists(dir / "sweep.csv"));
    CHECK_FALSE(fs::exists(dir / kManifestName));

    {
        OutputWriter w(tmp.path / "abandoned");
        w.write("a.txt", "hello");
        CHECK(fs::exists(tmp.path / "abandoned" / "a.txt"));
    }
    CHECK_FALSE(fs::exists(tmp.path / "abandoned"));
}
