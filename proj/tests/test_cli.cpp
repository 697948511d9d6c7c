#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = pdm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pdm_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("constants emits exact forms and decimals") {
    const auto r = run({"constants", "--dim", "3"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["n"] == 3);
    CHECK(j["C"][2][3]["exact"] == "3*pi^2/8");
    CHECK(j["C"][2][3]["value"].get<double>() == doctest::Approx(3.7011016504));
    CHECK(j["C"][1][3]["exact"] == "69*pi^2/560");
    CHECK(j["C"][3][2].is_null());
    CHECK(j["D"][2]["exact"] == "48*pi^2/35");

    const auto csv = run({"constants", "--dim", "2", "--format", "csv"});
    REQUIRE(csv.code == 0);
    CHECK(csv.out.find("C,1,1,2,\"2\"") != std::string::npos);
    CHECK(csv.out.find("C,2,2,1,\"1\"") != std::string::npos);
    CHECK(csv.out.find("D,,1,3,\"3\"") != std::string::npos);

    const auto ex = run({"constants", "--dim", "4", "--format", "exact"});
    CHECK(ex.out.find("C[4][4] = 128/27") != std::string::npos);
    CHECK(ex.out.find("D[1] = 170/9") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run({"constants", "--dim", "5"}).code == pdm::cli::config_error);
    CHECK(run({"constants"}).code == pdm::cli::config_error);
    CHECK(run({"constants", "--dim", "3", "--format", "xml"}).code == pdm::cli::config_error);
    CHECK(run({"nonsense"}).code == pdm::cli::config_error);
    CHECK(run({}).code == pdm::cli::config_error);
    CHECK(run({"--help"}).code == pdm::cli::ok);
    CHECK(run({"distribution", "--dim", "2"}).code == pdm::cli::config_error);
    const fs::path dir = scratch("codes");
    const auto sparse = run({"estimate", "--dim", "4", "--box-side", "2", "--out-dir", dir.string()});
    CHECK(sparse.code == pdm::cli::guard_violation);
    CHECK(sparse.err.find("geometric guard") != std::string::npos);
    CHECK(run({"estimate", "--dim", "5", "--out-dir", dir.string()}).code == pdm::cli::config_error);
    CHECK(run({"estimate", "--mode", "sphere", "--dim", "3", "--out-dir", dir.string()}).code ==
          pdm::cli::config_error);
    CHECK(run({"replay", (dir / "missing.json").string()}).code == pdm::cli::config_error);
}

TEST_CASE("estimate writes results with a manifest and replays bit-exactly") {
    const fs::path dir = scratch("estimate");
    const auto r = run({"estimate", "--dim", "2", "--box-side", "30", "--trials", "2", "--seed", "7", "--out-dir",
                        dir.string()});
    REQUIRE(r.code == 0);
    const fs::path out = dir / "estimate-mosaic-n2-seed7.json";
    const fs::path manifest = dir / "estimate-mosaic-n2-seed7.json.manifest.json";
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(manifest));
    const json m = json::parse(slurp(manifest));
    CHECK(m["command"] == "estimate");
    CHECK(m["seed"] == 7);
    CHECK(m["params"]["box-side"] == "30");
    CHECK(m["outputs"][0] == "estimate-mosaic-n2-seed7.json");
    const json j = json::parse(slurp(out));
    CHECK(j["D"][1]["value"].get<double>() == doctest::Approx(3.0).epsilon(0.05));
    CHECK(j["comparison"].size() == 9);

    const auto rep = run({"replay", manifest.string(), "--out-dir", (dir / "again").string()});
    CHECK(rep.code == 0);
    CHECK(json::parse(rep.out)["identical"] == true);
    CHECK(pdm::cli::strip_timing(json::parse(slurp(out))) ==
          pdm::cli::strip_timing(json::parse(slurp(dir / "again" / out.filename()))));

    std::ofstream(out, std::ios::trunc) << "{}";
    CHECK(run({"replay", manifest.string(), "--out-dir", (dir / "third").string()}).code == pdm::cli::invariant_failure);
}

TEST_CASE("sphere estimates report both methods") {
    const fs::path dir = scratch("sphere");
    const auto r = run({"estimate", "--mode", "sphere", "--dim", "3", "--ell", "2", "--k", "3", "--samples", "100000",
                        "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(slurp(dir / "estimate-sphere-l2k3n3-seed1.json"));
    REQUIRE(j["estimates"].size() == 2);
    CHECK(j["estimates"][0]["method"] == "direct");
    CHECK(j["estimates"][1]["method"] == "reduced");
    CHECK(j["closed_form_C"].get<double>() == doctest::Approx(3.7011016504));
    CHECK(j.contains("methods_agree"));
}

TEST_CASE("distribution writes CSV curves, SVG and a manifest") {
    const fs::path dir = scratch("distribution");
    const auto r = run({"distribution", "--dim", "2", "--ell", "1", "--k", "2", "--box-side", "40", "--trials", "2",
                        "--plot", (dir / "fig.svg").string(), "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    const std::string stem = "distribution-n2-l1k2-seed1";
    CHECK(fs::exists(dir / (stem + "-cdf.csv")));
    CHECK(fs::exists(dir / (stem + "-density.csv")));
    CHECK(slurp(dir / "fig.svg").find("<svg") != std::string::npos);
    const json m = json::parse(slurp(dir / (stem + ".json.manifest.json")));
    CHECK(m["outputs"].size() == 4);
    const auto rep = run({"replay", (dir / (stem + ".json.manifest.json")).string()});
    CHECK(rep.code == 0);
}

TEST_CASE("output directory from the environment") {
    const fs::path dir = scratch("env");
    ::setenv(pdm::cli::kOutputDirEnv, dir.string().c_str(), 1);
    const auto r = run({"sample", "--dim", "2", "--box-side", "4", "--seed", "3"});
    ::unsetenv(pdm::cli::kOutputDirEnv);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "sample-n2-seed3.csv"));
    CHECK(fs::exists(dir / "sample-n2-seed3.csv.manifest.json"));

    const auto m = run({"mosaic", "--input", (dir / "sample-n2-seed3.csv").string(), "--topology", "euclidean",
                        "--seed", "3", "--out-dir", dir.string()});
    REQUIRE(m.code == 0);
    const json census = json::parse(slurp(dir / "mosaic-n2-seed3-census.json"));
    CHECK(census["euler_characteristic"] == 1);
}

TEST_CASE("verify reports are deterministic across runs and thread caps") {
    const auto a = run({"verify", "--suite", "geometry", "--seed", "3"});
    const auto b = run({"verify", "--suite", "geometry", "--seed", "3", "--threads", "1"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    std::istringstream lines(a.out);
    std::string line, last;
    while (std::getline(lines, line)) {
        const json j = json::parse(line);
        CHECK(j.contains("pass"));
        last = line;
    }
    CHECK(json::parse(last)["pass"] == true);

    const auto t = run({"verify", "--suite", "theory"});
    CHECK(t.code == 0);
    CHECK(t.out.find("\"pass\":false") == std::string::npos);
    CHECK(run({"verify", "--suite", "bogus"}).code == pdm::cli::config_error);
}

TEST_CASE("strip_timing removes nested wall_time members") {
    const json j = {{"wall_time", 1.0}, {"a", {{"wall_time", 2.0}, {"b", 3}}}, {"c", json::array({{{"wall_time", 4}}})}};
    const json s = pdm::cli::strip_timing(j);
    CHECK(s == json{{"a", {{"b", 3}}}, {"c", json::array({json::object()})}});
}

TEST_CASE("verify --suite all twice gives identical reports") {
    const auto a = run({"verify", "--suite", "all", "--seed", "1"});
    const auto b = run({"verify", "--suite", "all", "--seed", "1"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("\"suite\":\"boundary\"") != std::string::npos);
}
