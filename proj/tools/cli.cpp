#include "cli.hpp"

#include "pdm/delaunay.hpp"
#include "pdm/errors.hpp"
#include "pdm/montecarlo.hpp"
#include "pdm/morse.hpp"
#include "pdm/sampling.hpp"
#include "pdm/theory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef PDM_VERSION
#define PDM_VERSION "0.0.0"
#endif

namespace pdm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Desk-scale mosaic defaults per dimension: box side and trials.
struct DeskScale {
    double side;
    int trials;
};

DeskScale desk_scale(int n) {
    switch (n) {
    case 2:
        return {100.0, 10};
    case 3:
        return {20.0, 5};
    default:
        return {7.0, 3};
    }
}

/// State shared by the commands of one invocation.
struct Run {
    std::string command;
    std::vector<std::string> args;
    json params = json::object();
    std::uint64_t seed = 0;
    std::vector<fs::path> outputs;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;

    fs::path resolve_dir(const std::string& flag) const {
        if (!flag.empty()) {
            return flag;
        }
        if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
            return env;
        }
        return ".";
    }

    void write_file(const fs::path& path, const std::string& content) {
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write " + path.string());
        }
        f << content;
        outputs.push_back(path);
    }

    void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

    /// Writes `<primary>.manifest.json` listing every output of the run.
    void write_manifest(const fs::path& primary) {
        const fs::path manifest = fs::path(primary.string() + ".manifest.json");
        const fs::path base = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
        json outs = json::array();
        for (const auto& p : outputs) {
            outs.push_back(fs::relative(fs::absolute(p), fs::absolute(base)).generic_string());
        }
        const json m = {{"command", command},  {"argv", args},        {"params", params},
                        {"seed", seed},        {"tool_version", PDM_VERSION}, {"outputs", outs}};
        std::ofstream f(manifest, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write " + manifest.string());
        }
        f << m.dump(2) << "\n";
        *out << "wrote " << primary.string() << " (manifest " << manifest.string() << ")\n";
    }

    std::string provenance() const {
        // Output paths are omitted so that replays elsewhere reproduce it.
        std::string s = "pdm " + std::string(PDM_VERSION) + " " + command;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out" || args[i] == "--out-dir" || args[i] == "--plot") {
                ++i;
            } else if (args[i] != command) {
                s += " " + args[i];
            }
        }
        return s;
    }
};

void record_params(Run& run, CLI::App* sub) {
    for (const CLI::Option* opt : sub->get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || names.front() == "help") {
            continue;
        }
        const std::string key = names.front();
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (res.size() == 1) {
                run.params[key] = res.front();
            } else {
                run.params[key] = res;
            }
        } else if (!opt->get_default_str().empty()) {
            run.params[key] = opt->get_default_str();
        } else {
            run.params[key] = nullptr;
        }
    }
}

std::string fixed(double x, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << x;
    return ss.str();
}

// constants

struct ConstantsOptions {
    int dim = 0;
    std::string format = "json";
    std::string out;
};

int cmd_constants(Run& run, const ConstantsOptions& o) {
    const ConstantReport rep = closed_form_constants(o.dim);
    std::ostringstream body;
    if (o.format == "json") {
        json j = to_json(rep);
        j["quantity"] = "constants";
        body << j.dump(2) << "\n";
    } else if (o.format == "csv") {
        body << "kind,ell,k,value,exact\n";
        body << std::setprecision(17);
        for (int k = 0; k <= o.dim; ++k) {
            for (int ell = 0; ell <= k; ++ell) {
                body << "C," << ell << ',' << k << ',' << rep.C[ell][k] << ",\"" << rep.C_exact[ell][k] << "\"\n";
            }
        }
        for (int j = 0; j <= o.dim; ++j) {
            body << "D,," << j << ',' << rep.D[j] << ",\"" << rep.D_exact[j] << "\"\n";
        }
    } else {
        for (int k = 0; k <= o.dim; ++k) {
            for (int ell = 0; ell <= k; ++ell) {
                body << "C[" << ell << "][" << k << "] = " << rep.C_exact[ell][k] << " = " << fixed(rep.C[ell][k], 12)
                     << "\n";
            }
        }
        for (int j = 0; j <= o.dim; ++j) {
            body << "D[" << j << "] = " << rep.D_exact[j] << " = " << fixed(rep.D[j], 12) << "\n";
        }
    }
    if (o.out.empty()) {
        *run.out << body.str();
        return ok;
    }
    run.write_file(o.out, body.str());
    run.write_manifest(o.out);
    return ok;
}

// estimate

struct EstimateOptions {
    int dim = 0;
    std::string mode = "mosaic";
    double density = 1.0;
    std::optional<double> box_side;
    std::optional<int> trials;
    std::uint64_t seed = 1;
    std::optional<int> ell;
    std::optional<int> k;
    std::uint64_t samples = 1000000;
    std::string method = "both";
    std::string out_dir;
};

json closed_form_comparison(const ConstantReport& est) {
    const int n = est.n;
    json rows = json::array();
    for (int k = 0; k <= n; ++k) {
        for (int ell = 0; ell <= k; ++ell) {
            const double c = constant_C(ell, k, n);
            rows.push_back({{"quantity", "C"},
                            {"ell", ell},
                            {"k", k},
                            {"estimate", est.C[ell][k]},
                            {"stderr", est.C_stderr[ell][k]},
                            {"closed_form", c},
                            {"relative_deviation", c != 0.0 ? est.C[ell][k] / c - 1.0 : est.C[ell][k]}});
        }
    }
    for (int j = 0; j <= n; ++j) {
        const double d = constant_D(j, n);
        rows.push_back({{"quantity", "D"},
                        {"j", j},
                        {"estimate", est.D[j]},
                        {"stderr", est.D_stderr[j]},
                        {"closed_form", d},
                        {"relative_deviation", est.D[j] / d - 1.0}});
    }
    return rows;
}

int cmd_estimate(Run& run, const EstimateOptions& o) {
    run.seed = o.seed;
    const fs::path dir = run.resolve_dir(o.out_dir);
    if (o.mode == "sphere") {
        if (!o.ell || !o.k) {
            throw ConfigError("sphere mode needs --ell and --k");
        }
        const int ell = *o.ell, k = *o.k, n = o.dim;
        const json params = {{"ell", ell}, {"k", k}, {"n", n}};
        json j = {{"quantity", "spherical_expectation"}, {"params", params}};
        std::optional<double> closed;
        double f = 0.0;
        if (n >= 2 && n <= 4) {
            f = factor_f(k, n);
            closed = constant_C(ell, k, n);
            j["f"] = f;
            j["closed_form_C"] = *closed;
        }
        json records = json::array();
        std::vector<EstimatorResult> results;
        for (const std::string m : {"direct", "reduced"}) {
            if (o.method != "both" && o.method != m) {
                continue;
            }
            const auto r = estimate_spherical_expectation(ell, k, n, o.samples, o.seed, sphere_method_from_string(m));
            json rec = to_json(r, std::string("E[") + m + "]", params);
            rec["method"] = m;
            if (closed) {
                rec["f_times_value"] = f * r.value;
                rec["f_times_stderr"] = f * r.std_error;
                const double dev = std::fabs(f * r.value - *closed);
                rec["within_3_sigma"] = dev <= 3.0 * f * r.std_error;
                rec["relative_deviation"] = *closed != 0.0 ? dev / *closed : dev;
            }
            records.push_back(rec);
            results.push_back(r);
            *run.out << "E_{" << ell << "," << k << "}^" << n << " [" << m << "] = " << r.value << " +- " << r.std_error;
            if (closed) {
                *run.out << "; f*E = " << f * r.value << " vs C = " << *closed;
            }
            *run.out << "\n";
        }
        j["estimates"] = records;
        if (results.size() == 2) {
            const double se = std::hypot(results[0].std_error, results[1].std_error);
            j["methods_agree"] = std::fabs(results[0].value - results[1].value) <= 3.0 * se;
        }
        const fs::path path = dir / ("estimate-sphere-l" + std::to_string(ell) + "k" + std::to_string(k) + "n" +
                                     std::to_string(n) + "-seed" + std::to_string(o.seed) + ".json");
        run.write_json(path, j);
        run.write_manifest(path);
        return ok;
    }
    if (o.mode != "mosaic") {
        throw ConfigError("unknown mode '" + o.mode + "'");
    }
    if (o.dim < 2 || o.dim > 4) {
        throw UnsupportedDimension("mosaic simulation supports --dim 2, 3, 4");
    }
    const DeskScale desk = desk_scale(o.dim);
    const double side = o.box_side.value_or(desk.side);
    const int trials = o.trials.value_or(desk.trials);
    const auto runs = estimate_constants_empirical(o.dim, o.density, Region::cube(o.dim, side, true), trials, o.seed);
    json j = to_json(runs);
    j["quantity"] = "mosaic_constants";
    j["box_side"] = side;
    j["comparison"] = closed_form_comparison(runs.report);
    for (int k = 0; k <= o.dim; ++k) {
        for (int ell = 0; ell <= k; ++ell) {
            if (runs.report.C[ell][k] != 0.0 || k == 0) {
                *run.out << "C[" << ell << "][" << k << "] = " << fixed(runs.report.C[ell][k], 4) << " +- "
                         << fixed(runs.report.C_stderr[ell][k], 4) << "  (closed form "
                         << fixed(constant_C(ell, k, o.dim), 4) << ")\n";
            }
        }
    }
    for (int d = 0; d <= o.dim; ++d) {
        *run.out << "D[" << d << "] = " << fixed(runs.report.D[d], 4) << " +- " << fixed(runs.report.D_stderr[d], 4)
                 << "  (closed form " << fixed(constant_D(d, o.dim), 4) << ")\n";
    }
    *run.out << "per-trial invariants: " << (runs.invariants_ok() ? "ok" : "FAILED") << "\n";
    const fs::path path = dir / ("estimate-mosaic-n" + std::to_string(o.dim) + "-seed" + std::to_string(o.seed) + ".json");
    run.write_json(path, j);
    run.write_manifest(path);
    return runs.invariants_ok() ? ok : invariant_failure;
}

// distribution

struct DistributionOptions {
    int dim = 0;
    std::optional<int> j;
    std::optional<int> ell;
    std::optional<int> k;
    double density = 1.0;
    std::optional<double> box_side;
    std::optional<int> trials;
    std::uint64_t seed = 1;
    std::string plot;
    std::string out_dir;
    int bins = 60;
};

int cmd_distribution(Run& run, const DistributionOptions& o) {
    run.seed = o.seed;
    RadiusTarget target;
    if (o.j && !o.ell && !o.k) {
        target = RadiusTarget::simplex(*o.j);
    } else if (!o.j && o.ell && o.k) {
        target = RadiusTarget::interval(*o.ell, *o.k);
    } else {
        throw ConfigError("distribution needs either --j or both --ell and --k");
    }
    if (o.dim < 2 || o.dim > 4) {
        throw UnsupportedDimension("mosaic simulation supports --dim 2, 3, 4");
    }
    const DeskScale desk = desk_scale(o.dim);
    const double side = o.box_side.value_or(desk.side);
    const int trials = o.trials.value_or(desk.trials);
    const auto runs = estimate_constants_empirical(o.dim, o.density, Region::cube(o.dim, side, true), trials, o.seed);
    const auto cmp = compare_radius_distribution(runs, target);
    const fs::path dir = run.resolve_dir(o.out_dir);
    std::string tag = target.is_simplex() ? "j" + std::to_string(target.j)
                                          : "l" + std::to_string(target.ell) + "k" + std::to_string(target.k);
    const std::string stem = "distribution-n" + std::to_string(o.dim) + "-" + tag + "-seed" + std::to_string(o.seed);
    json j = to_json(cmp);
    j["box_side"] = side;
    j["trials"] = trials;
    j["seed"] = o.seed;
    j["invariants_ok"] = runs.invariants_ok();
    const fs::path json_path = dir / (stem + ".json");
    run.write_json(json_path, j);
    std::ostringstream cdf, dens;
    write_cdf_csv(cdf, cmp);
    write_density_csv(dens, cmp, o.bins);
    run.write_file(dir / (stem + "-cdf.csv"), cdf.str());
    run.write_file(dir / (stem + "-density.csv"), dens.str());
    if (!o.plot.empty()) {
        std::ostringstream svg;
        write_distribution_svg(svg, cmp, run.provenance() + " seed " + std::to_string(o.seed));
        run.write_file(o.plot, svg.str());
    }
    *run.out << "target " << target.label() << " n=" << o.dim << ": " << cmp.sample_count << " radii, KS "
             << cmp.ks_distance << " (nominal density " << cmp.ks_nominal << "), DKW threshold " << cmp.dkw_threshold
             << (cmp.passes() ? " pass" : " FAIL") << "\n";
    run.write_manifest(json_path);
    return runs.invariants_ok() ? ok : invariant_failure;
}

// verify

int cmd_verify(Run& run, const std::string& suite, std::uint64_t seed, const std::string& out) {
    run.seed = seed;
    const auto checks = run_suite(suite, seed);
    std::ostringstream lines;
    bool all = true;
    for (const auto& c : checks) {
        json j = {{"suite", c.suite}, {"check", c.name}, {"pass", c.pass}};
        if (!c.data.is_null()) {
            j["data"] = c.data;
        }
        lines << j.dump() << "\n";
        all = all && c.pass;
    }
    lines << json{{"suite", suite}, {"checks", checks.size()}, {"pass", all}}.dump() << "\n";
    *run.out << lines.str();
    if (!out.empty()) {
        run.write_file(out, lines.str());
        run.write_manifest(out);
    }
    return all ? ok : invariant_failure;
}

// sample

struct SampleOptions {
    int dim = 2;
    double density = 1.0;
    double box_side = 10.0;
    bool periodic = false;
    std::uint64_t seed = 1;
    std::string out;
    std::string out_dir;
};

int cmd_sample(Run& run, const SampleOptions& o) {
    run.seed = o.seed;
    ProcessConfig config;
    config.density = o.density;
    config.seed = o.seed;
    config.region = Region::cube(o.dim, o.box_side, o.periodic);
    const PointCloud cloud = sample_poisson(config);
    std::ostringstream csv;
    write_cloud_csv(csv, cloud);
    const fs::path path = !o.out.empty() ? fs::path(o.out)
                                         : run.resolve_dir(o.out_dir) / ("sample-n" + std::to_string(o.dim) + "-seed" +
                                                                         std::to_string(o.seed) + ".csv");
    run.write_file(path, csv.str());
    *run.out << cloud.size() << " points\n";
    run.write_manifest(path);
    return ok;
}

// mosaic

struct MosaicOptions {
    std::string input;
    int dim = 2;
    double density = 1.0;
    double box_side = 10.0;
    std::string topology = "torus";
    std::uint64_t seed = 1;
    std::string out_dir;
};

int cmd_mosaic(Run& run, const MosaicOptions& o) {
    run.seed = o.seed;
    const Topology topo = topology_from_string(o.topology);
    PointCloud cloud;
    Region region = Region::cube(o.dim, o.box_side, topo == Topology::torus);
    if (!o.input.empty()) {
        std::ifstream f(o.input);
        if (!f) {
            throw ConfigError("cannot read " + o.input);
        }
        cloud = read_cloud_csv(f, topo == Topology::torus ? region : Region{});
        if (topo == Topology::torus && cloud.dim != o.dim) {
            throw ConfigError("--dim does not match the input cloud");
        }
        region = cloud.region;
    } else {
        ProcessConfig config;
        config.density = o.density;
        config.seed = o.seed;
        config.region = region;
        cloud = sample_poisson(config);
    }
    TriangulateOptions topt;
    topt.topology = topo;
    topt.seed = o.seed;
    const Mosaic mosaic = triangulate(cloud, topt);
    const Decomposition dec = decompose(mosaic, cloud);
    const IntervalCensus cen = census(dec.intervals, region, o.density);
    const fs::path dir = run.resolve_dir(o.out_dir);
    const std::string stem = "mosaic-n" + std::to_string(cloud.dim) + "-seed" + std::to_string(o.seed);
    std::ostringstream mj, iv;
    write_mosaic_json(mj, mosaic);
    write_intervals_csv(iv, mosaic, dec.intervals);
    run.write_file(dir / (stem + ".json"), mj.str());
    run.write_file(dir / (stem + "-intervals.csv"), iv.str());
    json summary = {{"quantity", "mosaic_census"}, {"dim", cloud.dim}, {"points", cloud.size()},
                    {"topology", to_string(topo)}, {"euler_characteristic", mosaic.euler_characteristic()}};
    json counts = json::array();
    for (int ell = 0; ell <= cloud.dim; ++ell) {
        json row = json::array();
        for (int k = 0; k <= cloud.dim; ++k) {
            row.push_back(cen.counts[ell][k]);
        }
        counts.push_back(row);
    }
    summary["interval_counts"] = counts;
    json simplices = json::array();
    for (int j = 0; j <= cloud.dim; ++j) {
        simplices.push_back(mosaic.count(j));
    }
    summary["simplex_counts"] = simplices;
    if (topo == Topology::torus) {
        json checks = json::array();
        bool all = true;
        for (const auto& c : check_trial_invariants(mosaic, dec, cen)) {
            checks.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
            all = all && c.ok;
        }
        summary["checks"] = checks;
        summary["invariants_ok"] = all;
    }
    const fs::path path = dir / (stem + "-census.json");
    run.write_json(path, summary);
    *run.out << summary.dump() << "\n";
    run.write_manifest(path);
    return ok;
}

// replay

int cmd_replay(Run& run, const std::string& manifest_path, const std::string& out_dir);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Poisson-Delaunay mosaics: circumradius Morse intervals and their intensities", "pdm"};
    app.set_version_flag("--version", PDM_VERSION);
    app.require_subcommand(1);
    int threads = 0;
    auto add_threads = [&threads](CLI::App* sub) {
        sub->add_option("--threads", threads, "Worker thread cap (0 = all cores); results do not depend on it");
    };

    Run run;
    run.args = args;
    run.out = &out;
    run.err = &err;

    ConstantsOptions co;
    auto* constants = app.add_subcommand("constants", "Closed-form interval and simplex intensities");
    constants->add_option("--dim", co.dim, "Dimension n")->required();
    constants->add_option("--format", co.format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "exact"}))
        ->capture_default_str();
    constants->add_option("--out", co.out, "Output file (default: stdout)");
    add_threads(constants);

    EstimateOptions eo;
    auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimates by mosaic simulation or sphere sampling");
    estimate->add_option("--dim", eo.dim, "Dimension n")->required();
    estimate->add_option("--mode", eo.mode, "Estimator")
        ->check(CLI::IsMember({"mosaic", "sphere"}))
        ->capture_default_str();
    estimate->add_option("--density", eo.density, "Poisson density")->capture_default_str();
    estimate->add_option("--box-side", eo.box_side, "Side of the periodic box (default by dimension)");
    estimate->add_option("--trials", eo.trials, "Independent mosaic trials (default by dimension)");
    estimate->add_option("--seed", eo.seed, "Seed")->capture_default_str();
    estimate->add_option("--ell", eo.ell, "Interval lower dimension (sphere mode)");
    estimate->add_option("--k", eo.k, "Interval upper dimension (sphere mode)");
    estimate->add_option("--samples", eo.samples, "Sphere samples")->capture_default_str();
    estimate->add_option("--method", eo.method, "Sphere estimator")
        ->check(CLI::IsMember({"direct", "reduced", "both"}))
        ->capture_default_str();
    estimate->add_option("--out-dir", eo.out_dir, "Output directory");
    add_threads(estimate);

    DistributionOptions dopt;
    auto* distribution = app.add_subcommand("distribution", "Radius distribution against the Gamma laws");
    distribution->add_option("--dim", dopt.dim, "Dimension n")->required();
    distribution->add_option("--j", dopt.j, "Simplex dimension");
    distribution->add_option("--ell", dopt.ell, "Interval lower dimension");
    distribution->add_option("--k", dopt.k, "Interval upper dimension");
    distribution->add_option("--density", dopt.density, "Poisson density")->capture_default_str();
    distribution->add_option("--box-side", dopt.box_side, "Side of the periodic box (default by dimension)");
    distribution->add_option("--trials", dopt.trials, "Independent mosaic trials (default by dimension)");
    distribution->add_option("--seed", dopt.seed, "Seed")->capture_default_str();
    distribution->add_option("--plot", dopt.plot, "SVG overlay path");
    distribution->add_option("--bins", dopt.bins, "Density histogram bins")->capture_default_str();
    distribution->add_option("--out-dir", dopt.out_dir, "Output directory");
    add_threads(distribution);

    std::string suite = "all";
    std::uint64_t verify_seed = 1;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "Run an invariant suite; one JSON line per check");
    verify->add_option("--suite", suite, "Suite")->check(CLI::IsMember(suite_names()))->capture_default_str();
    verify->add_option("--seed", verify_seed, "Seed")->capture_default_str();
    verify->add_option("--out", verify_out, "Also write the report to this file");
    add_threads(verify);

    SampleOptions so;
    auto* sample = app.add_subcommand("sample", "Poisson sample in a cube");
    sample->add_option("--dim", so.dim, "Dimension n")->capture_default_str();
    sample->add_option("--density", so.density, "Poisson density")->capture_default_str();
    sample->add_option("--box-side", so.box_side, "Cube side")->capture_default_str();
    sample->add_flag("--periodic", so.periodic, "Snap to the periodic box grid");
    sample->add_option("--seed", so.seed, "Seed")->capture_default_str();
    sample->add_option("--out", so.out, "Output CSV");
    sample->add_option("--out-dir", so.out_dir, "Output directory");
    add_threads(sample);

    MosaicOptions mo;
    auto* mosaic = app.add_subcommand("mosaic", "Delaunay mosaic, intervals and census of one sample");
    mosaic->add_option("--input", mo.input, "Point cloud CSV (default: a fresh Poisson sample)");
    mosaic->add_option("--dim", mo.dim, "Dimension n")->capture_default_str();
    mosaic->add_option("--density", mo.density, "Poisson density")->capture_default_str();
    mosaic->add_option("--box-side", mo.box_side, "Cube side")->capture_default_str();
    mosaic->add_option("--topology", mo.topology, "torus or euclidean")
        ->check(CLI::IsMember({"torus", "euclidean"}))
        ->capture_default_str();
    mosaic->add_option("--seed", mo.seed, "Seed")->capture_default_str();
    mosaic->add_option("--out-dir", mo.out_dir, "Output directory");
    add_threads(mosaic);

    std::string manifest_path, replay_dir;
    auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare its outputs");
    replay->add_option("manifest", manifest_path, "Manifest JSON")->required();
    replay->add_option("--out-dir", replay_dir, "Directory for the regenerated outputs");
    add_threads(replay);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }
    set_thread_limit(threads);
    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    record_params(run, sub);
    if (sub == constants) {
        return cmd_constants(run, co);
    }
    if (sub == estimate) {
        return cmd_estimate(run, eo);
    }
    if (sub == distribution) {
        return cmd_distribution(run, dopt);
    }
    if (sub == verify) {
        return cmd_verify(run, suite, verify_seed, verify_out);
    }
    if (sub == sample) {
        return cmd_sample(run, so);
    }
    if (sub == mosaic) {
        return cmd_mosaic(run, mo);
    }
    return cmd_replay(run, manifest_path, replay_dir);
}

bool same_output(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) {
        return false;
    }
    const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (a.extension() == ".json") {
        try {
            return strip_timing(json::parse(sa)).dump() == strip_timing(json::parse(sb)).dump();
        } catch (const json::exception&) {
            return false;
        }
    }
    return sa == sb;
}

int cmd_replay(Run& run, const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream f(manifest_path);
    if (!f) {
        throw ConfigError("cannot read " + manifest_path);
    }
    json m;
    try {
        m = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    if (!m.contains("argv") || !m.contains("outputs")) {
        throw ConfigError("manifest lacks argv or outputs");
    }
    const fs::path base = fs::path(manifest_path).has_parent_path() ? fs::path(manifest_path).parent_path() : ".";
    const fs::path dir = !out_dir.empty() ? fs::path(out_dir) : base / "replay";
    fs::create_directories(dir);
    std::vector<std::string> argv = m["argv"].get<std::vector<std::string>>();
    bool has_out_dir = false;
    for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
        if (argv[i] == "--out-dir") {
            argv[i + 1] = dir.string();
            has_out_dir = true;
        } else if (argv[i] == "--out" || argv[i] == "--plot") {
            argv[i + 1] = (dir / fs::path(argv[i + 1]).filename()).string();
        }
    }
    const std::string command = m.value("command", "");
    if (!has_out_dir && (command == "estimate" || command == "distribution" || command == "mosaic" ||
                         (command == "sample" && std::find(argv.begin(), argv.end(), "--out") == argv.end()))) {
        argv.push_back("--out-dir");
        argv.push_back(dir.string());
    }
    std::ostringstream sink;
    const int code = dispatch(argv, sink, *run.err);
    json report = {{"quantity", "replay"}, {"manifest", manifest_path}, {"exit_code", code}};
    json files = json::array();
    bool all = code == ok || code == invariant_failure;
    for (const auto& rel : m["outputs"]) {
        const fs::path original = base / rel.get<std::string>();
        const fs::path replayed = dir / original.filename();
        const bool same = same_output(original, replayed);
        files.push_back({{"original", original.generic_string()}, {"replayed", replayed.generic_string()},
                         {"identical", same}});
        all = all && same;
    }
    report["outputs"] = files;
    report["identical"] = all;
    *run.out << report.dump(2) << "\n";
    return all ? ok : invariant_failure;
}

} // namespace

json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("wall_time");
        for (auto& [key, value] : j.items()) {
            value = strip_timing(value);
        }
    } else if (j.is_array()) {
        for (auto& value : j) {
            value = strip_timing(value);
        }
    }
    return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const UnsupportedDimension& e) {
        err << "unsupported dimension: " << e.what() << "\n";
        return config_error;
    } catch (const Unsupported& e) {
        err << "unsupported: " << e.what() << "\n";
        return config_error;
    } catch (const OverflowRisk& e) {
        err << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const TorusTooSparse& e) {
        err << "geometric guard: " << e.what() << "\n";
        return guard_violation;
    } catch (const MarginTooSmall& e) {
        err << "geometric guard: " << e.what() << "\n";
        return guard_violation;
    } catch (const DegenerateInput& e) {
        err << "geometric guard: " << e.what() << "\n";
        return guard_violation;
    } catch (const DegenerateSimplex& e) {
        err << "geometric guard: " << e.what() << "\n";
        return guard_violation;
    } catch (const AmbiguousSign& e) {
        err << "geometric guard: " << e.what() << "\n";
        return guard_violation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return invariant_failure;
    }
}

} // namespace pdm::cli
