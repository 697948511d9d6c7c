// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only=3,7] [--allow-fail=1] [--json=report.json]
//
// Exit status is 0 iff every criterion not listed in --allow-fail passes.

#include "cli.hpp"
#include "reference_values.hpp"

#include "pdm/montecarlo.hpp"
#include "pdm/theory.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = true;
    std::string summary;
    json details = json::array();
};

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 6) {
    std::ostringstream ss;
    ss.precision(digits);
    ss << x;
    return ss.str();
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

void fail(Outcome& o, const std::string& what, json data = nullptr) {
    o.pass = false;
    o.details.push_back({{"failure", what}, {"data", data}});
}

const pdm::reference::ExactEntry* exact_entry(int n, int ell, int k) {
    for (const auto& e : pdm::reference::kExactTable) {
        if (e.n == n && e.ell == ell && e.k == k) {
            return &e;
        }
    }
    return nullptr;
}

// Mosaic runs shared by criteria 4 to 7.
const pdm::EmpiricalConstants& mosaic_runs(int n) {
    static std::map<int, pdm::EmpiricalConstants> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        const double side = n == 2 ? 100.0 : n == 3 ? 20.0 : 7.0;
        const int trials = n == 2 ? 10 : n == 3 ? 5 : 3;
        it = cache.emplace(n, pdm::estimate_constants_empirical(n, 1.0, pdm::Region::cube(n, side, true), trials,
                                                                kSeed + static_cast<std::uint64_t>(n)))
                 .first;
    }
    return it->second;
}

Outcome criterion_1() {
    Outcome o;
    int checked = 0, off = 0;
    double worst_exact = 0.0;
    for (int n = 2; n <= 4; ++n) {
        std::ostringstream out, err;
        const int code = pdm::cli::run({"constants", "--dim", std::to_string(n)}, out, err);
        if (code != 0) {
            fail(o, "constants --dim " + std::to_string(n) + " exited " + std::to_string(code));
            continue;
        }
        const json j = json::parse(out.str());
        for (const auto& e : pdm::reference::kIntervalTable) {
            if (e.n != n) {
                continue;
            }
            const double v = j["C"][e.ell][e.k]["value"].get<double>();
            ++checked;
            if (std::fabs(v - e.printed) > 0.005) {
                ++off;
                fail(o, "C_{" + std::to_string(e.ell) + "," + std::to_string(e.k) + "}^" + std::to_string(n) +
                            " = " + fmt(v) + " is not within 0.005 of the printed " + fmt(e.printed, 4),
                     {{"value", v}, {"printed", e.printed}, {"truncated", pdm::reference::truncate2(v)}});
            }
            if (const auto* x = exact_entry(n, e.ell, e.k)) {
                const double r = rel(v, x->value);
                worst_exact = std::max(worst_exact, r);
                if (r > 1e-12 || j["C"][e.ell][e.k]["exact"] != x->text) {
                    fail(o, std::string("exact form of C mismatch: ") + x->text,
                         {{"value", v}, {"exact", j["C"][e.ell][e.k]["exact"]}});
                }
            }
        }
    }
    o.summary = std::to_string(checked) + " entries, " + std::to_string(off) +
                " outside 0.005 of the printed value; exact forms max rel err " + fmt(worst_exact, 3);
    return o;
}

Outcome criterion_2() {
    Outcome o;
    double worst = 0.0;
    for (const auto& e : pdm::reference::kExactTable) {
        if (e.ell >= 0) {
            continue;
        }
        const double v = pdm::constant_D(e.k, e.n);
        worst = std::max(worst, rel(v, e.value));
        if (rel(v, e.value) > 1e-12 || pdm::constant_D_exact(e.k, e.n).to_string() != e.text) {
            fail(o, std::string("D mismatch: ") + e.text, {{"n", e.n}, {"j", e.k}, {"value", v}});
        }
    }
    double worst_identity = 0.0;
    for (int n = 2; n <= 4; ++n) {
        double alt_d = 0.0, alt_c = 0.0, scale = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double s = j % 2 == 0 ? 1.0 : -1.0;
            alt_d += s * pdm::constant_D(j, n);
            alt_c += s * pdm::constant_C(j, j, n);
            scale = std::max(scale, pdm::constant_D(j, n));
        }
        const double ridge = rel(pdm::constant_D(n - 1, n), (n + 1) / 2.0 * pdm::constant_D(n, n));
        const double ident = std::max({std::fabs(alt_d) / scale, std::fabs(alt_c) / scale, ridge});
        worst_identity = std::max(worst_identity, ident);
        if (ident > 1e-12) {
            fail(o, "identity violated at n=" + std::to_string(n),
                 {{"alternating_D", alt_d}, {"alternating_C", alt_c}, {"ridge_rel", ridge}});
        }
    }
    o.summary = "D max rel err " + fmt(worst, 3) + "; identity residual " + fmt(worst_identity, 3);
    return o;
}

Outcome criterion_3() {
    Outcome o;
    constexpr std::uint64_t samples = 10000000;
    int combos = 0;
    double worst_z = 0.0, worst_rel = 0.0, worst_pair = 0.0;
    for (int n = 2; n <= 4; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int ell = 1; ell <= k; ++ell) {
                if (n == 4 && k == 4 && ell <= 2) {
                    continue;
                }
                ++combos;
                const double f = pdm::factor_f(k, n);
                const double c = pdm::constant_C(ell, k, n);
                const std::uint64_t s = pdm::mix64(kSeed ^ static_cast<std::uint64_t>(100 * n + 10 * k + ell));
                const auto d = pdm::estimate_spherical_expectation(ell, k, n, samples, s, pdm::SphereMethod::direct);
                const auto r =
                    pdm::estimate_spherical_expectation(ell, k, n, samples, pdm::mix64(s), pdm::SphereMethod::reduced);
                json row = {{"n", n}, {"ell", ell}, {"k", k}, {"closed_form", c}};
                for (const auto* e : {&d, &r}) {
                    const double z = std::fabs(f * e->value - c) / (f * e->std_error);
                    const double rr = rel(f * e->value, c);
                    worst_z = std::max(worst_z, z);
                    worst_rel = std::max(worst_rel, rr);
                    const char* m = e == &d ? "direct" : "reduced";
                    row[m] = {{"f_times_value", f * e->value}, {"f_times_stderr", f * e->std_error}, {"z", z}};
                    if (z > 3.0 || rr > 0.01) {
                        fail(o, std::string(m) + " estimate of C_{" + std::to_string(ell) + "," + std::to_string(k) +
                                    "}^" + std::to_string(n) + " off by " + fmt(z, 3) + " sigma, rel " + fmt(rr, 3),
                             row);
                    }
                }
                const double pair = std::fabs(d.value - r.value) / std::hypot(d.std_error, r.std_error);
                worst_pair = std::max(worst_pair, pair);
                if (pair > 3.0) {
                    fail(o, "direct and reduced disagree for (" + std::to_string(ell) + "," + std::to_string(k) +
                                "," + std::to_string(n) + ") by " + fmt(pair, 3) + " combined sigma",
                         row);
                }
            }
        }
    }
    o.summary = std::to_string(combos) + " types at 1e7 samples; max |z| " + fmt(worst_z, 3) + ", max rel " +
                fmt(worst_rel, 3) + ", max direct/reduced gap " + fmt(worst_pair, 3) + " sigma";
    return o;
}

Outcome criterion_4() {
    Outcome o;
    const auto& runs = mosaic_runs(2);
    const auto& rep = runs.report;
    const double ratio = rep.C[2][2] / rep.D[2];
    struct Range {
        const char* name;
        double value, lo, hi;
    };
    const Range ranges[] = {{"D1", rep.D[1], 2.94, 3.06},
                            {"D2", rep.D[2], 1.96, 2.04},
                            {"C22", rep.C[2][2], 0.95, 1.05},
                            {"C22/D2", ratio, 0.48, 0.52}};
    std::string summary;
    for (const auto& r : ranges) {
        summary += std::string(summary.empty() ? "" : ", ") + r.name + " " + fmt(r.value, 5);
        if (!(r.value >= r.lo && r.value <= r.hi)) {
            fail(o, std::string(r.name) + " outside range", {{"value", r.value}, {"lo", r.lo}, {"hi", r.hi}});
        }
    }
    o.summary = summary;
    return o;
}

Outcome relative_check(int n, double tol) {
    Outcome o;
    const auto& rep = mosaic_runs(n).report;
    double worst = 0.0;
    auto check = [&](const std::string& name, double est, double exact) {
        if (exact == 0.0) {
            if (est != 0.0) {
                fail(o, name + " should vanish", {{"estimate", est}});
            }
            return;
        }
        const double r = rel(est, exact);
        worst = std::max(worst, r);
        if (r > tol) {
            fail(o, name + " off by " + fmt(100 * r, 3) + "%", {{"estimate", est}, {"closed_form", exact}});
        }
    };
    for (int k = 0; k <= n; ++k) {
        for (int ell = 0; ell <= k; ++ell) {
            check("C_{" + std::to_string(ell) + "," + std::to_string(k) + "}^" + std::to_string(n), rep.C[ell][k],
                  pdm::constant_C(ell, k, n));
        }
        check("D_" + std::to_string(k) + "^" + std::to_string(n), rep.D[k], pdm::constant_D(k, n));
    }
    o.summary = "n=" + std::to_string(n) + " max deviation " + fmt(100 * worst, 3) + "%";
    return o;
}

double timed_runs(int n) {
    const auto t0 = Clock::now();
    mosaic_runs(n);
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome criterion_5() {
    const double t3 = timed_runs(3), t4 = timed_runs(4);
    Outcome a = relative_check(3, 0.05);
    Outcome b = relative_check(4, 0.10);
    if (t3 > 300.0) {
        fail(a, "n=3 runtime " + fmt(t3, 3) + " s exceeds 300 s");
    }
    if (t4 > 1800.0) {
        fail(a, "n=4 runtime " + fmt(t4, 3) + " s exceeds 1800 s");
    }
    a.pass = a.pass && b.pass;
    a.summary += "; " + b.summary;
    for (auto& d : b.details) {
        a.details.push_back(d);
    }
    return a;
}

Outcome criterion_6() {
    Outcome o;
    int trials = 0, checks = 0;
    for (int n = 2; n <= 4; ++n) {
        for (const auto& t : mosaic_runs(n).trials) {
            ++trials;
            for (const auto& c : t.checks) {
                ++checks;
                if (!c.ok) {
                    fail(o, c.name + " failed on n=" + std::to_string(n) + " trial " + std::to_string(t.index),
                         {{"detail", c.detail}});
                }
            }
        }
    }
    o.summary = std::to_string(checks) + " exact checks over " + std::to_string(trials) + " trials";
    return o;
}

Outcome criterion_7() {
    Outcome o;
    struct Case {
        int n;
        pdm::RadiusTarget target;
    };
    const Case cases[] = {{2, pdm::RadiusTarget::interval(1, 1)}, {2, pdm::RadiusTarget::interval(1, 2)},
                          {2, pdm::RadiusTarget::interval(2, 2)}, {2, pdm::RadiusTarget::simplex(1)},
                          {2, pdm::RadiusTarget::simplex(2)},     {3, pdm::RadiusTarget::simplex(3)}};
    std::string summary;
    for (const auto& c : cases) {
        const auto cmp = pdm::compare_radius_distribution(mosaic_runs(c.n), c.target);
        summary += std::string(summary.empty() ? "" : ", ") + c.target.label() + "@n" + std::to_string(c.n) + " " +
                   fmt(cmp.ks_distance / cmp.dkw_threshold, 3);
        if (!cmp.passes() || cmp.sample_count < 10000) {
            fail(o, c.target.label() + " at n=" + std::to_string(c.n),
                 {{"ks", cmp.ks_distance}, {"dkw", cmp.dkw_threshold}, {"samples", cmp.sample_count}});
        }
    }
    o.summary = "KS/DKW: " + summary;
    return o;
}

Outcome criterion_8() {
    Outcome o;
    std::string summary;
    for (int k = 2; k <= 4; ++k) {
        const auto w = pdm::wendel_check(k, 1000000, pdm::mix64(kSeed + 800 + static_cast<std::uint64_t>(k)));
        const double expect = std::ldexp(1.0, -k);
        const double z = std::fabs(w.value - expect) / w.std_error;
        summary += std::string(summary.empty() ? "" : ", ") + "k=" + std::to_string(k) + " z " + fmt(z, 3);
        if (z > 3.0) {
            fail(o, "k=" + std::to_string(k), {{"value", w.value}, {"stderr", w.std_error}});
        }
    }
    o.summary = summary;
    return o;
}

Outcome criterion_9() {
    Outcome o;
    std::string summary;
    for (auto [k, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
        const auto r = pdm::bp_identity_check(k, n, 4000000, pdm::mix64(kSeed + 900 + 10 * k + n));
        const double gap = std::fabs(r.lhs.value - r.rhs.value);
        summary += std::string(summary.empty() ? "" : ", ") + "(" + std::to_string(k) + "," + std::to_string(n) +
                   ") rel " + fmt(gap / r.exact, 3) + " z " + fmt(gap / r.combined_stderr(), 3);
        if (!r.agree(0.01, 3.0)) {
            fail(o, "(" + std::to_string(k) + "," + std::to_string(n) + ")", pdm::cli::strip_timing(pdm::to_json(r)));
        }
    }
    o.summary = summary;
    return o;
}

Outcome criterion_10() {
    Outcome o;
    const double v = pdm::triple_circle_moment();
    const double expect = 3.0 / (32.0 * std::numbers::pi);
    if (std::fabs(v - expect) > 1e-10) {
        fail(o, "triple moment", {{"value", v}, {"expected", expect}});
    }
    o.summary = "value " + fmt(v, 15) + ", error " + fmt(std::fabs(v - expect), 3);
    return o;
}

Outcome criterion_11() {
    Outcome o;
    const auto s = pdm::boundary_effect_study(2, 1.0, {10.0, 20.0, 40.0}, 10, kSeed + 1100);
    std::string ratios;
    for (const auto& r : s.rows) {
        ratios += (ratios.empty() ? "" : " ") + fmt(r.ratio, 4);
    }
    const auto& test = s.tail.back();
    if (!s.ratios_decreasing()) {
        fail(o, "ratios not decreasing", pdm::cli::strip_timing(pdm::to_json(s))["rows"]);
    }
    if (!s.tail_below_envelope()) {
        fail(o, "tail above envelope", pdm::cli::strip_timing(pdm::to_json(s))["tail"]);
    }
    o.summary = "ratios " + ratios + "; tail at r0=" + fmt(test.r0, 3) + " " + fmt(test.fraction, 3) +
                " vs envelope " + fmt(s.envelope(test.r0), 3);
    return o;
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.insert(std::stoi(item));
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only, allowed;
    std::string json_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("--only=", 0) == 0) {
            only = parse_list(a.substr(7));
        } else if (a.rfind("--allow-fail=", 0) == 0) {
            allowed = parse_list(a.substr(13));
        } else if (a.rfind("--json=", 0) == 0) {
            json_path = a.substr(7);
        } else {
            std::cerr << "usage: acceptance [--only=LIST] [--allow-fail=LIST] [--json=PATH]\n";
            return 2;
        }
    }
    const std::vector<Criterion> criteria = {
        {1, "closed-form interval constants", 1.0, criterion_1},
        {2, "closed-form simplex intensities", 1.0, criterion_2},
        {3, "sphere Monte Carlo cross-validation", 600.0, criterion_3},
        {4, "mosaic Monte Carlo n=2", 60.0, criterion_4},
        {5, "mosaic Monte Carlo n=3 and n=4", 1e9, criterion_5},
        {6, "exact per-trial invariants", 1e9, criterion_6},
        {7, "radius distributions", 300.0, criterion_7},
        {8, "Wendel probabilities", 30.0, criterion_8},
        {9, "Blaschke-Petkantschin identity", 120.0, criterion_9},
        {10, "triple circle moment", 1.0, criterion_10},
        {11, "boundary study", 1e9, criterion_11},
    };
    json report = json::array();
    bool ok = true;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) {
            continue;
        }
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs > c.budget_seconds) {
            fail(o, "runtime " + fmt(secs, 3) + " s exceeds " + fmt(c.budget_seconds, 3) + " s");
        }
        const bool allowed_fail = !o.pass && allowed.count(c.id);
        ok = ok && (o.pass || allowed_fail);
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.title << ": " << o.summary
                  << " [" << fmt(secs, 3) << " s]" << (allowed_fail ? " (known failure, see README)" : "") << "\n";
        for (const auto& d : o.details) {
            std::cout << "    " << d["failure"].get<std::string>() << "\n";
        }
        std::cout.flush();
        report.push_back({{"criterion", c.id}, {"title", c.title}, {"pass", o.pass}, {"summary", o.summary},
                          {"seconds", secs}, {"details", o.details}});
    }
    if (!json_path.empty()) {
        std::ofstream(json_path) << report.dump(2) << "\n";
    }
    return ok ? 0 : 1;
}
