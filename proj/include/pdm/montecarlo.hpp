#pragma once

#include "pdm/delaunay.hpp"
#include "pdm/morse.hpp"
#include "pdm/sampling.hpp"
#include "pdm/theory.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pdm {

/// Upper bound on worker threads; 0 selects the hardware concurrency.
/// Results never depend on this value.
void set_thread_limit(int threads);
int thread_limit();

/// Samples per independent substream. Estimators split their work into
/// batches of this size and combine them in batch order.
inline constexpr std::uint64_t kBatchSize = 1u << 16;

struct EstimatorResult {
    double value = 0.0;
    /// Sample standard deviation over sqrt(samples).
    double std_error = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
};

/// `{quantity, params, value, stderr, samples, seed, wall_time}`.
nlohmann::json to_json(const EstimatorResult& r, const std::string& quantity, const nlohmann::json& params);

enum class SphereMethod { direct, reduced };
const char* to_string(SphereMethod m);
SphereMethod sphere_method_from_string(const std::string& s);

/// Monte Carlo estimate of E_{ell,k}^n. The direct method averages
/// Vol^{n-k+1} over (k+1)-tuples on S^{k-1} with exactly k-ell visible
/// facets; the reduced method averages the positive part of a fixed-signature
/// sum of cone volumes, scaled by binom(k+1, k-ell) / 2^k.
EstimatorResult estimate_spherical_expectation(int ell, int k, int n, std::uint64_t samples, std::uint64_t seed,
                                               SphereMethod method);

/// Fraction of (k+1)-tuples on S^{k-1} whose hull contains the origin.
EstimatorResult wendel_check(int k, std::uint64_t samples, std::uint64_t seed);

struct TrialCheck {
    std::string name;
    bool ok = true;
    std::string detail;
};

/// Exact identities of one torus trial: interval partition, the c-to-d
/// combination, Euler characteristic 0, the Morse relation, two cofaces per
/// ridge, the ridge/top count ratio and monotonicity of Rad.
std::vector<TrialCheck> check_trial_invariants(const Mosaic& mosaic, const Decomposition& dec,
                                               const IntervalCensus& census);

struct MosaicTrial {
    int index = 0;
    std::uint64_t seed = 0;
    std::size_t points = 0;
    IntervalCensus census;
    std::vector<TrialCheck> checks;
    double wall_time = 0.0;

    bool invariants_ok() const;
};

struct EmpiricalConstants {
    ConstantReport report;
    std::vector<MosaicTrial> trials;
    double density = 1.0;
    Region region;
    std::uint64_t seed = 0;
    double wall_time = 0.0;

    bool invariants_ok() const;
};

/// Per-trial censuses of Poisson samples on a periodic box, normalized by
/// density times volume and averaged. Standard errors are across trials.
EmpiricalConstants estimate_constants_empirical(int n, double density, const Region& region, int trials,
                                                std::uint64_t seed);

/// Either a simplex dimension j or an interval type (ell, k).
struct RadiusTarget {
    int j = -1;
    int ell = -1;
    int k = -1;

    static RadiusTarget simplex(int j);
    static RadiusTarget interval(int ell, int k);
    bool is_simplex() const { return j >= 0; }
    /// "j=2" or "(1,2)".
    std::string label() const;
};

struct CdfComparison {
    int n = 0;
    RadiusTarget target;
    double density = 1.0;
    /// Total volume over all trials.
    double volume = 0.0;
    /// Sorted realized radii.
    std::vector<double> radii;
    /// Identifier of the theoretical CDF, e.g. "radius_cdf_simplex(j=2,n=2)".
    std::string theory_cdf;
    /// Per trial: share of the realized radii and realized density
    /// points / volume. Given its point count a trial is a binomial process
    /// at that density, so theory() mixes the CDF over these pairs.
    std::vector<std::array<double, 2>> trial_mixture;
    /// sup |empirical - theory| over the realized radii.
    double ks_distance = 0.0;
    /// The same distance against the CDF at the nominal density.
    double ks_nominal = 0.0;
    std::size_t sample_count = 0;
    /// DKW bound sqrt(ln(2/alpha) / (2 N)) at alpha = 0.001.
    double dkw_threshold = 0.0;
    /// Expected count per unit volume and density (C or D).
    double intensity = 0.0;

    bool passes() const { return ks_distance <= dkw_threshold; }
    double theory(double r) const;
    double theory_nominal(double r) const;
    /// Radius density at the nominal density.
    double theory_density(double r) const;
};

CdfComparison compare_radius_distribution(const EmpiricalConstants& runs, RadiusTarget target);
CdfComparison estimate_radius_distribution(int n, RadiusTarget target, double density, const Region& region,
                                           int trials, std::uint64_t seed);

/// `r,empirical_cdf,theory_cdf,theory_cdf_nominal` on an even grid.
void write_cdf_csv(std::ostream& os, const CdfComparison& cmp, int points = 200);
/// `r,empirical_density,theory_density`: counts per unit volume and radius
/// against intensity times the radius density.
void write_density_csv(std::ostream& os, const CdfComparison& cmp, int bins = 60);
/// Static overlay of the empirical and theoretical CDF and density curves.
void write_distribution_svg(std::ostream& os, const CdfComparison& cmp, const std::string& provenance);

struct BpResult {
    int k = 0;
    int n = 0;
    EstimatorResult lhs;
    EstimatorResult rhs;
    /// pi^{n(k+1)/2}, the exact value of both sides.
    double exact = 0.0;

    double combined_stderr() const;
    bool agree(double rel_tol = 0.01, double sigmas = 3.0) const;
};

/// Both sides of the spherical Blaschke-Petkantschin formula for
/// f(x) = exp(-sum |x_i|^2), each by importance sampling. With u uniform
/// the right-side weight behaves like eps^{(k+1)(n-k+1) - nk} on clusters of
/// angular size eps; its variance is finite for (1,2), (1,3), (2,3),
/// logarithmically divergent for (2,2) and divergent for (3,3).
BpResult bp_identity_check(int k, int n, std::uint64_t samples, std::uint64_t seed);

struct BoundaryRow {
    double radius = 0.0;
    int trials = 0;
    double k1_mean = 0.0;
    double k0_minus_k1_mean = 0.0;
    /// |K0 \ K1| / (density * vol B(R)).
    double ratio = 0.0;
    double ratio_stderr = 0.0;
    /// Trials in which K0 had Euler characteristic 1.
    int contractible_trials = 0;
};

struct TailRow {
    double r0 = 0.0;
    std::size_t exceed = 0;
    double fraction = 0.0;
    double std_error = 0.0;
    /// Closed-form tail of the top simplex radius law.
    double theory = 0.0;
};

struct BoundaryOptions {
    K0Rule rule = K0Rule::voronoi;
    /// Window margin beyond R, in units of density^{-1/n}.
    double margin = 8.0;
    std::vector<double> fit_radii{1.0, 1.5};
    double test_radius = 2.0;
    /// Approximate number of top simplices in the separate tail sample.
    double tail_simplices = 1e6;
};

struct BoundaryStudy {
    int n = 0;
    double density = 1.0;
    std::uint64_t seed = 0;
    std::vector<BoundaryRow> rows;
    /// Tail rows for the fit radii followed by the test radius.
    std::vector<TailRow> tail;
    std::size_t tail_total = 0;
    /// log fraction = envelope_a - envelope_b * r0^n through the fit radii.
    double envelope_a = 0.0;
    double envelope_b = 0.0;
    double test_radius = 2.0;
    double wall_time = 0.0;

    double envelope(double r0) const;
    /// Each ratio exceeds the next by more than minus one combined stderr.
    bool ratios_decreasing() const;
    bool tail_below_envelope() const;
};

BoundaryStudy boundary_effect_study(int n, double density, const std::vector<double>& radii, int trials,
                                    std::uint64_t seed, const BoundaryOptions& options = {});

nlohmann::json to_json(const ConstantReport& report);
nlohmann::json to_json(const EmpiricalConstants& runs);
nlohmann::json to_json(const CdfComparison& cmp);
nlohmann::json to_json(const BpResult& bp);
nlohmann::json to_json(const BoundaryStudy& study);

} // namespace pdm
