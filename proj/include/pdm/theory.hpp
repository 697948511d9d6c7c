#pragma once

#include <gmpxx.h>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace pdm {

/// Exact number of the form sum_e q_e * sqrt(pi)^e with rational q_e.
/// Division is supported by single-term divisors only.
class PiNumber {
public:
    PiNumber() = default;
    PiNumber(long value);
    static PiNumber rational(long num, long den = 1);
    static PiNumber rational(const mpq_class& q);
    /// sqrt(pi)^e.
    static PiNumber sqrt_pi_power(int e);
    /// Gamma(m/2) for a positive integer m.
    static PiNumber gamma_half(int m);

    PiNumber& operator+=(const PiNumber& o);
    PiNumber& operator-=(const PiNumber& o);
    PiNumber& operator*=(const PiNumber& o);
    PiNumber& operator/=(const PiNumber& o);
    friend PiNumber operator+(PiNumber a, const PiNumber& b) { return a += b; }
    friend PiNumber operator-(PiNumber a, const PiNumber& b) { return a -= b; }
    friend PiNumber operator*(PiNumber a, const PiNumber& b) { return a *= b; }
    friend PiNumber operator/(PiNumber a, const PiNumber& b) { return a /= b; }
    PiNumber operator-() const;
    bool operator==(const PiNumber& o) const { return terms_ == o.terms_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_monomial() const { return terms_.size() == 1; }
    double to_double() const;
    /// Human-readable form such as "9*pi^2/16 - 3" or "3/(32*pi)".
    std::string to_string() const;
    const std::map<int, mpq_class>& terms() const { return terms_; }

private:
    void prune();
    std::map<int, mpq_class> terms_;
};

double unit_ball_volume(int n);
double unit_sphere_surface(int n);

/// gamma(k, x) for integer k >= 1; x may be +infinity.
double lower_incomplete_gamma(int k, double x);
/// gamma(k, x) / Gamma(k).
double regularized_lower_gamma(int k, double x);

double grassmannian_measure(int k, int n);
double factor_f(int k, int n);
/// Moment of order a of the volume of the cone over k uniform points on S^{n-1}.
double moment_M(int k, int n, int a);
/// Mixed moment of the volumes of two cones over n uniform points on S^{n-1}
/// that share n-1 points.
double mixed_moment(int n, int a, int b);
/// Expected product of the three cone areas of an inscribed triangle, by
/// adaptive quadrature. half_domain integrates beta < alpha and doubles.
double triple_circle_moment(bool half_domain = false);

struct SpecialValues {
    int n = 0;
    double nu = 0.0;
    double sigma = 0.0;
    /// grassmannian[k] = ||G(k, n)|| for 1 <= k <= n.
    std::vector<double> grassmannian;
};
SpecialValues special_values(int n);

/// Closed-form E_{ell,k}^n for n in {2,3,4}. Throws Unsupported for
/// (1,4,4) and (2,4,4).
double spherical_expectation_closed(int ell, int k, int n);
double constant_C(int ell, int k, int n);
double constant_D(int j, int n);
/// Expected number of top simplices per unit volume and density.
double miles_top_intensity(int n);

PiNumber spherical_expectation_exact(int ell, int k, int n);
PiNumber constant_C_exact(int ell, int k, int n);
PiNumber constant_D_exact(int j, int n);
PiNumber miles_top_intensity_exact(int n);
PiNumber factor_f_exact(int k, int n);

/// Radius distribution of the typical (ell,k) interval.
double radius_cdf_interval(int ell, int k, int n, double density, double r);
/// Derivative of radius_cdf_interval in r.
double radius_pdf_interval(int ell, int k, int n, double density, double r);

struct MixtureTerm {
    int ell;
    int k;
    double weight;
};
/// Interval types contributing to j-simplices with weights
/// binom(k-ell, k-j) C_{ell,k} / D_j.
std::vector<MixtureTerm> simplex_mixture(int j, int n);
/// Radius distribution of the typical j-simplex. For j = 0 all radii are 0.
double radius_cdf_simplex(int j, int n, double density, double r);
double radius_pdf_simplex(int j, int n, double density, double r);

enum class Provenance { none, closed_form, sphere_mc, mosaic_mc };
const char* to_string(Provenance p);

struct ConstantReport {
    int n = 0;
    std::array<std::array<double, 5>, 5> C{};
    std::array<double, 5> D{};
    std::array<std::array<double, 5>, 5> C_stderr{};
    std::array<double, 5> D_stderr{};
    std::array<std::array<Provenance, 5>, 5> C_provenance{};
    std::array<Provenance, 5> D_provenance{};
    /// Exact forms of closed-form entries; empty otherwise.
    std::array<std::array<std::string, 5>, 5> C_exact;
    std::array<std::string, 5> D_exact;
};

/// All C_{ell,k}^n and D_j^n from the closed forms, with exact strings.
ConstantReport closed_form_constants(int n);

} // namespace pdm
