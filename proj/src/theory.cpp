#include "pdm/theory.hpp"

#include "pdm/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace pdm {

// ---------------------------------------------------------------------------
// PiNumber

PiNumber::PiNumber(long value) {
    if (value != 0) {
        terms_[0] = mpq_class(value);
    }
}

PiNumber PiNumber::rational(long num, long den) {
    if (den == 0) {
        throw ConfigError("zero denominator");
    }
    mpq_class q(num, den);
    q.canonicalize();
    return rational(q);
}

PiNumber PiNumber::rational(const mpq_class& q) {
    PiNumber p;
    if (q != 0) {
        p.terms_[0] = q;
    }
    return p;
}

PiNumber PiNumber::sqrt_pi_power(int e) {
    PiNumber p;
    p.terms_[e] = mpq_class(1);
    return p;
}

PiNumber PiNumber::gamma_half(int m) {
    if (m <= 0) {
        throw ConfigError("Gamma(m/2) needs m >= 1");
    }
    mpq_class q(1);
    if (m % 2 == 0) {
        for (int i = 2; i < m / 2; ++i) {
            q *= i;
        }
        return rational(q);
    }
    // Gamma(m/2) = (m/2 - 1)(m/2 - 2)...(1/2) sqrt(pi).
    for (int twice = m - 2; twice >= 1; twice -= 2) {
        q *= mpq_class(twice, 2);
    }
    q.canonicalize();
    PiNumber p;
    p.terms_[1] = q;
    return p;
}

void PiNumber::prune() {
    for (auto it = terms_.begin(); it != terms_.end();) {
        it = it->second == 0 ? terms_.erase(it) : std::next(it);
    }
}

PiNumber& PiNumber::operator+=(const PiNumber& o) {
    for (const auto& [e, q] : o.terms_) {
        terms_[e] += q;
    }
    prune();
    return *this;
}

PiNumber& PiNumber::operator-=(const PiNumber& o) {
    for (const auto& [e, q] : o.terms_) {
        terms_[e] -= q;
    }
    prune();
    return *this;
}

PiNumber& PiNumber::operator*=(const PiNumber& o) {
    std::map<int, mpq_class> out;
    for (const auto& [e1, q1] : terms_) {
        for (const auto& [e2, q2] : o.terms_) {
            out[e1 + e2] += q1 * q2;
        }
    }
    terms_ = std::move(out);
    prune();
    return *this;
}

PiNumber& PiNumber::operator/=(const PiNumber& o) {
    if (!o.is_monomial()) {
        throw Unsupported("exact division by a sum of powers of pi");
    }
    const auto& [e, q] = *o.terms_.begin();
    std::map<int, mpq_class> out;
    for (const auto& [e1, q1] : terms_) {
        out[e1 - e] = q1 / q;
    }
    terms_ = std::move(out);
    return *this;
}

PiNumber PiNumber::operator-() const {
    PiNumber p = *this;
    for (auto& [e, q] : p.terms_) {
        q = -q;
    }
    return p;
}

double PiNumber::to_double() const {
    const long double sqrt_pi = std::sqrt(std::numbers::pi_v<long double>);
    long double s = 0.0L;
    for (const auto& [e, q] : terms_) {
        const mpf_class num(q.get_num(), 128), den(q.get_den(), 128);
        const mpf_class ratio = num / den;
        s += static_cast<long double>(ratio.get_d()) * std::pow(sqrt_pi, static_cast<long double>(e));
    }
    return static_cast<double>(s);
}

namespace {

std::string pi_power_string(int e) {
    if (e == 1) {
        return "sqrt(pi)";
    }
    if (e == 2) {
        return "pi";
    }
    if (e % 2 == 0) {
        return "pi^" + std::to_string(e / 2);
    }
    return "pi^(" + std::to_string(e) + "/2)";
}

std::string term_string(const mpq_class& q, int e) {
    const std::string num = mpz_class(abs(q.get_num())).get_str();
    const std::string den = q.get_den().get_str();
    if (e == 0) {
        return den == "1" ? num : num + "/" + den;
    }
    const std::string pi = pi_power_string(std::abs(e));
    if (e > 0) {
        const std::string top = num == "1" ? pi : num + "*" + pi;
        return den == "1" ? top : top + "/" + den;
    }
    return num + "/" + (den == "1" ? pi : "(" + den + "*" + pi + ")");
}

} // namespace

std::string PiNumber::to_string() const {
    if (terms_.empty()) {
        return "0";
    }
    std::string s;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const bool neg = it->second < 0;
        if (s.empty()) {
            s = neg ? "-" : "";
        } else {
            s += neg ? " - " : " + ";
        }
        s += term_string(it->second, it->first);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Generic closed-form assembly, instantiated for double and PiNumber.

namespace {

template <class T>
struct Arith;

template <>
struct Arith<double> {
    static double rational(long p, long q = 1) { return static_cast<double>(p) / static_cast<double>(q); }
    static double gamma_half(int m) { return std::tgamma(0.5 * m); }
    static double sqrt_pi_power(int e) { return std::pow(std::sqrt(std::numbers::pi), e); }
    static double triple() {
        static const double value = triple_circle_moment();
        return value;
    }
};

template <>
struct Arith<PiNumber> {
    static PiNumber rational(long p, long q = 1) { return PiNumber::rational(p, q); }
    static PiNumber gamma_half(int m) { return PiNumber::gamma_half(m); }
    static PiNumber sqrt_pi_power(int e) { return PiNumber::sqrt_pi_power(e); }
    static PiNumber triple() { return PiNumber::rational(3, 32) / PiNumber::sqrt_pi_power(2); }
};

long factorial(int k) {
    long r = 1;
    for (int i = 2; i <= k; ++i) {
        r *= i;
    }
    return r;
}

long ipow(long b, int e) {
    long r = 1;
    for (int i = 0; i < e; ++i) {
        r *= b;
    }
    return r;
}

long binom(int n, int k) {
    if (k < 0 || k > n) {
        return 0;
    }
    long r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

template <class T>
T tpow(const T& x, int e) {
    T r = Arith<T>::rational(1);
    for (int i = 0; i < e; ++i) {
        r = r * x;
    }
    return r;
}

template <class T>
T sigma_t(int n) {
    return Arith<T>::rational(2) * Arith<T>::sqrt_pi_power(n) / Arith<T>::gamma_half(n);
}

template <class T>
T grassmannian_t(int k, int n) {
    T r = Arith<T>::rational(1);
    for (int i = n - k + 1; i <= n; ++i) {
        r = r * sigma_t<T>(i);
    }
    for (int i = 1; i <= k; ++i) {
        r = r / sigma_t<T>(i);
    }
    return r;
}

template <class T>
T factor_f_t(int k, int n) {
    return grassmannian_t<T>(k, n) * Arith<T>::gamma_half(2 * k) *
           Arith<T>::rational(ipow(n, k - 1) * ipow(factorial(k), n - k)) * tpow(sigma_t<T>(k), k + 1) /
           (Arith<T>::rational(k + 1) * tpow(sigma_t<T>(n), k));
}

template <class T>
T moment_M_t(int k, int n, int a) {
    using A = Arith<T>;
    T r = A::rational(1, ipow(factorial(k), a));
    r = r * tpow(A::gamma_half(n) / A::gamma_half(n + a), k - 1);
    for (int i = 1; i <= k - 1; ++i) {
        r = r * A::gamma_half(n - k + a + i) / A::gamma_half(n - k + i);
    }
    return r;
}

template <class T>
T mixed_moment_t(int n, int a, int b) {
    using A = Arith<T>;
    return moment_M_t<T>(n - 1, n, a + b) / A::rational(ipow(n, a + b)) *
           tpow(A::gamma_half(n) / A::gamma_half(1), 2) * A::gamma_half(a + 1) * A::gamma_half(b + 1) /
           (A::gamma_half(n + a) * A::gamma_half(n + b));
}

// E[prod v_i^{e_i}] for cone volumes of an inscribed k-simplex in S^{k-1};
// exps lists the nonzero exponents.
template <class T>
T cone_moment_t(int k, std::vector<int> exps) {
    std::sort(exps.begin(), exps.end());
    if (exps.size() == 1) {
        return moment_M_t<T>(k, k, exps[0]);
    }
    if (exps.size() == 2) {
        return mixed_moment_t<T>(k, exps[0], exps[1]);
    }
    if (exps.size() == 3 && k == 2 && exps == std::vector<int>{1, 1, 1}) {
        return Arith<T>::triple();
    }
    throw Unsupported("no closed form for this joint moment of cone volumes");
}

void check_dim(int n) {
    if (n < 2 || n > 4) {
        throw UnsupportedDimension("closed forms are available for n = 2, 3, 4 (got " + std::to_string(n) + ")");
    }
}

template <class T>
T spherical_expectation_t(int ell, int k, int n) {
    check_dim(n);
    if (ell < 1 || ell > k || k > n) {
        throw ConfigError("spherical expectation needs 1 <= ell <= k <= n");
    }
    using A = Arith<T>;
    if (k == 1) {
        return A::rational(ipow(2, n - 1));
    }
    const int m = k - ell;
    const int a = n - k + 1;
    bool half = false;
    if (m >= 2) {
        if (2 * m == k + 1 && a % 2 == 0) {
            half = true;
        } else {
            throw Unsupported("spherical expectation E_{" + std::to_string(ell) + "," + std::to_string(k) + "}^" +
                              std::to_string(n) + " has no closed form here");
        }
    }
    // Multinomial expansion of (sum_i t_i v_i)^a with t_i = -1 for i < m.
    T sum = A::rational(0);
    std::vector<int> e(k + 1, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == k) {
            e[k] = left;
            long coef = factorial(a);
            int sign = 1;
            std::vector<int> nz;
            for (int j = 0; j <= k; ++j) {
                coef /= factorial(e[j]);
                if (j < m && e[j] % 2 == 1) {
                    sign = -sign;
                }
                if (e[j] > 0) {
                    nz.push_back(e[j]);
                }
            }
            sum = sum + A::rational(sign * coef) * cone_moment_t<T>(k, nz);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            e[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, a);
    if (half) {
        sum = sum / A::rational(2);
    }
    return A::rational(binom(k + 1, m), ipow(2, k)) * sum;
}

template <class T>
T miles_t(int n) {
    using A = Arith<T>;
    return A::rational(ipow(2, n + 1), n * n * (n + 1)) * A::sqrt_pi_power(n - 1) * A::gamma_half(n * n + 1) /
           A::gamma_half(n * n) * tpow(A::gamma_half(n + 2) / A::gamma_half(n + 1), n);
}

template <class T>
T constant_C_t(int ell, int k, int n) {
    if (n > 4 || n < 2) {
        throw UnsupportedDimension("constants are available for n = 2, 3, 4 (got " + std::to_string(n) + ")");
    }
    if (ell < 0 || ell > k || k > n) {
        throw ConfigError("constant C needs 0 <= ell <= k <= n");
    }
    using A = Arith<T>;
    if (ell == 0) {
        return A::rational(k == 0 ? 1 : 0);
    }
    if (n == 3 && k == 3 && ell == 1) {
        return miles_t<T>(3) - constant_C_t<T>(2, 3, 3) - constant_C_t<T>(3, 3, 3);
    }
    if (n == 4 && k == 4 && ell <= 2) {
        // a + b = D_4 - C_{3,4} - C_{4,4}; 3a + 2b = D_3 - (k = 3 terms) - C_{3,4}, with D_3 = 5/2 D_4.
        const T d4 = miles_t<T>(4);
        const T c34 = constant_C_t<T>(3, 4, 4);
        const T y = d4 - c34 - constant_C_t<T>(4, 4, 4);
        const T x = A::rational(5, 2) * d4 - constant_C_t<T>(1, 3, 4) - constant_C_t<T>(2, 3, 4) -
                    constant_C_t<T>(3, 3, 4) - c34;
        return ell == 1 ? x - A::rational(2) * y : A::rational(3) * y - x;
    }
    return factor_f_t<T>(k, n) * spherical_expectation_t<T>(ell, k, n);
}

template <class T>
T constant_D_t(int j, int n) {
    if (n > 4 || n < 2) {
        throw UnsupportedDimension("constants are available for n = 2, 3, 4 (got " + std::to_string(n) + ")");
    }
    if (j < 0 || j > n) {
        throw ConfigError("constant D needs 0 <= j <= n");
    }
    T d = Arith<T>::rational(0);
    for (int k = j; k <= n; ++k) {
        for (int ell = 0; ell <= j; ++ell) {
            d = d + Arith<T>::rational(binom(k - ell, k - j)) * constant_C_t<T>(ell, k, n);
        }
    }
    return d;
}

} // namespace

// ---------------------------------------------------------------------------
// Public double-precision API

double unit_ball_volume(int n) {
    if (n < 1) {
        throw ConfigError("dimension must be >= 1");
    }
    return std::pow(std::sqrt(std::numbers::pi), n) / std::tgamma(0.5 * n + 1.0);
}

double unit_sphere_surface(int n) {
    if (n < 1) {
        throw ConfigError("dimension must be >= 1");
    }
    return 2.0 * std::pow(std::sqrt(std::numbers::pi), n) / std::tgamma(0.5 * n);
}

double lower_incomplete_gamma(int k, double x) {
    if (k < 1 || !(x >= 0.0)) {
        throw ConfigError("lower incomplete gamma needs k >= 1 and x >= 0");
    }
    const double full = static_cast<double>(factorial(k - 1));
    if (std::isinf(x)) {
        return full;
    }
    if (x < k + 1.0) {
        // x^k e^{-x} sum_i x^i / (k (k+1) ... (k+i)); avoids cancellation for small x.
        double term = 1.0 / k;
        double sum = term;
        for (int i = 1; i < 500; ++i) {
            term *= x / (k + i);
            sum += term;
            if (term < sum * 1e-17) {
                break;
            }
        }
        return std::exp(k * std::log(x) - x) * sum;
    }
    double term = 1.0;
    double sum = 1.0;
    for (int i = 1; i < k; ++i) {
        term *= x / i;
        sum += term;
    }
    return full * (1.0 - std::exp(-x) * sum);
}

double regularized_lower_gamma(int k, double x) {
    return lower_incomplete_gamma(k, x) / static_cast<double>(factorial(k - 1));
}

double grassmannian_measure(int k, int n) {
    if (k < 1 || k > n) {
        throw ConfigError("Grassmannian needs 1 <= k <= n");
    }
    return grassmannian_t<double>(k, n);
}

double factor_f(int k, int n) {
    if (k < 1 || k > n) {
        throw ConfigError("f(k, n) needs 1 <= k <= n");
    }
    return factor_f_t<double>(k, n);
}

PiNumber factor_f_exact(int k, int n) {
    if (k < 1 || k > n) {
        throw ConfigError("f(k, n) needs 1 <= k <= n");
    }
    return factor_f_t<PiNumber>(k, n);
}

double moment_M(int k, int n, int a) {
    if (k < 1 || k > n || a < 0) {
        throw ConfigError("M(k, n, a) needs 1 <= k <= n and a >= 0");
    }
    return moment_M_t<double>(k, n, a);
}

double mixed_moment(int n, int a, int b) {
    if (n < 2 || a < 0 || b < 0) {
        throw ConfigError("m(n, a, b) needs n >= 2 and a, b >= 0");
    }
    return mixed_moment_t<double>(n, a, b);
}

double triple_circle_moment(bool half_domain) {
    using boost::math::quadrature::gauss_kronrod;
    const double pi = std::numbers::pi;
    double worst = 0.0;
    auto integrate = [&](auto f, double a, double b) {
        double err = 0.0;
        const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-15, &err);
        worst = std::max(worst, err);
        return v;
    };
    // The integrand has a kink along alpha = beta, so the inner integral is split there.
    auto g = [](double a, double b) { return std::sin(a) * std::sin(b) * std::fabs(std::sin(a - b)); };
    auto lower = [&](double a) { return integrate([&](double b) { return g(a, b); }, 0.0, a); };
    auto upper = [&](double a) { return integrate([&](double b) { return g(a, b); }, a, pi); };
    double total;
    if (half_domain) {
        total = 2.0 * integrate(lower, 0.0, pi);
    } else {
        total = integrate(lower, 0.0, pi) + integrate(upper, 0.0, pi);
    }
    if (!(worst < 1e-11) || !std::isfinite(total)) {
        throw QuadratureFailure("triple circle moment did not converge (error estimate " + std::to_string(worst) +
                                ")");
    }
    return total / (8.0 * pi * pi);
}

SpecialValues special_values(int n) {
    SpecialValues s;
    s.n = n;
    s.nu = unit_ball_volume(n);
    s.sigma = unit_sphere_surface(n);
    s.grassmannian.assign(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
        s.grassmannian[k] = grassmannian_measure(k, n);
    }
    return s;
}

double spherical_expectation_closed(int ell, int k, int n) { return spherical_expectation_t<double>(ell, k, n); }
double constant_C(int ell, int k, int n) { return constant_C_t<double>(ell, k, n); }
double constant_D(int j, int n) { return constant_D_t<double>(j, n); }

double miles_top_intensity(int n) {
    if (n < 1) {
        throw ConfigError("dimension must be >= 1");
    }
    return miles_t<double>(n);
}

PiNumber spherical_expectation_exact(int ell, int k, int n) { return spherical_expectation_t<PiNumber>(ell, k, n); }
PiNumber constant_C_exact(int ell, int k, int n) { return constant_C_t<PiNumber>(ell, k, n); }
PiNumber constant_D_exact(int j, int n) { return constant_D_t<PiNumber>(j, n); }

PiNumber miles_top_intensity_exact(int n) {
    if (n < 1) {
        throw ConfigError("dimension must be >= 1");
    }
    return miles_t<PiNumber>(n);
}

double radius_cdf_interval(int ell, int k, int n, double density, double r) {
    if (k < 1 || ell < 0 || ell > k || !(density > 0.0) || n < 1) {
        throw ConfigError("radius distribution needs k >= 1, 0 <= ell <= k and density > 0");
    }
    if (!(r > 0.0)) {
        return 0.0;
    }
    return regularized_lower_gamma(k, density * unit_ball_volume(n) * std::pow(r, n));
}

double radius_pdf_interval(int ell, int k, int n, double density, double r) {
    if (k < 1 || ell < 0 || ell > k || !(density > 0.0) || n < 1) {
        throw ConfigError("radius distribution needs k >= 1, 0 <= ell <= k and density > 0");
    }
    if (!(r > 0.0)) {
        return 0.0;
    }
    const double c = density * unit_ball_volume(n);
    const double x = c * std::pow(r, n);
    return c * n * std::pow(r, n - 1) * std::exp((k - 1) * std::log(x) - x) / static_cast<double>(factorial(k - 1));
}

std::vector<MixtureTerm> simplex_mixture(int j, int n) {
    check_dim(n);
    if (j < 0 || j > n) {
        throw ConfigError("simplex dimension out of range");
    }
    std::vector<MixtureTerm> out;
    const double d = constant_D(j, n);
    for (int k = j; k <= n; ++k) {
        for (int ell = 0; ell <= j; ++ell) {
            const double w = static_cast<double>(binom(k - ell, k - j)) * constant_C(ell, k, n) / d;
            if (w != 0.0) {
                out.push_back({ell, k, w});
            }
        }
    }
    return out;
}

double radius_cdf_simplex(int j, int n, double density, double r) {
    if (j == 0) {
        check_dim(n);
        return r >= 0.0 ? 1.0 : 0.0;
    }
    double s = 0.0;
    for (const auto& t : simplex_mixture(j, n)) {
        s += t.weight * radius_cdf_interval(t.ell, t.k, n, density, r);
    }
    return s;
}

double radius_pdf_simplex(int j, int n, double density, double r) {
    if (j == 0) {
        check_dim(n);
        return 0.0;
    }
    double s = 0.0;
    for (const auto& t : simplex_mixture(j, n)) {
        s += t.weight * radius_pdf_interval(t.ell, t.k, n, density, r);
    }
    return s;
}

const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::closed_form:
        return "closed-form";
    case Provenance::sphere_mc:
        return "sphere-mc";
    case Provenance::mosaic_mc:
        return "mosaic-mc";
    default:
        return "none";
    }
}

ConstantReport closed_form_constants(int n) {
    check_dim(n);
    ConstantReport rep;
    rep.n = n;
    for (int k = 0; k <= n; ++k) {
        for (int ell = 0; ell <= k; ++ell) {
            const PiNumber c = constant_C_exact(ell, k, n);
            rep.C[ell][k] = c.to_double();
            rep.C_exact[ell][k] = c.to_string();
            rep.C_provenance[ell][k] = Provenance::closed_form;
        }
    }
    for (int j = 0; j <= n; ++j) {
        const PiNumber d = constant_D_exact(j, n);
        rep.D[j] = d.to_double();
        rep.D_exact[j] = d.to_string();
        rep.D_provenance[j] = Provenance::closed_form;
    }
    return rep;
}

} // namespace pdm
