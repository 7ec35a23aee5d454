#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "errors.hpp"

namespace snell {

// Exact arithmetic: arbitrary-precision rationals, so every value identity
// the solver claims can be tested with operator== instead of a tolerance.
// Expression templates are off so arithmetic yields plain values; generic
// code (and Eigen) then deduces Scalar correctly from compound expressions.
using Rational =
    boost::multiprecision::number<boost::multiprecision::backends::rational_adaptor<
                                      boost::multiprecision::backends::cpp_int_backend<>>,
                                  boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::backends::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <class Scalar>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static constexpr const char* mode_name = "exact";
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static constexpr const char* mode_name = "float";
};

inline double to_double(const Rational& x) { return static_cast<double>(x); }
inline double to_double(double x) { return x; }

template <class Scalar>
Scalar abs_value(const Scalar& x) {
    return x < Scalar(0) ? Scalar(-x) : x;
}

// Equality and ordering used for every solver/oracle equality check. Exact mode
// compares rationals bit-exactly; float mode measures the gap relative to
// max(1, |a|, |b|) with a configurable tolerance (default 1e-9).
template <class Scalar>
struct Comparator {
    double rel_tol = scalar_traits<Scalar>::exact ? 0.0 : 1e-9;

    bool eq(const Scalar& a, const Scalar& b) const {
        if constexpr (scalar_traits<Scalar>::exact) {
            return a == b;
        } else {
            return std::abs(a - b) <= slack(a, b);
        }
    }

    // a <= b up to tolerance
    bool leq(const Scalar& a, const Scalar& b) const {
        if constexpr (scalar_traits<Scalar>::exact) {
            return a <= b;
        } else {
            return a <= b + slack(a, b);
        }
    }

    // a < b beyond tolerance
    bool lt(const Scalar& a, const Scalar& b) const { return !leq(b, a); }

    // positive part of a - b, as a double, for violation reports
    double excess(const Scalar& a, const Scalar& b) const {
        double g = to_double(a) - to_double(b);
        return g > 0.0 ? g : 0.0;
    }

    double gap(const Scalar& a, const Scalar& b) const {
        return std::abs(to_double(a) - to_double(b));
    }

  private:
    double slack(const Scalar& a, const Scalar& b) const {
        double m = std::max({1.0, std::abs(to_double(a)), std::abs(to_double(b))});
        return rel_tol * m;
    }
};

// Exact square root of a nonnegative rational, when one exists. The canonical
// numerator/denominator are coprime, so both must be perfect squares.
inline std::optional<Rational> sqrt_exact(const Rational& x) {
    if (x < 0) return std::nullopt;
    if (x == 0) return Rational(0);
    BigInt num = numerator(x), den = denominator(x);
    BigInt rn = boost::multiprecision::sqrt(num);
    BigInt rd = boost::multiprecision::sqrt(den);
    if (rn * rn != num || rd * rd != den) return std::nullopt;
    return Rational(rn, rd);
}

template <class Scalar>
Scalar scalar_sqrt(const Scalar& x);

template <>
inline Rational scalar_sqrt<Rational>(const Rational& x) {
    auto r = sqrt_exact(x);
    if (!r) {
        fail(ErrorCode::InexactArithmetic,
             "sqrt(" + x.str() +
                 ") is irrational; use float mode or parameters whose product p(1-p)*dt is a "
                 "perfect rational square");
    }
    return *r;
}

template <>
inline double scalar_sqrt<double>(const double& x) {
    require(x >= 0.0, ErrorCode::InexactArithmetic, "sqrt of negative value");
    return std::sqrt(x);
}

// Parses "p/q", integers, and decimal/scientific forms ("1.25", "2e-3")
// into an exact rational. Used for all exact-mode file input.
inline Rational parse_rational(const std::string& text) {
    const std::string err = "cannot parse number '" + text + "'";
    require(!text.empty(), ErrorCode::SpecError, err);
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        try {
            BigInt num(text.substr(0, slash));
            BigInt den(text.substr(slash + 1));
            require(den != 0, ErrorCode::SpecError, "zero denominator in '" + text + "'");
            return Rational(num, den);
        } catch (const std::exception&) {
            fail(ErrorCode::SpecError, err);
        }
    }
    std::size_t pos = 0;
    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') {
        negative = text[pos] == '-';
        ++pos;
    }
    BigInt mantissa = 0;
    std::int64_t frac_digits = 0;
    bool any_digits = false, in_fraction = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c >= '0' && c <= '9') {
            mantissa = mantissa * 10 + (c - '0');
            if (in_fraction) ++frac_digits;
            any_digits = true;
        } else if (c == '.' && !in_fraction) {
            in_fraction = true;
        } else if (c == 'e' || c == 'E') {
            break;
        } else {
            fail(ErrorCode::SpecError, err);
        }
    }
    require(any_digits, ErrorCode::SpecError, err);
    std::int64_t exponent = 0;
    if (pos < text.size()) { // at 'e' / 'E'
        try {
            std::size_t used = 0;
            exponent = std::stoll(text.substr(pos + 1), &used);
            require(pos + 1 + used == text.size(), ErrorCode::SpecError, err);
        } catch (const std::exception&) {
            fail(ErrorCode::SpecError, err);
        }
    }
    exponent -= frac_digits;
    Rational value(mantissa);
    BigInt scale = 1;
    for (std::int64_t i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) scale *= 10;
    if (exponent < 0) {
        value /= Rational(scale);
    } else {
        value *= Rational(scale);
    }
    return negative ? Rational(-value) : value;
}

inline std::string to_string(const Rational& x) { return x.str(); }

// Deterministic uniform draw in [0, n) from a raw 64-bit stream, avoiding
// std::uniform_int_distribution (whose mapping varies across libraries).
template <class Rng>
std::uint64_t rng_below(Rng& rng, std::uint64_t n) {
    // multiply-shift; bias is negligible for the small n used here and,
    // more importantly, the mapping is identical on every platform
    unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
}

} // namespace snell
