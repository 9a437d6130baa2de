#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coact {

// Exact rational, kept unreduced so a consistency score of 5 out of 8
// serializes as "5/8". Comparisons are exact via cross multiplication;
// numerators and denominators stay far below the int64 overflow range
// (counts <= k, denominators <= 1e9 from float rationalization).
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (d <= 0) throw std::invalid_argument("Rational: denominator must be positive");
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

    friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.num * b.den <= b.num * a.den; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }
};

// Parses "n/d" or a plain integer "n".
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(s), 1);
        std::int64_t n = std::stoll(s.substr(0, slash));
        std::int64_t d = std::stoll(s.substr(slash + 1));
        return Rational(n, d);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("parse_rational: cannot parse '" + s + "'");
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("parse_rational: out of range '" + s + "'");
    }
}

// Nearest rational with denominator 1e9; exact for thresholds like 0.5 or
// 0.625 that users may give as plain numbers.
inline Rational rationalize(double x) {
    const std::int64_t den = 1000000000;
    double n = x * static_cast<double>(den);
    std::int64_t num = static_cast<std::int64_t>(n >= 0 ? n + 0.5 : n - 0.5);
    return Rational(num, den);
}

}  // namespace coact
