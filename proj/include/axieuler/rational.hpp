#pragma once

#include "axieuler/core.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace axieuler {

/// Exact fraction num/den with den > 0 and gcd(num, den) = 1.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (d == 0) throw ValidationError("Rational: zero denominator");
        normalise();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return double(num_) / double(den_); }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// "p/q", an integer or a finite decimal such as "0.4".
    static Rational parse(const std::string& s) {
        const auto bad = [&] { return ValidationError("Rational: cannot parse '" + s + "'"); };
        if (s.empty()) throw bad();
        const auto slash = s.find('/');
        try {
            if (slash != std::string::npos) {
                std::size_t a = 0, b = 0;
                const std::int64_t n = std::stoll(s.substr(0, slash), &a);
                const std::int64_t d = std::stoll(s.substr(slash + 1), &b);
                if (a != slash || b != s.size() - slash - 1) throw bad();
                return Rational(n, d);
            }
            const auto dot = s.find('.');
            if (dot == std::string::npos) {
                std::size_t a = 0;
                const std::int64_t n = std::stoll(s, &a);
                if (a != s.size()) throw bad();
                return Rational(n);
            }
            const std::string frac = s.substr(dot + 1);
            if (frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string::npos) throw bad();
            const std::string head = s.substr(0, dot);
            const bool neg = !head.empty() && head[0] == '-';
            std::int64_t whole = 0;
            if (!head.empty() && head != "-" && head != "+") {
                std::size_t a = 0;
                whole = std::stoll(head, &a);
                if (a != head.size()) throw bad();
            }
            std::int64_t scale = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
            const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
            return Rational(whole * scale + (neg ? -f : f), scale);
        } catch (const std::logic_error&) {
            throw bad();
        }
    }

    /// Smallest-denominator fraction within `tol` of x (denominator <= max_den).
    static Rational approximate(double x, double tol = 1e-12, std::int64_t max_den = 1000000) {
        if (!std::isfinite(x)) throw ValidationError("Rational: non-finite value");
        std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
        double v = x;
        for (int it = 0; it < 64; ++it) {
            const double fl = std::floor(v);
            const auto a = static_cast<std::int64_t>(fl);
            const std::int64_t h2 = a * h1 + h0, k2 = a * k1 + k0;
            if (k2 > max_den) break;
            h0 = h1; h1 = h2; k0 = k1; k1 = k2;
            if (std::abs(double(h1) / double(k1) - x) <= tol) return Rational(h1, k1);
            if (v - fl == 0.0) break;
            v = 1.0 / (v - fl);
        }
        if (k1 != 0 && std::abs(double(h1) / double(k1) - x) <= tol) return Rational(h1, k1);
        std::ostringstream os;
        os << "Rational: " << x << " has no fraction with denominator <= " << max_den;
        throw ValidationError(os.str());
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const std::int64_t g = std::gcd(a.den_, b.den_);
        return Rational(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
    }
    friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        const std::int64_t g1 = std::gcd(a.num_, b.den_), g2 = std::gcd(b.num_, a.den_);
        return Rational((a.num_ / (g1 ? g1 : 1)) * (b.num_ / (g2 ? g2 : 1)),
                        (a.den_ / (g2 ? g2 : 1)) * (b.den_ / (g1 ? g1 : 1)));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw ValidationError("Rational: division by zero");
        return a * Rational(b.den_, b.num_);
    }
    friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    void normalise() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline Rational abs(const Rational& r) { return r < Rational(0) ? -r : r; }

} // namespace axieuler
