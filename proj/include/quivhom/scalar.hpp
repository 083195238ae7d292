#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace quivhom {

// Exact field element: either an arbitrary-precision rational (modulus == 0)
// or an element of a prime field F_p with p > 3 (modulus == p).
//
// Rationals are kept in lowest terms with positive denominator by
// cpp_rational itself; residues are kept in [0, p).  Mixing elements of
// different fields throws.
class Scalar {
public:
    using Rational = boost::multiprecision::cpp_rational;

    Scalar() : mod_(0), res_(0) {}

    static Scalar rational(Rational q) {
        Scalar s;
        s.q_ = std::move(q);
        return s;
    }
    static Scalar rational(long num, long den = 1) {
        Scalar s;
        s.q_ = Rational(num, den);
        return s;
    }
    static Scalar mod_p(std::uint64_t residue, std::uint64_t p) {
        check_modulus(p);
        Scalar s;
        s.mod_ = p;
        s.res_ = residue % p;
        return s;
    }
    // Integer n in the field described by p (p == 0 means the rationals).
    static Scalar of_int(long long n, std::uint64_t p) {
        if (p == 0) return rational(Rational(n));
        check_modulus(p);
        long long r = n % static_cast<long long>(p);
        if (r < 0) r += static_cast<long long>(p);
        return mod_p(static_cast<std::uint64_t>(r), p);
    }
    static Scalar zero(std::uint64_t p) { return of_int(0, p); }
    static Scalar one(std::uint64_t p) { return of_int(1, p); }

    static void check_modulus(std::uint64_t p) {
        if (p == 2 || p == 3) throw std::invalid_argument("prime field modulus must differ from 2 and 3");
        if (p < 2) throw std::invalid_argument("prime field modulus must be a prime > 3");
        if (p >= (1ull << 31)) throw std::invalid_argument("prime field modulus must fit in 31 bits");
        for (std::uint64_t d = 2; d * d <= p; ++d)
            if (p % d == 0) throw std::invalid_argument("prime field modulus must be prime");
    }

    std::uint64_t modulus() const { return mod_; }
    bool is_zero() const { return mod_ ? res_ == 0 : q_.is_zero(); }
    bool is_one() const { return mod_ ? res_ == 1 : q_ == 1; }

    const Rational& rat() const { return q_; }
    std::uint64_t residue() const { return res_; }

    Scalar operator-() const {
        Scalar s(*this);
        if (mod_) {
            if (s.res_) s.res_ = mod_ - s.res_;
        } else {
            s.q_ = -s.q_;
        }
        return s;
    }

    Scalar& operator+=(const Scalar& o) {
        match(o);
        if (mod_) {
            res_ += o.res_;
            if (res_ >= mod_) res_ -= mod_;
        } else {
            q_ += o.q_;
        }
        return *this;
    }
    Scalar& operator-=(const Scalar& o) { return *this += -o; }
    Scalar& operator*=(const Scalar& o) {
        match(o);
        if (mod_) {
            res_ = (res_ * o.res_) % mod_;
        } else {
            q_ *= o.q_;
        }
        return *this;
    }
    Scalar& operator/=(const Scalar& o) { return *this *= o.inverse(); }

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

    Scalar inverse() const {
        if (is_zero()) throw std::domain_error("division by zero");
        if (!mod_) {
            Scalar s;
            s.q_ = 1 / q_;
            return s;
        }
        // extended Euclid on (res_, mod_)
        long long a = static_cast<long long>(res_), m = static_cast<long long>(mod_);
        long long x0 = 0, x1 = 1, b = m;
        while (a > 1) {
            long long q = a / b;
            long long t = b;
            b = a - q * b;
            a = t;
            t = x0;
            x0 = x1 - q * x0;
            x1 = t;
        }
        if (x1 < 0) x1 += m;
        return mod_p(static_cast<std::uint64_t>(x1), mod_);
    }

    bool operator==(const Scalar& o) const {
        if (mod_ != o.mod_) return false;
        return mod_ ? res_ == o.res_ : q_ == o.q_;
    }
    bool operator!=(const Scalar& o) const { return !(*this == o); }

    // Deterministic total order (used only for canonical container keys).
    bool operator<(const Scalar& o) const {
        if (mod_ != o.mod_) return mod_ < o.mod_;
        return mod_ ? res_ < o.res_ : q_ < o.q_;
    }

    // "n" or "n/d" for rationals, the residue for prime fields.
    std::string str() const {
        if (mod_) return std::to_string(res_);
        std::string s = numerator(q_).str();
        if (denominator(q_) != 1) s += "/" + denominator(q_).str();
        return s;
    }

    // Parses the output of str() in the field given by p.
    static Scalar parse(const std::string& text, std::uint64_t p) {
        if (text.empty()) throw std::invalid_argument("empty scalar literal");
        if (p != 0) {
            std::uint64_t v = 0;
            std::size_t i = 0;
            bool neg = false;
            if (text[0] == '-') {
                neg = true;
                i = 1;
            }
            if (i == text.size()) throw std::invalid_argument("bad scalar literal: " + text);
            for (; i < text.size(); ++i) {
                if (text[i] < '0' || text[i] > '9') throw std::invalid_argument("bad scalar literal: " + text);
                v = (v * 10 + static_cast<std::uint64_t>(text[i] - '0')) % p;
            }
            if (neg && v) v = p - v;
            return mod_p(v, p);
        }
        auto slash = text.find('/');
        try {
            using boost::multiprecision::cpp_int;
            if (slash == std::string::npos) return rational(Rational(cpp_int(text)));
            cpp_int num(text.substr(0, slash)), den(text.substr(slash + 1));
            if (den <= 0) throw std::invalid_argument("nonpositive denominator");
            return rational(Rational(num, den));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad scalar literal: " + text);
        }
    }

private:
    void match(const Scalar& o) const {
        if (mod_ != o.mod_) throw std::invalid_argument("mixed scalar fields");
    }

    Rational q_;
    std::uint64_t mod_;
    std::uint64_t res_;
};

}  // namespace quivhom
