#ifndef TSAFEM_DYADIC_HPP
#define TSAFEM_DYADIC_HPP

#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsafem {

/// Exact dyadic rational numerator / 2^exponent, kept in lowest terms
/// (numerator odd, or exponent zero).
class Dyadic {
public:
    constexpr Dyadic() = default;
    constexpr Dyadic(std::int64_t integer) : num_(integer), exp_(0) {}  // NOLINT: implicit on purpose
    constexpr Dyadic(std::int64_t numerator, int exponent) : num_(numerator), exp_(exponent)
    {
        if (exponent < 0)
            throw std::invalid_argument("Dyadic: negative exponent");
        normalize();
    }

    [[nodiscard]] constexpr std::int64_t numerator() const { return num_; }
    [[nodiscard]] constexpr int exponent() const { return exp_; }
    [[nodiscard]] double to_double() const { return std::ldexp(static_cast<double>(num_), -exp_); }
    [[nodiscard]] constexpr bool is_integer() const { return exp_ == 0; }

    /// Largest integer not above the value.
    [[nodiscard]] constexpr std::int64_t floor() const { return num_ >> exp_; }
    [[nodiscard]] constexpr std::int64_t ceil() const { return -((-num_) >> exp_); }

    constexpr Dyadic operator-() const { return {-num_, exp_, raw_tag{}}; }

    friend constexpr Dyadic operator+(const Dyadic& a, const Dyadic& b)
    {
        const int e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
        return {(a.num_ << (e - a.exp_)) + (b.num_ << (e - b.exp_)), e};
    }
    friend constexpr Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
    friend constexpr Dyadic operator*(const Dyadic& a, const Dyadic& b)
    {
        return {a.num_ * b.num_, a.exp_ + b.exp_};
    }
    constexpr Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
    constexpr Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }

    /// Exact multiplication by 2^-k.
    [[nodiscard]] constexpr Dyadic halved(int k = 1) const { return {num_, exp_ + k}; }

    [[nodiscard]] static constexpr Dyadic midpoint(const Dyadic& a, const Dyadic& b) { return (a + b).halved(); }

    [[nodiscard]] constexpr Dyadic abs() const { return num_ < 0 ? -*this : *this; }

    friend constexpr std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b)
    {
        const int e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
        return (a.num_ << (e - a.exp_)) <=> (b.num_ << (e - b.exp_));
    }
    friend constexpr bool operator==(const Dyadic&, const Dyadic&) = default;

    /// Text form "num/2^e"; integers are written as "num/2^0".
    [[nodiscard]] std::string str() const { return std::to_string(num_) + "/2^" + std::to_string(exp_); }

    static Dyadic parse(std::string_view s)
    {
        const auto slash = s.find("/2^");
        try {
            if (slash == std::string_view::npos)
                return Dyadic(std::stoll(std::string(s)));
            const auto n = std::stoll(std::string(s.substr(0, slash)));
            const auto e = std::stoi(std::string(s.substr(slash + 3)));
            return {n, e};
        } catch (const std::logic_error&) {
            throw std::invalid_argument("Dyadic: cannot parse '" + std::string(s) + "'");
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const Dyadic& d)
    {
        if (d.exp_ == 0)
            return os << d.num_;
        return os << d.to_double();
    }

private:
    struct raw_tag {};
    constexpr Dyadic(std::int64_t n, int e, raw_tag) : num_(n), exp_(e) {}

    constexpr void normalize()
    {
        if (num_ == 0) {
            exp_ = 0;
            return;
        }
        const auto mag = static_cast<std::uint64_t>(num_ < 0 ? -num_ : num_);
        const int tz = std::countr_zero(mag);
        const int shift = tz < exp_ ? tz : exp_;
        num_ >>= shift;
        exp_ -= shift;
    }

    std::int64_t num_ = 0;
    int exp_ = 0;
};

}  // namespace tsafem

template <>
struct std::hash<tsafem::Dyadic> {
    std::size_t operator()(const tsafem::Dyadic& d) const noexcept
    {
        return std::hash<std::int64_t>{}(d.numerator()) ^ (static_cast<std::size_t>(d.exponent()) * 0x9e3779b97f4a7c15ULL);
    }
};

#endif  // TSAFEM_DYADIC_HPP
