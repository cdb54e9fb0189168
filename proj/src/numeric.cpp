#include "causal_ident/numeric.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string>

namespace causal_ident {

const char* to_string(Arithmetic mode) {
  return mode == Arithmetic::Float ? "float" : "rational";
}

Arithmetic parse_arithmetic(std::string_view text) {
  if (text == "float") return Arithmetic::Float;
  if (text == "rational") return Arithmetic::Rational;
  throw std::invalid_argument("unknown arithmetic mode '" + std::string(text) + "'");
}

namespace {

Rational parse_decimal(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  long exponent = 0;
  bool seen_digit = false;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    digits.push_back(text[i]);
    seen_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      digits.push_back(text[i]);
      --exponent;
      seen_digit = true;
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    long e = 0;
    const char* begin = text.data() + i;
    const char* end = text.data() + text.size();
    if (begin != end && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, e);
    if (ec != std::errc() || ptr != end) {
      throw std::invalid_argument("malformed exponent in '" + std::string(text) + "'");
    }
    exponent += e;
    i = text.size();
  }
  if (i != text.size()) throw std::invalid_argument("malformed number '" + std::string(text) + "'");

  mpz_class num(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational r = exponent < 0 ? Rational(num, scale) : Rational(num * scale, 1);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (sgn(den) == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    Rational r = num / den;
    r.canonicalize();
    return r;
  }
  return parse_decimal(text);
}

Rational rational_from_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::invalid_argument("cannot format double");
  return parse_decimal(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string rational_to_string(const Rational& value) {
  Rational r = value;
  r.canonicalize();
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

}  // namespace causal_ident
