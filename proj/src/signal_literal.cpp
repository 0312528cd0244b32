#include "dscm/signal_literal.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "dscm/error.hpp"

namespace dscm {
namespace {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view text) : text_(text) {}

  QuasiPeriodicSignal parse() {
    QuasiPeriodicSignal signal;
    skip_space();
    if (at_end()) fail("empty signal literal");
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
    term(signal, sign);
    while (true) {
      skip_space();
      if (at_end()) break;
      const char op = take();
      if (op != '+' && op != '-') fail(std::string("expected '+' or '-', found '") + op + "'");
      term(signal, op == '-' ? -1.0 : 1.0);
    }
    return signal;
  }

 private:
  void term(QuasiPeriodicSignal& signal, double sign) {
    skip_space();
    if (looking_at("cos")) {
      signal.components.push_back(cosine(sign));
      return;
    }
    const double value = number();
    skip_space();
    if (!at_end() && peek() == '*') {
      take();
      skip_space();
      if (!looking_at("cos")) fail("expected 'cos' after '*'");
      signal.components.push_back(cosine(sign * value));
      return;
    }
    // first constant assigns so that a literal "-0" keeps its sign bit
    signal.offset = seen_offset_ ? signal.offset + sign * value : sign * value;
    seen_offset_ = true;
  }

  CosComponent cosine(double amplitude) {
    pos_ += 3;
    expect('(');
    CosComponent c{amplitude, 1.0, 0.0};
    skip_space();
    if (!at_end() && peek() != 't') {
      double s = 1.0;
      if (peek() == '+' || peek() == '-') s = take() == '-' ? -1.0 : 1.0;
      c.angular_frequency = s * number();
      expect('*');
    }
    expect('t');
    skip_space();
    if (!at_end() && (peek() == '+' || peek() == '-')) {
      const double s = take() == '-' ? -1.0 : 1.0;
      c.phase = s * number();
    }
    expect(')');
    return c;
  }

  double number() {
    skip_space();
    const std::size_t start = pos_;
    bool digits = false;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_, digits = true;
    if (!at_end() && peek() == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_, digits = true;
    }
    if (!digits) fail("expected a number");
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      ++pos_;
      if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
      bool exp_digits = false;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        ++pos_;
        exp_digits = true;
      }
      if (!exp_digits) fail("malformed exponent");
    }
    std::string_view token = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
      fail("bad number '" + std::string(token) + "'");
    }
    return value;
  }

  void expect(char c) {
    skip_space();
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool looking_at(std::string_view word) const { return text_.substr(pos_, word.size()) == word; }
  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char take() { return text_[pos_++]; }

  [[noreturn]] void fail(const std::string& why) const {
    throw ValidationError("signal literal '" + std::string(text_) + "' at position " +
                          std::to_string(pos_) + ": " + why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool seen_offset_ = false;
};

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace

QuasiPeriodicSignal parse_signal(std::string_view text) { return LiteralParser(text).parse(); }

std::string to_literal(const QuasiPeriodicSignal& signal) {
  std::string out;
  const bool show_offset = signal.offset != 0.0 || std::signbit(signal.offset) ||
                           signal.components.empty();
  if (show_offset) out = format_number(signal.offset);
  for (const auto& c : signal.components) {
    const bool negative = std::signbit(c.amplitude);
    if (out.empty()) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    out += format_number(std::abs(c.amplitude));
    out += "*cos(";
    out += format_number(c.angular_frequency);
    out += "*t";
    out += std::signbit(c.phase) ? " - " : " + ";
    out += format_number(std::abs(c.phase));
    out += ")";
  }
  return out;
}

}  // namespace dscm
