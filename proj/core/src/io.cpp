#include "mertoneq/io.hpp"

#include <array>
#include <charconv>

#include "mertoneq/errors.hpp"

namespace mertoneq {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
  if (header.empty()) throw ValidationError("csv header must not be empty");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter::~CsvWriter() { out_.flush(); }

void CsvWriter::separator() {
  if (filled_ >= columns_) throw ValidationError("csv row has more fields than the header");
  if (filled_ > 0) out_ << ',';
  ++filled_;
}

CsvWriter& CsvWriter::field(double v) {
  separator();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(std::size_t v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw ValidationError("csv row has fewer fields than the header");
  out_ << '\n';
  filled_ = 0;
}

void write_curve_csv(std::ostream& out, const Curve& c, const TimeGrid& grid) {
  CsvWriter w(out, {"t", "value"});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    w.field(t).field(c(t)).end_row();
  }
}

void write_policy_csv(std::ostream& out, const Policy& p, const TimeGrid& grid, std::span<const double> xs) {
  std::vector<std::string> header{"t", "x", "c_hat"};
  for (std::size_t i = 0; i < p.dimension(); ++i) header.push_back("u" + std::to_string(i + 1));
  CsvWriter w(out, std::move(header));
  std::vector<double> u(p.dimension());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    for (double x : xs) {
      p.investment_into(t, x, u);
      w.field(t).field(x).field(p.consumption(t, x));
      for (double v : u) w.field(v);
      w.end_row();
    }
  }
}

void write_gaps_csv(std::ostream& out, std::span<const GapRow> rows) {
  CsvWriter w(out, {"t", "family_a", "family_b", "consumption_gap"});
  for (const auto& r : rows) {
    w.field(r.t).field(family_name(r.a)).field(family_name(r.b)).field(r.consumption_gap).end_row();
  }
}

}  // namespace mertoneq
