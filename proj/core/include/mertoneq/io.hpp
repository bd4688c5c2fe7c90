#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mertoneq/compare.hpp"
#include "mertoneq/curve.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/policy.hpp"

namespace mertoneq {

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Comma-separated rows with a header; every row must have as many fields as the header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& field(double v);
  CsvWriter& field(std::size_t v);
  CsvWriter& field(std::string_view v);
  void end_row();

 private:
  void separator();

  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

// t,value at every grid node.
void write_curve_csv(std::ostream& out, const Curve& c, const TimeGrid& grid);

// t,x,c_hat,u1,...,ud on every grid node and every x.
void write_policy_csv(std::ostream& out, const Policy& p, const TimeGrid& grid, std::span<const double> xs);

// t,family_a,family_b,consumption_gap
void write_gaps_csv(std::ostream& out, std::span<const GapRow> rows);

}  // namespace mertoneq
