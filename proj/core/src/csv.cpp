#include "profmon/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "profmon/error.hpp"

namespace profmon {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) {
      return cells;
    }
    start = comma + 1;
  }
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) {
    return false;
  }
  if (cell.front() == '+') {
    cell.remove_prefix(1);
  }
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

std::vector<ProfileSample> read_profiles_csv(std::istream& in) {
  std::vector<ProfileSample> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split(line);
    std::vector<double> values(cells.size());
    std::size_t bad_column = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        bad_column = c + 1;
        break;
      }
    }
    if (bad_column != 0) {
      if (first_content) {
        // header row
        first_content = false;
        width = cells.size();
        continue;
      }
      throw Error(ErrorCode::Parse, "csv row " + std::to_string(line_no) + ", column " +
                                        std::to_string(bad_column) + ": cannot parse '" +
                                        std::string(cells[bad_column - 1]) + "' as a number");
    }
    first_content = false;
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw Error(ErrorCode::DimensionMismatch,
                  "csv row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " columns, found " + std::to_string(cells.size()));
    }
    ProfileSample y;
    y.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                 static_cast<Eigen::Index>(values.size()));
    y.time_index = static_cast<std::int64_t>(rows.size()) + 1;
    rows.push_back(std::move(y));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyInput, "csv: no data rows");
  }
  return rows;
}

std::vector<ProfileSample> read_profiles_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  try {
    return read_profiles_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_profiles_csv(std::ostream& out, std::span<const ProfileSample> profiles, bool header) {
  if (profiles.empty()) {
    return;
  }
  const auto n = profiles.front().values.size();
  if (header) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out << (j ? "," : "") << "x" << (j + 1);
    }
    out << '\n';
  }
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& y : profiles) {
    for (Eigen::Index j = 0; j < y.values.size(); ++j) {
      out << (j ? "," : "") << y.values(j);
    }
    out << '\n';
  }
}

void write_profiles_csv(const std::filesystem::path& path,
                        std::span<const ProfileSample> profiles, bool header) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  write_profiles_csv(out, profiles, header);
}

}  // namespace profmon
