#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "profmon/gaussian.hpp"

namespace profmon {

/// Reads one profile per row, n numeric columns, optional header row.
/// Rows get time indices 1..rows. Throws Parse with the offending row and
/// column, DimensionMismatch for ragged rows, EmptyInput when no data row
/// exists.
std::vector<ProfileSample> read_profiles_csv(std::istream& in);
std::vector<ProfileSample> read_profiles_csv(const std::filesystem::path& path);

void write_profiles_csv(std::ostream& out, std::span<const ProfileSample> profiles,
                        bool header = true);
void write_profiles_csv(const std::filesystem::path& path,
                        std::span<const ProfileSample> profiles, bool header = true);

}  // namespace profmon
