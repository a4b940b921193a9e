#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "homogamy/decomp.hpp"
#include "homogamy/gnm.hpp"
#include "homogamy/liulu.hpp"
#include "homogamy/nm.hpp"

namespace homogamy::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

/// Rounds to nine decimals so serialized reports are stable across platforms.
double fixed9(double v);
/// NaN and infinities become null.
Json number(double v);

/// FNV-1a 64-bit digest of the bytes, as 16 hex digits.
std::string fnv1a64(const std::string& bytes);
std::string file_checksum(const std::string& path);

Json matrix(const Matrix& m);
Json table(const ContingencyTable& t);
Json liu_lu(const LiuLuMatrix& m);
Json nm_result(const NmResult& r);
Json allocation(const AllocationPoint& a, const RaceEduLayout& layout);
Json moment_interval(const MomentInterval& mi, const RaceEduLayout& layout, Objective objective);
Json interval(const Interval& i);
Json decomposition(const DecompositionReport& r);

struct Input {
  std::string name;
  std::string path;
};

/// {schema_version, command, inputs{name: {path, checksum}}, result, diagnostics}
Json envelope(const std::string& command, const std::vector<Input>& inputs, Json result,
              const std::vector<std::string>& diagnostics);
Json error_envelope(const std::string& command, const std::string& category, const std::string& message, Json detail);

std::string dump(const Json& j);

}  // namespace homogamy::report
