#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "homogamy/csv_io.hpp"
#include "homogamy/gnm.hpp"
#include "homogamy/tables.hpp"

namespace homogamy::testing {

using Rng = std::mt19937_64;

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Integer cells drawn independently from [lo, hi].
inline Matrix random_int_matrix(Rng& rng, std::size_t rows, std::size_t cols, std::int64_t lo, std::int64_t hi) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<double>(uniform_int(rng, lo, hi));
  return m;
}

/// total couples spread over the cells with random cell weights.
inline Matrix multinomial_matrix(Rng& rng, std::size_t rows, std::size_t cols, std::int64_t total,
                                 double diagonal_boost = 0.0) {
  std::vector<double> w(rows * cols);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = uniform_real(rng, 0.05, 1.0);
    if (i / cols == i % cols) w[i] += diagonal_boost;
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::int64_t k = 0; k < total; ++k) {
    const std::size_t i = pick(rng);
    m(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) += 1.0;
  }
  return m;
}

/// Nonnegative integer vector with the given sum.
inline Vector random_composition(Rng& rng, std::size_t len, std::int64_t total) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(len));
  for (std::int64_t k = 0; k < total; ++k) v(static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<std::int64_t>(len) - 1))) += 1.0;
  return v;
}

/// Random contiguous grouping of n categories into between 1 and n groups.
inline Partition random_contiguous_partition(Rng& rng, std::size_t n) {
  std::vector<std::size_t> sizes;
  std::size_t left = n;
  while (left > 0) {
    const auto s = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(left)));
    sizes.push_back(s);
    left -= s;
  }
  return partition_from_sizes(sizes);
}

/// Small race-by-education instance: two races, two education levels each
/// side, every table holding at most max_total couples. Preference tables
/// have every cell at least one, so no block source has a degenerate cut;
/// availability tables may contain zeros.
inline GnmProblem small_gnm_instance(Rng& rng, std::int64_t max_total = 30) {
  RaceEduLayout layout;
  layout.male_edu = {"L", "H"};
  layout.female_edu = {"L", "H"};
  auto preferences = [&] {
    const std::int64_t total = uniform_int(rng, 16, max_total);
    return layout.make_table(Matrix::Ones(4, 4) + multinomial_matrix(rng, 4, 4, total - 16, 1.5));
  };
  auto availability = [&] { return layout.make_table(multinomial_matrix(rng, 4, 4, uniform_int(rng, 12, max_total), 1.5)); };
  GnmProblem p{preferences(), availability(), preferences(), layout};
  return p;
}

/// Like small_gnm_instance but with no floor on preference cells, so block
/// sources are often degenerate and allocations often have negative cells.
inline GnmProblem rough_gnm_instance(Rng& rng, std::int64_t max_total = 30) {
  RaceEduLayout layout;
  layout.male_edu = {"L", "H"};
  layout.female_edu = {"L", "H"};
  auto draw = [&] { return layout.make_table(multinomial_matrix(rng, 4, 4, uniform_int(rng, 12, max_total), 1.5)); };
  GnmProblem p{draw(), draw(), draw(), layout};
  return p;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("homogamy-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const ContingencyTable& t, const RaceEduLayout& layout) const {
    const std::string path = file(name);
    std::ofstream out(path, std::ios::binary);
    write_table_csv(out, t, layout);
    return path;
  }

  std::string write_text(const std::string& name, const std::string& text) const {
    const std::string path = file(name);
    std::ofstream(path, std::ios::binary) << text;
    return path;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace homogamy::testing
