#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdm {

// Column vectors and row-major matrices; rows index samples / token positions.
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = MatX<double>;
using Vecd = VecX<double>;
using Matf = MatX<float>;
using Vecf = VecX<float>;

class TdmError : public std::runtime_error {
 public:
  explicit TdmError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw TdmError(msg);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

// Formats a double with enough digits to round-trip, so file outputs are
// byte-stable across runs.
std::string format_full(double x);

void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);
void write_bytes_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// Worker count for data-parallel loops; honors the TDM_THREADS override.
int worker_count();

// Runs fn(i) for i in [0, n) on worker_count() threads. Work is handed out in
// index order; callers that reduce must do so by index to stay deterministic.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace tdm
