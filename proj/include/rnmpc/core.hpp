// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RNMPC_CORE_HPP_
#define RNMPC_CORE_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rnmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered set of constraint row indices (0-based internally, 1-based in files and output).
using IndexSet = std::vector<int>;

/// Thrown when a caller breaks a documented precondition (dimension mismatch, bad argument).
class ContractViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool condition, std::string_view message) {
  if (!condition) throw ContractViolation(std::string(message));
}

inline void require_dim(Eigen::Index actual, Eigen::Index expected, std::string_view what) {
  if (actual != expected) {
    std::ostringstream os;
    os << what << ": expected dimension " << expected << ", got " << actual;
    throw ContractViolation(os.str());
  }
}

}  // namespace detail

/// 64-bit FNV-1a. Used for model and store-entry fingerprints, not for security.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

/// Converts 0-based indices to the 1-based convention used in user-facing output.
inline std::vector<int> one_based(const IndexSet& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(i + 1);
  return out;
}

inline std::string format_index_set(const IndexSet& indices) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (k) os << ',';
    os << indices[k] + 1;
  }
  os << '}';
  return os.str();
}

}  // namespace rnmpc

#endif  // RNMPC_CORE_HPP_
