/**
 * Copyright 2026 the ldc authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file common.hpp
 * @brief Shared aliases and the error taxonomy used across the library.
 */

#ifndef LDC_COMMON_HPP
#define LDC_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ldc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* kVersion = "1.0.0";

/** Base class for all library errors. */
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Inputs have inconsistent or unusable shapes/sizes. */
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/** A numerical operation failed (singular matrix, non-PSD input, ...). */
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/** A configuration value is missing, malformed, or out of range. */
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/** A file could not be read, written, or parsed at the byte level. */
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/** Throws DimensionError with @p msg unless @p cond holds. */
inline void require_dims(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

/** Throws NumericalError with @p msg unless @p cond holds. */
inline void require_numeric(bool cond, const std::string& msg) {
  if (!cond) throw NumericalError(msg);
}

/** Throws ConfigError with @p msg unless @p cond holds. */
inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace ldc

#endif  // LDC_COMMON_HPP
