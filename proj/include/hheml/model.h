/*
 * Copyright 2026 The hheml Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Integer linear model shared by the inference and HHE evaluation code.

#ifndef HHEML_MODEL_H_
#define HHEML_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hheml {

inline constexpr int64_t kParamMin = -2047;
inline constexpr int64_t kParamMax = 2048;

struct ModelParams {
  size_t n_out = 1;
  size_t dim = 0;
  std::vector<int64_t> w;  // row-major n_out x dim
  std::vector<int64_t> b;  // n_out

  int64_t weight(size_t row, size_t col) const { return w[row * dim + col]; }
  bool operator==(const ModelParams&) const = default;
};

}  // namespace hheml

#endif  // HHEML_MODEL_H_
