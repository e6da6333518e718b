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
 * @file ldc.hpp
 * @brief Umbrella header pulling in the full cross-validated Mahalanobis
 *        distance toolkit: estimation, analytical sampling covariance,
 *        inference, model comparison, simulation, and experiments.
 */

#ifndef LDC_LDC_HPP
#define LDC_LDC_HPP

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/distances.hpp"
#include "ldc/experiments.hpp"
#include "ldc/glm.hpp"
#include "ldc/inference.hpp"
#include "ldc/io.hpp"
#include "ldc/model_eval.hpp"
#include "ldc/prewhiten.hpp"
#include "ldc/rng.hpp"
#include "ldc/simulate.hpp"
#include "ldc/variance.hpp"

#endif  // LDC_LDC_HPP
