/*
 * Copyright 2026 The cshap Authors.
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

// Umbrella header.

#pragma once

#include "cshap/backprop.hpp"
#include "cshap/deepcshap.hpp"
#include "cshap/error.hpp"
#include "cshap/explain.hpp"
#include "cshap/gradient_explainers.hpp"
#include "cshap/harness/checks.hpp"
#include "cshap/harness/evaluation.hpp"
#include "cshap/harness/toy_models.hpp"
#include "cshap/harness/toy_tasks.hpp"
#include "cshap/layers.hpp"
#include "cshap/maxcshap.hpp"
#include "cshap/model.hpp"
#include "cshap/model_io.hpp"
#include "cshap/oracle.hpp"
#include "cshap/tensor.hpp"
