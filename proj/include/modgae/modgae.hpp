/*
 * Copyright 2026 The modgae Authors.
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

#pragma once

#include "modgae/clustering.hpp"
#include "modgae/common.hpp"
#include "modgae/datasets.hpp"
#include "modgae/evaluation.hpp"
#include "modgae/graph.hpp"
#include "modgae/hpo.hpp"
#include "modgae/model.hpp"
#include "modgae/objective.hpp"
#include "modgae/prior.hpp"
#include "modgae/protocol.hpp"
#include "modgae/training.hpp"
