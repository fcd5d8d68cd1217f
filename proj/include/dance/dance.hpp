/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Umbrella header: the full library in one include.

#pragma once

#include "dance/adam.hpp"
#include "dance/config.hpp"
#include "dance/container.hpp"
#include "dance/dan.hpp"
#include "dance/data.hpp"
#include "dance/dec.hpp"
#include "dance/error.hpp"
#include "dance/kmeans.hpp"
#include "dance/metrics.hpp"
#include "dance/net.hpp"
#include "dance/pipeline.hpp"
#include "dance/random.hpp"
#include "dance/rim.hpp"
#include "dance/tape.hpp"
#include "dance/tensor.hpp"
