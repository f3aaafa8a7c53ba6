// Copyright 2026 The CaFM Delivery Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "cafm/architecture.hpp"
#include "cafm/bundle.hpp"
#include "cafm/codec.hpp"
#include "cafm/common.hpp"
#include "cafm/evaluation.hpp"
#include "cafm/feature_analysis.hpp"
#include "cafm/image_io.hpp"
#include "cafm/media.hpp"
#include "cafm/metrics.hpp"
#include "cafm/modulation.hpp"
#include "cafm/network.hpp"
#include "cafm/ops.hpp"
#include "cafm/process.hpp"
#include "cafm/synthetic.hpp"
#include "cafm/tensor.hpp"
#include "cafm/trainer.hpp"
