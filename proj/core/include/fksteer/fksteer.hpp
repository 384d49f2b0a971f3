// Copyright 2026 The fksteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FKSTEER_FKSTEER_HPP
#define FKSTEER_FKSTEER_HPP

#include "fksteer/diffusion.hpp"
#include "fksteer/engine.hpp"
#include "fksteer/error.hpp"
#include "fksteer/gaussian_mixture.hpp"
#include "fksteer/masked_diffusion.hpp"
#include "fksteer/metrics.hpp"
#include "fksteer/numeric.hpp"
#include "fksteer/oracle.hpp"
#include "fksteer/potentials.hpp"
#include "fksteer/proposals.hpp"
#include "fksteer/random.hpp"
#include "fksteer/rewards.hpp"
#include "fksteer/sequence_model.hpp"
#include "fksteer/state.hpp"

#endif
