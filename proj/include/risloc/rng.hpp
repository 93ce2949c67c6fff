// SPDX-License-Identifier: Apache-2.0
//
// risloc: RIS-assisted user localization with 1-bit uplink power control
// Copyright (C) 2026 The risloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <random>

namespace risloc {

using Rng = std::mt19937_64;

// Stage identifiers for counter-based seed derivation. Values are part of
// the reproducibility contract; do not renumber.
enum class SeedStage : std::uint64_t {
    Stage1Data = 1,
    Stage1Train = 2,
    Stage2Evolve = 3,
    Stage3Data = 4,
    Stage3Train = 5,
    Evaluation = 6,
    Supervised = 7,
    Fingerprint = 8,
    SingleAgent = 9,
    Uniform = 10,
    Sweep = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from (master, stage, task). Pure
/// function of its arguments, so task scheduling order never changes results.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t task);

inline std::uint64_t derive_seed(std::uint64_t master, SeedStage stage, std::uint64_t task)
{
    return derive_seed(master, static_cast<std::uint64_t>(stage), task);
}

/// 64-bit FNV-1a over raw bytes; used for config and artifact fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace risloc
