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

// Comparison schemes: RSS fingerprinting, a feed-forward regressor on random
// sensing, the single-agent exact-power variant and the uniform-power
// reference policy.

#include "risloc/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace risloc {

// ---- fingerprinting --------------------------------------------------------

/// 1 m x 1 m blocks tiling the x-y extent of the UE region, at the region's z.
struct FingerprintGrid {
    double x_min = 0.0;
    double y_min = 0.0;
    double z = 0.0;
    int nx = 1;
    int ny = 1;

    static FingerprintGrid for_region(const UeRegion& region);
    int block_count() const { return nx * ny; }
    /// Block index = iy * nx + ix.
    Position center(int block) const;
};

// Binary layout (little-endian):
//   "RISFPDB1" | version u32 | T u32 | n_ris u32 | |Theta| u32
//   grid: x_min f64, y_min f64, z f64, nx u32, ny u32
//   sequence hash u64 | T profiles of n_ris u16
//   count u64 | count records of (block u32, T f64)
struct FingerprintDB {
    FingerprintGrid grid;
    int horizon = 1;
    int phase_count = 2;
    std::vector<RISProfile> sequence;
    std::uint64_t sequence_hash = 0;
    std::vector<std::uint32_t> blocks; // block index of every stored fingerprint
    nn::Matrix fingerprints;           // T x count

    std::size_t size() const { return blocks.size(); }
};

std::uint64_t profile_sequence_hash(const std::vector<RISProfile>& sequence);

/// One random, non-adaptive profile per frame, drawn once.
std::vector<RISProfile> fixed_profile_sequence(const Scenario& scenario, int horizon, Rng& rng);

/// RSS fingerprint |y(1)|^2 ... |y(T)|^2, scaled by 1/noise power.
nn::Vector rss_fingerprint(const Episode& episode, const AgentSetup& setup);

FingerprintDB build_fingerprint_db(const Experiment& exp, const std::vector<RISProfile>& sequence,
                                   int samples_per_block, bool uniform_power, bool average_samples,
                                   std::uint64_t seed);

/// Mean of the k nearest stored fingerprints' block centers.
Position fingerprint_localize(const FingerprintDB& db, const nn::Vector& query, int k);

std::string serialize_fingerprint_db(const FingerprintDB& db);
FingerprintDB parse_fingerprint_db(const std::string& bytes);
void write_fingerprint_db(const std::filesystem::path& path, const FingerprintDB& db);
FingerprintDB read_fingerprint_db(const std::filesystem::path& path);

/// Query episodes share the DB's profile sequence (checked by hash).
EvaluationResult evaluate_fingerprint(const Experiment& exp, const FingerprintDB& db, std::size_t episodes,
                                      std::uint64_t seed, std::vector<Position> positions = {});

struct FingerprintRun {
    FingerprintDB db;
    EvaluationResult result;
};

FingerprintRun fingerprint_baseline(const Experiment& exp);

// ---- supervised feed-forward ----------------------------------------------

struct SupervisedBaseline {
    EstimatorTraining model;
    EvaluationResult result; // held-out, random profiles, uniform power
};

SupervisedBaseline train_supervised_baseline(const Experiment& exp);

EvaluationResult evaluate_supervised(const Experiment& exp, const nn::ParamVector& params, std::size_t episodes,
                                     std::uint64_t seed);

// ---- single-agent exact-power variant ---------------------------------------

struct SingleAgentRun {
    nn::ParamVector policy;
    cosyne::EvolutionResult evolution;
    EstimatorTraining estimator;
};

SingleAgentRun single_agent_variant(const Experiment& exp, const nn::ParamVector& initial_estimator,
                                    const cosyne::GenerationCallback& on_generation = {});

EvaluationResult evaluate_single_agent(const Experiment& exp, const nn::ParamVector& policy,
                                       const nn::ParamVector& estimator, DecodeMode mode, std::size_t episodes,
                                       std::uint64_t seed);

// ---- uniform-power reference -----------------------------------------------

/// Random profiles with P(t) ~ U[0, P_max], read out by `estimator`.
EvaluationResult uniform_power_reference(const Experiment& exp, const nn::ParamVector& estimator,
                                         std::size_t episodes, std::uint64_t seed);

} // namespace risloc
