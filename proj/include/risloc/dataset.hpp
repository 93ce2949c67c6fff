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

// Episode dataset container (all integers/floats little-endian):
//
//   magic      8 bytes  "RISEPDS1"
//   version    u32      1
//   horizon    u32      T
//   n_ris      u32
//   phases     u32      |Theta|
//   format     u8       0 = stacked, 1 = rss
//   count      u64      number of records
//   records, each fixed width:
//     true position      3 x f64
//     observations       T x (f64 re, f64 im)
//     profiles           T x n_ris x u16
//     powers             T x f64 (watts)
//     bits               T x u8 (0, 1, or 255 when the scheme has no bit link)
//     exact feedback     T x f64 (NaN when absent)
//     estimate           3 x f64 (NaN when absent)

#include "risloc/agents.hpp"
#include "risloc/rollout.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace risloc {

struct EpisodeDataset {
    int horizon = 0;
    int n_ris = 0;
    int phase_count = 0;
    ObservationFormat format = ObservationFormat::Stacked;
    std::vector<Episode> episodes;
};

std::string serialize_dataset(const EpisodeDataset& dataset);
EpisodeDataset parse_dataset(const std::string& bytes);

void write_dataset(const std::filesystem::path& path, const EpisodeDataset& dataset);
EpisodeDataset read_dataset(const std::filesystem::path& path);

/// One row per frame: episode,t,x,y,z,re,im,power,bit,profile
/// (profile as a string of phase indices separated by '.').
std::string dataset_to_csv(const EpisodeDataset& dataset);

} // namespace risloc
