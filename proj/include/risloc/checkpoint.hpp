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

// Network checkpoint file:
//
//   risloc-checkpoint 1\n
//   input_dim <n>\n
//   lstm <h_1> ... <h_L>\n                 (bare "lstm" when there is no trunk)
//   head <units>:<activation> ...\n        (one line per head, in order)
//   meta <key> <value>\n                   (zero or more; value runs to end of line)
//   params <count>\n
//   end\n
//   <count> IEEE-754 binary64 values, little-endian, in flat-layout order
//
// Activations are spelled identity | relu | tanh | sigmoid.

#include "risloc/tensor_nn.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace risloc {

struct Checkpoint {
    nn::ArchitectureSpec architecture;
    nn::ParamVector params;
    std::map<std::string, std::string> meta;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Little-endian helpers shared by the binary container formats.
void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);

class ByteReader {
public:
    explicit ByteReader(const std::string& bytes, std::size_t pos = 0) : bytes_(bytes), pos_(pos) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string raw(std::size_t n);
    bool at_end() const { return pos_ == bytes_.size(); }
    std::size_t position() const { return pos_; }

private:
    std::uint64_t little_endian(std::size_t n);

    const std::string& bytes_;
    std::size_t pos_;
};

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

/// Hex FNV-1a digest of a file's bytes.
std::string file_digest(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

} // namespace risloc
