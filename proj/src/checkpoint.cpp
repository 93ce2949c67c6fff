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

#include "risloc/checkpoint.hpp"

#include "risloc/rng.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace risloc {

namespace {

constexpr const char* kMagic = "risloc-checkpoint 1";

std::string format_architecture(const nn::ArchitectureSpec& spec)
{
    std::ostringstream os;
    os << "input_dim " << spec.input_dim << '\n' << "lstm";
    for (int h : spec.lstm_hidden)
        os << ' ' << h;
    os << '\n';
    for (const auto& head : spec.heads) {
        os << "head";
        for (const auto& layer : head.layers)
            os << ' ' << layer.units << ':' << nn::to_string(layer.activation);
        os << '\n';
    }
    return os.str();
}

} // namespace

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v)
{
    for (int i = 0; i < 2; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t ByteReader::little_endian(std::size_t n)
{
    if (pos_ + n > bytes_.size())
        throw std::runtime_error("truncated binary data");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(little_endian(1)); }
std::uint16_t ByteReader::u16() { return static_cast<std::uint16_t>(little_endian(2)); }
std::uint32_t ByteReader::u32() { return static_cast<std::uint32_t>(little_endian(4)); }
std::uint64_t ByteReader::u64() { return little_endian(8); }
double ByteReader::f64() { return std::bit_cast<double>(little_endian(8)); }

std::string ByteReader::raw(std::size_t n)
{
    if (pos_ + n > bytes_.size())
        throw std::runtime_error("truncated binary data");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::string serialize_checkpoint(const Checkpoint& checkpoint)
{
    checkpoint.architecture.validate();
    if (static_cast<std::size_t>(checkpoint.params.size()) != checkpoint.architecture.parameter_count())
        throw std::invalid_argument("checkpoint parameters do not match architecture");
    std::string out = std::string(kMagic) + '\n' + format_architecture(checkpoint.architecture);
    for (const auto& [key, value] : checkpoint.meta) {
        if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos)
            throw std::invalid_argument("checkpoint meta entries must be single-line, key without spaces");
        out += "meta " + key + ' ' + value + '\n';
    }
    out += "params " + std::to_string(checkpoint.params.size()) + "\nend\n";
    for (Eigen::Index i = 0; i < checkpoint.params.size(); ++i)
        put_f64(out, checkpoint.params[i]);
    return out;
}

Checkpoint parse_checkpoint(const std::string& bytes)
{
    Checkpoint cp;
    std::size_t pos = 0;
    auto next_line = [&]() {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string::npos)
            throw std::runtime_error("checkpoint header is truncated");
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    if (next_line() != kMagic)
        throw std::runtime_error("not a risloc checkpoint");
    std::size_t count = 0;
    bool have_count = false;
    for (std::string line = next_line(); line != "end"; line = next_line()) {
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "input_dim") {
            is >> cp.architecture.input_dim;
        } else if (key == "lstm") {
            for (int h; is >> h;)
                cp.architecture.lstm_hidden.push_back(h);
        } else if (key == "head") {
            nn::HeadSpec head;
            for (std::string tok; is >> tok;) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("malformed head layer '" + tok + "'");
                head.layers.push_back({std::stoi(tok.substr(0, colon)), nn::activation_from_string(tok.substr(colon + 1))});
            }
            cp.architecture.heads.push_back(std::move(head));
        } else if (key == "meta") {
            std::string name;
            is >> name;
            const auto value_at = line.find(' ', 5);
            cp.meta[name] = value_at == std::string::npos ? std::string{} : line.substr(value_at + 1);
        } else if (key == "params") {
            is >> count;
            have_count = true;
        } else {
            throw std::runtime_error("unknown checkpoint header line '" + line + "'");
        }
        if (is.bad())
            throw std::runtime_error("malformed checkpoint header line '" + line + "'");
    }
    cp.architecture.validate();
    if (!have_count || count != cp.architecture.parameter_count())
        throw std::runtime_error("checkpoint parameter count does not match its architecture");
    if (bytes.size() - pos != count * 8)
        throw std::runtime_error("checkpoint payload has wrong size");
    ByteReader reader(bytes, pos);
    cp.params.resize(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i)
        cp.params[static_cast<Eigen::Index>(i)] = reader.f64();
    return cp;
}

std::string read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    write_file_bytes(path, serialize_checkpoint(checkpoint));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file_bytes(path)); }

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_digest(const std::filesystem::path& path)
{
    const std::string bytes = read_file_bytes(path);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

} // namespace risloc
