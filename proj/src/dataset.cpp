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

#include "risloc/dataset.hpp"

#include "risloc/checkpoint.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace risloc {

namespace {

constexpr char kMagic[] = "RISEPDS1";
constexpr std::uint8_t kNoBit = 255;

} // namespace

std::string serialize_dataset(const EpisodeDataset& d)
{
    std::string out(kMagic, 8);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(d.horizon));
    put_u32(out, static_cast<std::uint32_t>(d.n_ris));
    put_u32(out, static_cast<std::uint32_t>(d.phase_count));
    put_u8(out, d.format == ObservationFormat::Stacked ? 0 : 1);
    put_u64(out, d.episodes.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto T = static_cast<std::size_t>(d.horizon);
    for (const auto& ep : d.episodes) {
        if (ep.observations.size() != T || ep.profiles.size() != T || ep.powers.size() != T)
            throw std::invalid_argument("episode length does not match dataset horizon");
        if (!ep.bits.empty() && ep.bits.size() != T)
            throw std::invalid_argument("episode bit record has wrong length");
        if (!ep.exact_feedback.empty() && ep.exact_feedback.size() != T)
            throw std::invalid_argument("episode feedback record has wrong length");
        put_f64(out, ep.true_position.x);
        put_f64(out, ep.true_position.y);
        put_f64(out, ep.true_position.z);
        for (cplx y : ep.observations) {
            put_f64(out, y.real());
            put_f64(out, y.imag());
        }
        for (const auto& prof : ep.profiles) {
            if (prof.size() != static_cast<std::size_t>(d.n_ris))
                throw std::invalid_argument("profile length does not match dataset RIS size");
            for (auto idx : prof.indices())
                put_u16(out, idx);
        }
        for (double p : ep.powers)
            put_f64(out, p);
        for (std::size_t t = 0; t < T; ++t)
            put_u8(out, ep.bits.empty() ? kNoBit : ep.bits[t].value());
        for (std::size_t t = 0; t < T; ++t)
            put_f64(out, ep.exact_feedback.empty() ? nan : ep.exact_feedback[t]);
        const Position e = ep.estimate.value_or(Position{nan, nan, nan});
        put_f64(out, e.x);
        put_f64(out, e.y);
        put_f64(out, e.z);
    }
    return out;
}

EpisodeDataset parse_dataset(const std::string& bytes)
{
    ByteReader r(bytes);
    if (r.raw(8) != std::string(kMagic, 8))
        throw std::runtime_error("not a risloc episode dataset");
    if (r.u32() != 1)
        throw std::runtime_error("unsupported dataset version");
    EpisodeDataset d;
    d.horizon = static_cast<int>(r.u32());
    d.n_ris = static_cast<int>(r.u32());
    d.phase_count = static_cast<int>(r.u32());
    const auto fmt = r.u8();
    if (fmt > 1)
        throw std::runtime_error("unknown observation format in dataset");
    d.format = fmt == 0 ? ObservationFormat::Stacked : ObservationFormat::Rss;
    const auto count = r.u64();
    const auto T = static_cast<std::size_t>(d.horizon);
    const std::size_t record = 8 * (3 + 2 * T + T + T + 3) + 2 * T * static_cast<std::size_t>(d.n_ris) + T;
    if (bytes.size() - r.position() != count * record)
        throw std::runtime_error("dataset payload has wrong size");
    d.episodes.resize(count);
    for (auto& ep : d.episodes) {
        ep.true_position = {r.f64(), r.f64(), r.f64()};
        for (std::size_t t = 0; t < T; ++t) {
            const double re = r.f64();
            const double im = r.f64();
            ep.observations.emplace_back(re, im);
        }
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<std::uint16_t> idx(static_cast<std::size_t>(d.n_ris));
            for (auto& i : idx)
                i = r.u16();
            ep.profiles.emplace_back(std::move(idx), static_cast<std::size_t>(d.phase_count));
        }
        for (std::size_t t = 0; t < T; ++t)
            ep.powers.push_back(r.f64());
        std::vector<std::uint8_t> bits(T);
        for (auto& b : bits)
            b = r.u8();
        if (T > 0 && bits[0] != kNoBit)
            for (auto b : bits)
                ep.bits.emplace_back(b);
        std::vector<double> fb(T);
        for (auto& v : fb)
            v = r.f64();
        if (T > 0 && !std::isnan(fb[0]))
            ep.exact_feedback = std::move(fb);
        const Position e{r.f64(), r.f64(), r.f64()};
        if (!std::isnan(e.x))
            ep.estimate = e;
    }
    return d;
}

void write_dataset(const std::filesystem::path& path, const EpisodeDataset& dataset)
{
    write_file_bytes(path, serialize_dataset(dataset));
}

EpisodeDataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_file_bytes(path)); }

std::string dataset_to_csv(const EpisodeDataset& d)
{
    std::ostringstream os;
    os.precision(17);
    os << "episode,t,x,y,z,re,im,power,bit,profile\n";
    for (std::size_t e = 0; e < d.episodes.size(); ++e) {
        const auto& ep = d.episodes[e];
        for (std::size_t t = 0; t < ep.observations.size(); ++t) {
            os << e << ',' << t + 1 << ',' << ep.true_position.x << ',' << ep.true_position.y << ','
               << ep.true_position.z << ',' << ep.observations[t].real() << ',' << ep.observations[t].imag() << ','
               << ep.powers[t] << ',';
            if (!ep.bits.empty())
                os << static_cast<int>(ep.bits[t].value());
            os << ',';
            const auto& idx = ep.profiles[t].indices();
            for (std::size_t i = 0; i < idx.size(); ++i)
                os << (i ? "." : "") << idx[i];
            os << '\n';
        }
    }
    return os.str();
}

} // namespace risloc
