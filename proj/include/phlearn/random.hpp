// Copyright 2026 The phlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstring>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace phlearn {

/// Random stream used throughout the library. A stream is owned by exactly one
/// consumer; parallel work gets sub-streams seeded with derive_seed().
using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Order-sensitive mix of a base seed with any number of integer labels.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t label : labels) {
        h = splitmix64(h ^ splitmix64(label + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

/// FNV-1a; stable across platforms so string labels can feed derive_seed.
inline constexpr std::uint64_t hash_label(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Bit pattern of a double, for hashing real-valued configuration fields.
inline std::uint64_t hash_real(double value) {
    if (value == 0.0) value = 0.0;  // fold -0 onto +0
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    return bits;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

/// Haar-random point on the unit sphere in R^dim.
inline Eigen::VectorXd random_unit_vector(Eigen::Index dim, Rng& rng) {
    Eigen::VectorXd v(dim);
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = standard_normal(rng);
        norm = v.norm();
    } while (norm < 1e-300);
    return v / norm;
}

}  // namespace phlearn
