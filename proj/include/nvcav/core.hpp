/*
 * Copyright 2026 The nvcav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NVCAV_CORE_HPP
#define NVCAV_CORE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nvcav {

/* Internal unit system: lengths in nm, c = 1, vacuum impedance = 1.
 * Time is therefore measured in nm (c*t); a frequency f is 1/lambda_nm. */
inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light_nm_per_fs = 299.792458;

inline double nm_to_fs(double t_nm) { return t_nm / speed_of_light_nm_per_fs; }

/// Rejected input: violated precondition or invalid configuration.
class invalid_input : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical blow-up detected while time stepping.
class instability_error : public std::runtime_error
{
public:
    instability_error(const std::string& what, std::int64_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
          m_step(step)
    {
    }
    std::int64_t step() const { return m_step; }

private:
    std::int64_t m_step;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) {
        throw invalid_input(msg);
    }
}

struct vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
    double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

    friend vec3 operator+(vec3 a, vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend vec3 operator-(vec3 a, vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend vec3 operator*(double s, vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const vec3&, const vec3&) = default;
};

inline double dot(vec3 a, vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(vec3 a) { return std::sqrt(dot(a, a)); }

inline bool is_unit(vec3 v, double tol = 1e-9) { return std::abs(norm(v) - 1.0) <= tol; }

enum class axis : int { x = 0, y = 1, z = 2 };

/// Field component labels, in storage order.
enum class component : int { ex = 0, ey = 1, ez = 2, hx = 3, hy = 4, hz = 5 };

inline const char* component_name(component c)
{
    static constexpr std::array<const char*, 6> names{"ex", "ey", "ez", "hx", "hy", "hz"};
    return names[static_cast<int>(c)];
}

inline component component_from_name(const std::string& s)
{
    for (int c = 0; c < 6; ++c) {
        if (s == component_name(static_cast<component>(c))) {
            return static_cast<component>(c);
        }
    }
    throw invalid_input("unknown field component '" + s + "'");
}

inline bool is_electric(component c) { return static_cast<int>(c) < 3; }
inline int component_axis(component c) { return static_cast<int>(c) % 3; }

/* 64-bit FNV-1a, used for run ids and artifact checksums. */
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace nvcav

#endif
