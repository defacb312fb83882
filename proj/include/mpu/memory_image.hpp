/*
 * Copyright 2026 The MPU Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MPU_MEMORY_IMAGE_HPP
#define MPU_MEMORY_IMAGE_HPP

#include "mpu/common.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mpu {

/// Sparse little-endian byte-addressed device memory. Unwritten bytes read 0.
class MemoryImage {
public:
    static constexpr std::size_t kPageBytes = 4096;

    MemoryImage() = default;
    MemoryImage(const MemoryImage& o);
    MemoryImage& operator=(const MemoryImage& o);
    MemoryImage(MemoryImage&&) noexcept = default;
    MemoryImage& operator=(MemoryImage&&) noexcept = default;

    std::uint8_t read8(Addr a) const;
    void write8(Addr a, std::uint8_t v);
    std::uint32_t read32(Addr a) const;
    void write32(Addr a, std::uint32_t v);
    std::uint64_t read64(Addr a) const;
    void write64(Addr a, std::uint64_t v);
    /// width is 4 or 8 bytes.
    std::uint64_t read(Addr a, unsigned width) const;
    void write(Addr a, unsigned width, std::uint64_t v);

    void write_bytes(Addr base, const std::vector<std::uint8_t>& bytes);
    std::vector<std::uint8_t> read_bytes(Addr base, std::size_t length) const;

    void write_f32(Addr base, const std::vector<float>& values);
    std::vector<float> read_f32(Addr base, std::size_t count) const;
    void write_u32(Addr base, const std::vector<std::uint32_t>& values);
    std::vector<std::uint32_t> read_u32(Addr base, std::size_t count) const;

    /// First address in [base, base+length) where the images differ.
    std::optional<Addr> first_difference(const MemoryImage& other, Addr base, std::size_t length) const;

    /// Byte-exact comparison over every page either image touched.
    bool same_contents(const MemoryImage& other) const;

private:
    using Page = std::array<std::uint8_t, kPageBytes>;
    const Page* find(Addr page) const;
    Page& touch(Addr page);

    std::map<Addr, std::unique_ptr<Page>> pages_;
    // One-entry lookup cache; kernels stream through memory.
    mutable Addr last_page_ = ~Addr{0};
    mutable Page* last_ptr_ = nullptr;
};

}  // namespace mpu

#endif  // MPU_MEMORY_IMAGE_HPP
