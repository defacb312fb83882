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

#include "mpu/memory_image.hpp"

#include <bit>
#include <cstring>

namespace mpu {

MemoryImage::MemoryImage(const MemoryImage& o) { *this = o; }

MemoryImage& MemoryImage::operator=(const MemoryImage& o) {
    if (this == &o) return *this;
    pages_.clear();
    for (const auto& [a, p] : o.pages_) pages_[a] = std::make_unique<Page>(*p);
    last_page_ = ~Addr{0};
    last_ptr_ = nullptr;
    return *this;
}

const MemoryImage::Page* MemoryImage::find(Addr page) const {
    if (page == last_page_) return last_ptr_;
    auto it = pages_.find(page);
    if (it == pages_.end()) return nullptr;
    last_page_ = page;
    last_ptr_ = it->second.get();
    return last_ptr_;
}

MemoryImage::Page& MemoryImage::touch(Addr page) {
    if (page == last_page_ && last_ptr_) return *last_ptr_;
    auto& slot = pages_[page];
    if (!slot) {
        slot = std::make_unique<Page>();
        slot->fill(0);
    }
    last_page_ = page;
    last_ptr_ = slot.get();
    return *slot;
}

std::uint8_t MemoryImage::read8(Addr a) const {
    const Page* p = find(a / kPageBytes);
    return p ? (*p)[a % kPageBytes] : 0;
}

void MemoryImage::write8(Addr a, std::uint8_t v) { touch(a / kPageBytes)[a % kPageBytes] = v; }

std::uint64_t MemoryImage::read(Addr a, unsigned width) const {
    const Addr off = a % kPageBytes;
    if (off + width <= kPageBytes) {
        const Page* p = find(a / kPageBytes);
        if (!p) return 0;
        std::uint64_t v = 0;
        std::memcpy(&v, p->data() + off, width);
        return v;
    }
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(read8(a + i)) << (8 * i);
    return v;
}

void MemoryImage::write(Addr a, unsigned width, std::uint64_t v) {
    const Addr off = a % kPageBytes;
    if (off + width <= kPageBytes) {
        std::memcpy(touch(a / kPageBytes).data() + off, &v, width);
        return;
    }
    for (unsigned i = 0; i < width; ++i) write8(a + i, static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t MemoryImage::read32(Addr a) const { return static_cast<std::uint32_t>(read(a, 4)); }
void MemoryImage::write32(Addr a, std::uint32_t v) { write(a, 4, v); }
std::uint64_t MemoryImage::read64(Addr a) const { return read(a, 8); }
void MemoryImage::write64(Addr a, std::uint64_t v) { write(a, 8, v); }

void MemoryImage::write_bytes(Addr base, const std::vector<std::uint8_t>& bytes) {
    for (std::size_t i = 0; i < bytes.size(); ++i) write8(base + i, bytes[i]);
}

std::vector<std::uint8_t> MemoryImage::read_bytes(Addr base, std::size_t length) const {
    std::vector<std::uint8_t> out(length);
    for (std::size_t i = 0; i < length; ++i) out[i] = read8(base + i);
    return out;
}

void MemoryImage::write_f32(Addr base, const std::vector<float>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) write32(base + 4 * i, std::bit_cast<std::uint32_t>(values[i]));
}

std::vector<float> MemoryImage::read_f32(Addr base, std::size_t count) const {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(read32(base + 4 * i));
    return out;
}

void MemoryImage::write_u32(Addr base, const std::vector<std::uint32_t>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) write32(base + 4 * i, values[i]);
}

std::vector<std::uint32_t> MemoryImage::read_u32(Addr base, std::size_t count) const {
    std::vector<std::uint32_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = read32(base + 4 * i);
    return out;
}

std::optional<Addr> MemoryImage::first_difference(const MemoryImage& other, Addr base, std::size_t length) const {
    for (std::size_t i = 0; i < length; ++i)
        if (read8(base + i) != other.read8(base + i)) return base + i;
    return std::nullopt;
}

bool MemoryImage::same_contents(const MemoryImage& other) const {
    auto covered = [](const MemoryImage& a, const MemoryImage& b) {
        for (const auto& [page, p] : a.pages_) {
            const Page* q = b.find(page);
            if (q) {
                if (*p != *q) return false;
            } else {
                for (auto byte : *p)
                    if (byte) return false;
            }
        }
        return true;
    };
    return covered(*this, other) && covered(other, *this);
}

}  // namespace mpu
