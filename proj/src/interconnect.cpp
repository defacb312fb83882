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

#include "mpu/interconnect.hpp"

#include <algorithm>
#include <cstdlib>

namespace mpu {

std::string to_string(TsvClass c) {
    switch (c) {
    case TsvClass::Offload: return "offload";
    case TsvClass::Move: return "move";
    case TsvClass::Dram: return "dram";
    case TsvClass::Smem: return "smem";
    }
    return "?";
}

TsvBus::TsvBus(std::uint32_t bits_per_cycle, std::uint32_t ratio, std::array<std::uint32_t, kTsvClasses> weights)
    : width_(bits_per_cycle), ratio_(ratio), weights_(weights) {}

void TsvBus::enqueue(TsvClass c, std::uint64_t bits, std::uint64_t tag) {
    queues_[static_cast<int>(c)].push_back(Pending{bits, tag});
    ++queued_;
}

std::uint64_t TsvBus::total_bits() const {
    std::uint64_t t = 0;
    for (auto b : bits_) t += b;
    return t;
}

int TsvBus::pick() {
    for (int k = 0; k < kTsvClasses; ++k) {
        const int c = (rr_ + k) % kTsvClasses;
        if (queues_[c].empty()) continue;
        if (c != rr_) {
            rr_ = c;
            served_ = 0;
        }
        if (++served_ >= weights_[c]) {
            rr_ = (c + 1) % kTsvClasses;
            served_ = 0;
        }
        return c;
    }
    return -1;
}

void TsvBus::tick(Cycle now, std::vector<TsvCompletion>& out) {
    const std::uint64_t first = now * ratio_, last = first + ratio_;
    for (std::uint64_t t = std::max(first, free_at_); t < last && queued_ > 0; t = std::max(t, free_at_)) {
        const int c = pick();
        Pending p = queues_[c].front();
        queues_[c].pop_front();
        --queued_;
        const std::uint64_t occ = occupancy(p.bits);
        free_at_ = t + occ;
        busy_cycles_ += occ;
        bits_[c] += p.bits;
        ++transfers_[c];
        if (log_grants_) grants_.push_back(static_cast<TsvClass>(c));
        // A zero-length transfer still takes its turn but arrives immediately.
        const std::uint64_t end = occ == 0 ? t : free_at_;
        out.push_back(TsvCompletion{p.tag, std::max<Cycle>(now, (end + ratio_ - 1) / ratio_)});
    }
}

MeshNoc::MeshNoc(const SimConfig& cfg)
    : cores_(cfg.cores_per_proc),
      mesh_x_(cfg.mesh_x),
      router_(cfg.router_cycles),
      link_(cfg.link_cycles),
      flit_bits_(cfg.flit_bits),
      offchip_bits_(cfg.offchip_bits),
      offchip_latency_(cfg.offchip_latency),
      ratio_(cfg.noc_ratio()) {}

std::uint32_t MeshNoc::hops(std::uint32_t a, std::uint32_t b) const {
    const int ax = static_cast<int>(a % mesh_x_), ay = static_cast<int>(a / mesh_x_);
    const int bx = static_cast<int>(b % mesh_x_), by = static_cast<int>(b / mesh_x_);
    return static_cast<std::uint32_t>(std::abs(ax - bx) + std::abs(ay - by));
}

std::uint64_t MeshNoc::route_mesh(std::uint32_t proc, std::uint32_t from, std::uint32_t to, std::uint64_t nflits,
                                  std::uint64_t bits, std::uint64_t t) {
    std::uint32_t x = from % mesh_x_, y = from / mesh_x_;
    const std::uint32_t tx = to % mesh_x_, ty = to / mesh_x_;
    while (x != tx || y != ty) {
        const std::uint32_t cur = y * mesh_x_ + x;
        if (x != tx) x += x < tx ? 1 : -1;
        else y += y < ty ? 1 : -1;
        const std::uint32_t next = y * mesh_x_ + x;
        const std::uint64_t key = (static_cast<std::uint64_t>(proc) << 40) | (static_cast<std::uint64_t>(cur) << 20) | next;
        t += router_;
        auto& free = link_free_[key];
        const std::uint64_t start = std::max(t, free);
        free = start + nflits * link_;
        t = start + link_;  // head flit reaches the next router
        stats_.bit_hops += bits;
    }
    return t;
}

Cycle MeshNoc::send(std::uint32_t src, std::uint32_t dst, std::uint64_t bits, Cycle now) {
    const std::uint64_t nflits = std::max<std::uint64_t>(1, flits(bits));
    ++stats_.packets;
    stats_.bits_injected += bits;
    stats_.flits += nflits;
    const std::uint32_t sp = src / cores_, dp = dst / cores_;
    std::uint64_t t = now * ratio_;
    if (sp == dp) {
        t = route_mesh(sp, src % cores_, dst % cores_, nflits, bits, t);
    } else {
        // Processor gateways are core 0 of each processor.
        t = route_mesh(sp, src % cores_, 0, nflits, bits, t);
        const std::uint64_t ser = (bits + offchip_bits_ - 1) / offchip_bits_;
        auto& free = offchip_free_[(static_cast<std::uint64_t>(sp) << 32) | dp];
        const std::uint64_t start = std::max(t, free);
        free = start + ser;
        t = start + ser + static_cast<std::uint64_t>(offchip_latency_) * ratio_;
        stats_.offchip_bits += bits;
        t = route_mesh(dp, 0, dst % cores_, nflits, bits, t);
    }
    t += (nflits - 1) * link_;  // tail flit
    stats_.bits_delivered += bits;
    return std::max<Cycle>(now + 1, (t + ratio_ - 1) / ratio_);
}

}  // namespace mpu
