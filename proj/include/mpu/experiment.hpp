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

/**
 * @file experiment.hpp
 * @brief Oracle-checked runs and the ablation sweeps built on them.
 */

#ifndef MPU_EXPERIMENT_HPP
#define MPU_EXPERIMENT_HPP

#include "mpu/config.hpp"
#include "mpu/memory.hpp"
#include "mpu/simulator.hpp"
#include "mpu/workloads.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpu::experiment {

enum class SweepMode : std::uint8_t { RowBuffers, Policy, Smem, PonB, All };

std::string to_string(SweepMode m);
/// rowbuf | policy | smem | ponb | all. Throws std::invalid_argument.
SweepMode parse_sweep_mode(const std::string& s);

struct Leg {
    std::string label;
    SimConfig cfg;
};

/// Legs in a fixed order; `All` is the union with duplicate configs dropped.
std::vector<Leg> sweep_legs(SweepMode m, const SimConfig& base);

class OracleMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Final memory of the reference interpreter over every launch of `w`.
MemoryImage reference_memory(const Workload& w);

struct RunOptions {
    bool check_legality = true;
    bool trace = false;
};

struct RunOutput {
    SimResult sim;
    LegalityReport legality;
};

/// Compiles and simulates `w` under `cfg`, then compares every output region
/// with `reference`. Throws OracleMismatch naming the first divergent address,
/// SimulationFault when lanes were not serviced exactly once or the DRAM
/// command stream breaks a timing rule.
RunOutput run_workload(const Workload& w, const SimConfig& cfg, const MemoryImage& reference,
                       const RunOptions& opt = {});

struct LegResult {
    std::string workload;
    std::string leg;
    RunReport report;
    std::uint64_t dram_commands = 0;
};

/// Runs every leg of `m` on `w`; the first oracle mismatch aborts the sweep.
std::vector<LegResult> run_sweep(const Workload& w, SweepMode m, const SimConfig& base);

std::string sweep_csv_header();
std::string sweep_csv(const std::vector<LegResult>& rows);

struct DramTraceResult {
    std::vector<CommandRecord> commands;
    std::uint64_t requests = 0;
    std::uint64_t completed = 0;
    std::uint64_t hits = 0, misses = 0;
    Cycle cycles = 0;
};

/// Drives `requests` random reads and writes through `banks` FR-FCFS bank
/// controllers of `cfg` (rows drawn from a small hot set so hits, conflicts
/// and refreshes all occur) until every request has completed.
DramTraceResult random_dram_trace(const SimConfig& cfg, std::uint64_t seed, std::uint64_t requests,
                                  std::uint32_t banks = 4);

}  // namespace mpu::experiment

#endif  // MPU_EXPERIMENT_HPP
