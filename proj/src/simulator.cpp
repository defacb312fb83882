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

#include "mpu/simulator.hpp"

#include "mpu/alu.hpp"
#include "mpu/core.hpp"
#include "mpu/interconnect.hpp"
#include "mpu/lsu.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <functional>
#include <memory>
#include <queue>
#include <unordered_map>

namespace mpu {

using compiler::AllocatedKernel;
using isa::Instruction;
using isa::Location;
using isa::Opcode;
using isa::RegisterId;

compiler::AllocatedKernel compile_for(const SimConfig& cfg, const isa::Kernel& k) {
    const compiler::RfCapacity cap{cfg.far_rf_units(), cfg.near_rf_units()};
    if (cfg.ponb) return compiler::compile_far_only(k, cap);
    return compiler::compile(k, cfg.offload == OffloadPolicy::Annotated, cap);
}

namespace {

using Lanes = std::array<std::uint64_t, kWarpSize>;

struct Src {
    enum Kind : std::uint8_t { Reg, Special, Imm } kind = Imm;
    int index = -1;
    isa::Special special = isa::Special::None;
    std::uint64_t imm = 0;
};

struct Decoded {
    std::vector<Src> srcs;
    int dst = -1;
    int guard = -1;
    bool guard_negate = false;
    unsigned width = 0;
    std::uint32_t rpc = core::kNoReconvergence;
};

struct LaunchContext {
    const AllocatedKernel* ak = nullptr;
    std::unique_ptr<core::RegisterIndex> index;
    std::vector<Decoded> code;
    std::vector<int> far_slot, near_slot;  // by dense register index
};

enum class WarpState : std::uint8_t { Ready, Blocked, Barrier, Done };

struct Warp {
    std::uint32_t uid = 0;
    std::uint32_t core = 0;
    std::uint32_t subcore = 0;
    std::uint32_t block = 0;
    std::uint32_t index_in_block = 0;
    core::SimtStack stack;
    core::TrackTable tt;
    std::vector<Lanes> val;
    std::vector<std::uint8_t> pending;
    // Physical slots with a write in flight. Slots are recycled between
    // registers, so the architectural scoreboard alone misses WAW on a slot.
    std::vector<std::uint8_t> far_busy, near_busy;
    std::uint32_t in_flight = 0;
    WarpState state = WarpState::Ready;
    // Physical register files, only kept for shadow checking.
    std::vector<Lanes> far_file, near_file;

    Warp(const core::RegisterIndex& idx) : tt(idx) {}
};

struct Block {
    std::uint32_t id = 0;
    std::uint32_t core = 0;
    std::vector<std::uint8_t> smem;
    std::uint32_t live = 0;
    std::uint32_t arrived = 0;
    std::vector<std::uint32_t> warps;
};

struct CoreState {
    std::deque<std::uint32_t> pending_blocks;
    std::uint32_t resident = 0;
    std::vector<std::vector<std::uint32_t>> sub;  // resident warp uids per subcore, ascending
    std::vector<core::WarpScheduler> sched;
};

struct RequestId {
    std::uint32_t core = 0, subcore = 0, counter = 0;
    friend bool operator==(const RequestId&, const RequestId&) = default;
};

struct MemOp {
    std::uint32_t warp = 0;
    RequestId id;
    LaneMask mask = 0;
    LaneMask serviced = 0;
    int dst = -1;
    Location dst_loc = Location::F;
    bool store = false;
    bool fastpath = false;
    unsigned width = 4;
    std::uint32_t parts = 0;
    Lanes vals{};
};

struct Event {
    Cycle at;
    std::uint64_t seq;
    bool background;
    std::function<void()> fn;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const { return a.at != b.at ? a.at > b.at : a.seq > b.seq; }
};

class Engine {
public:
    Engine(const SimConfig& cfg, MemoryImage mem, const SimOptions& opt);
    void run(const AllocatedKernel& ak);
    SimResult finish(const std::string& names);

private:
    // plumbing
    void schedule(Cycle at, std::function<void()> fn, bool background = false);
    void drain_events();
    void tsv_send(std::uint32_t core, TsvClass c, std::uint64_t bits, std::function<void()> done);
    void dram_access(Addr base, bool write, std::function<void()> done);
    void activate_bank(std::uint32_t b);
    void tick_banks();
    bool tick_tsvs();
    bool issue_all();

    // launch management
    void setup_launch(const AllocatedKernel& ak);
    void launch_block(std::uint32_t core, std::uint32_t block);
    void warp_done(Warp& w);
    void release_barrier(Block& b);

    // pipeline
    bool can_issue(const Warp& w) const;
    bool busy(const Warp& w, int idx) const;
    void set_pending(Warp& w, int idx, std::uint8_t v);
    void issue(Warp& w);
    void dispatch(std::uint32_t uid, Location loc, LaneMask exec);
    void commit(std::uint32_t uid, int dst, Location loc, LaneMask exec, const Lanes& v);
    void retire(std::uint32_t uid);
    std::uint64_t src_value(const Warp& w, const Src& s, int lane) const;
    void check_read(const Warp& w, int idx, Location l, std::uint32_t pc);
    Lanes* phys(Warp& w, int idx, Location l);
    void apply_move(Warp& w, const core::MoveRequest& m);

    void global_access(Warp& w, const Instruction& ins, const Decoded& d, LaneMask exec);
    void shared_access(Warp& w, const Instruction& ins, const Decoded& d, LaneMask exec);
    void part_done(const std::shared_ptr<MemOp>& op, LaneMask lanes);
    void finish_mem(const std::shared_ptr<MemOp>& op);

    void trace(const Warp& w, std::uint32_t pc, Location loc, const char* what);
    std::string where(const Warp& w, std::uint32_t pc) const;

    SimConfig cfg_;
    SimOptions opt_;
    AddressMapping map_;
    DramTiming timing_;
    EnergyAccount energy_;
    MeshNoc noc_;
    MemoryImage mem_;

    Cycle now_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t foreground_ = 0;

    std::vector<TsvBus> tsv_;
    std::unordered_map<std::uint64_t, std::function<void()>> tsv_cb_;
    std::uint64_t next_tag_ = 1;
    std::vector<TsvCompletion> completions_;

    std::vector<BankController> banks_;
    std::vector<char> bank_active_;
    std::vector<std::uint32_t> active_banks_;
    std::vector<Cycle> bank_wake_;
    std::unordered_map<std::uint64_t, std::function<void()>> dram_cb_;
    std::uint64_t next_dram_id_ = 1;

    std::vector<Cycle> nbu_free_;
    std::vector<Cycle> smem_free_;
    std::vector<std::uint32_t> request_counter_;

    // current launch
    LaunchContext ctx_;
    std::vector<std::unique_ptr<Warp>> warps_;
    std::vector<Block> blocks_;
    std::vector<CoreState> cores_;
    std::uint32_t blocks_done_ = 0;
    std::uint32_t blocks_per_core_limit_ = 0;

    RunReport rep_;
    std::vector<CommandRecord> commands_;
    std::vector<std::string> trace_;
    std::uint64_t lanes_serviced_ = 0;
    std::uint64_t memory_instructions_ = 0;
};

Engine::Engine(const SimConfig& cfg, MemoryImage mem, const SimOptions& opt)
    : cfg_(cfg),
      opt_(opt),
      map_(cfg),
      timing_(DramTiming::from(cfg)),
      energy_(EnergyModel::from_config(cfg)),
      noc_(cfg),
      mem_(std::move(mem)) {
    cfg_.validate();
    const std::uint32_t cores = cfg_.cores_total();
    const std::array<std::uint32_t, kTsvClasses> w{cfg_.tsv_weight_offload, cfg_.tsv_weight_move,
                                                   cfg_.tsv_weight_dram, cfg_.tsv_weight_smem};
    tsv_.reserve(cores);
    for (std::uint32_t c = 0; c < cores; ++c) tsv_.emplace_back(cfg_.tsv_bits_per_core, cfg_.tsv_ratio(), w);

    const std::uint32_t per_core = cfg_.banks_per_core();
    banks_.reserve(static_cast<std::size_t>(cores) * per_core);
    for (std::uint32_t b = 0; b < cores * per_core; ++b) {
        const Cycle first = static_cast<Cycle>(timing_.tREFI) + static_cast<Cycle>(cfg_.refresh_stagger) * (b % per_core);
        banks_.emplace_back(timing_, cfg_.rowbufs, b, first);
        if (cfg_.record_commands) banks_.back().set_trace(&commands_);
    }
    bank_active_.assign(banks_.size(), 0);
    bank_wake_.assign(banks_.size(), 0);
    for (std::uint32_t b = 0; b < banks_.size(); ++b) {
        bank_wake_[b] = banks_[b].next_refresh();
        schedule(bank_wake_[b], [this, b] {
            if (!bank_active_[b] && banks_[b].has_work(now_)) activate_bank(b);
        }, true);
    }
    nbu_free_.assign(static_cast<std::size_t>(cores) * cfg_.nbus, 0);
    smem_free_.assign(cores, 0);
    request_counter_.assign(static_cast<std::size_t>(cores) * cfg_.subcores, 0);
}

void Engine::schedule(Cycle at, std::function<void()> fn, bool background) {
    events_.push(Event{std::max(at, now_), seq_++, background, std::move(fn)});
    if (!background) ++foreground_;
}

void Engine::drain_events() {
    while (!events_.empty() && events_.top().at <= now_) {
        Event e = std::move(const_cast<Event&>(events_.top()));
        events_.pop();
        if (!e.background) --foreground_;
        e.fn();
    }
}

void Engine::tsv_send(std::uint32_t core, TsvClass c, std::uint64_t bits, std::function<void()> done) {
    if (bits == 0) {
        schedule(now_, std::move(done));
        return;
    }
    const std::uint64_t tag = next_tag_++;
    tsv_cb_.emplace(tag, std::move(done));
    tsv_[core].enqueue(c, bits, tag);
}

void Engine::dram_access(Addr base, bool write, std::function<void()> done) {
    const DramLocation l = map_.decode(base);
    const std::uint32_t b = map_.global_bank(l);
    const std::uint64_t id = next_dram_id_++;
    dram_cb_.emplace(id, std::move(done));
    banks_[b].enqueue(DramRequest{id, write, l.subarray, l.physical_row, l.col, now_, false});
    activate_bank(b);
}

void Engine::activate_bank(std::uint32_t b) {
    if (bank_active_[b]) return;
    bank_active_[b] = 1;
    active_banks_.push_back(b);
}

void Engine::tick_banks() {
    std::size_t keep = 0;
    for (std::size_t i = 0; i < active_banks_.size(); ++i) {
        const std::uint32_t b = active_banks_[i];
        BankController& bank = banks_[b];
        if (auto iss = bank.tick(now_)) {
            if (iss->completed) {
                auto it = dram_cb_.find(*iss->completed);
                auto fn = std::move(it->second);
                dram_cb_.erase(it);
                schedule(iss->data_ready, std::move(fn));
            }
        }
        if (bank.has_work(now_ + 1)) {
            active_banks_[keep++] = b;
            continue;
        }
        bank_active_[b] = 0;
        if (bank_wake_[b] != bank.next_refresh()) {
            bank_wake_[b] = bank.next_refresh();
            schedule(bank_wake_[b], [this, b] {
                if (!bank_active_[b] && banks_[b].has_work(now_)) activate_bank(b);
            }, true);
        }
    }
    active_banks_.resize(keep);
}

bool Engine::tick_tsvs() {
    bool busy = false;
    for (auto& bus : tsv_) {
        if (bus.idle()) continue;
        completions_.clear();
        bus.tick(now_, completions_);
        for (const auto& c : completions_) {
            auto it = tsv_cb_.find(c.tag);
            auto fn = std::move(it->second);
            tsv_cb_.erase(it);
            schedule(c.done, std::move(fn));
        }
        busy = busy || !bus.idle();
    }
    return busy;
}

std::string Engine::where(const Warp& w, std::uint32_t pc) const {
    return " (block " + std::to_string(w.block) + ", warp " + std::to_string(w.index_in_block) + ", pc " +
           std::to_string(pc) + ": " + isa::print_instruction(ctx_.ak->kernel.instructions[pc]) + ")";
}

void Engine::trace(const Warp& w, std::uint32_t pc, Location loc, const char* what) {
    if (!opt_.trace) return;
    trace_.push_back(std::to_string(now_) + "," + std::to_string(w.uid) + "," + std::to_string(pc) + "," +
                     std::string(isa::to_string(ctx_.ak->kernel.instructions[pc].op)) + "," + isa::to_char(loc) +
                     "," + what);
}

void Engine::setup_launch(const AllocatedKernel& ak) {
    const isa::Kernel& k = ak.kernel;
    ctx_ = LaunchContext{};
    ctx_.ak = &ak;
    ctx_.index = std::make_unique<core::RegisterIndex>(k);
    const auto& idx = *ctx_.index;
    ctx_.far_slot.assign(idx.size(), -1);
    ctx_.near_slot.assign(idx.size(), -1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (auto it = ak.phys_far.find(idx.reg(i)); it != ak.phys_far.end()) ctx_.far_slot[i] = static_cast<int>(it->second);
        if (auto it = ak.phys_near.find(idx.reg(i)); it != ak.phys_near.end())
            ctx_.near_slot[i] = static_cast<int>(it->second);
    }
    for (std::uint32_t pc = 0; pc < k.instructions.size(); ++pc) {
        const Instruction& ins = k.instructions[pc];
        Decoded d;
        for (const auto& s : ins.srcs) {
            Src src;
            if (auto* r = std::get_if<RegisterId>(&s)) {
                if (r->is_special()) {
                    src.kind = Src::Special;
                    src.special = r->special;
                } else {
                    src.kind = Src::Reg;
                    src.index = idx.of(*r);
                }
            } else {
                src.imm = alu::immediate_bits(ins, std::get<isa::Immediate>(s));
            }
            d.srcs.push_back(src);
        }
        if (ins.dst) d.dst = idx.of(*ins.dst);
        if (ins.guard) {
            d.guard = idx.of(ins.guard->reg);
            d.guard_negate = ins.guard->negate;
        }
        if (isa::is_memory(ins.op)) d.width = isa::width_bytes(ins.type);
        if (auto it = ak.reconv.find(pc); it != ak.reconv.end()) d.rpc = it->second;
        ctx_.code.push_back(std::move(d));
    }

    // Residency: block, warp, shared memory and register file limits.
    const std::uint32_t wpb = k.grid.threads_per_block / kWarpSize;
    const std::uint32_t per_sub = (wpb + cfg_.subcores - 1) / cfg_.subcores;
    std::uint32_t warp_cap = cfg_.max_warps_per_subcore;
    if (ak.far_slots_used) warp_cap = std::min(warp_cap, cfg_.far_rf_units() / ak.far_slots_used);
    if (ak.near_slots_used) warp_cap = std::min(warp_cap, cfg_.near_rf_units() / ak.near_slots_used);
    std::uint32_t limit = std::min(cfg_.max_blocks_per_core, warp_cap / per_sub);
    if (k.smem_bytes) limit = std::min(limit, cfg_.smem_bytes / k.smem_bytes);
    if (limit == 0) throw ConfigError("kernel " + k.name + ": one thread block does not fit on a core");
    blocks_per_core_limit_ = limit;

    warps_.clear();
    blocks_.assign(k.grid.blocks, Block{});
    cores_.assign(cfg_.cores_total(), CoreState{});
    for (auto& c : cores_) {
        c.sub.resize(cfg_.subcores);
        c.sched.assign(cfg_.subcores, core::WarpScheduler(cfg_.scheduler));
    }
    blocks_done_ = 0;
    for (std::uint32_t b = 0; b < k.grid.blocks; ++b) {
        blocks_[b].id = b;
        blocks_[b].core = b % cfg_.cores_total();
        cores_[blocks_[b].core].pending_blocks.push_back(b);
    }
    for (std::uint32_t c = 0; c < cores_.size(); ++c)
        while (cores_[c].resident < limit && !cores_[c].pending_blocks.empty()) {
            const std::uint32_t b = cores_[c].pending_blocks.front();
            cores_[c].pending_blocks.pop_front();
            launch_block(c, b);
        }
}

void Engine::launch_block(std::uint32_t core, std::uint32_t b) {
    const isa::Kernel& k = ctx_.ak->kernel;
    Block& blk = blocks_[b];
    blk.smem.assign(k.smem_bytes, 0);
    const std::uint32_t wpb = k.grid.threads_per_block / kWarpSize;
    blk.live = wpb;
    blk.arrived = 0;
    ++cores_[core].resident;
    for (std::uint32_t j = 0; j < wpb; ++j) {
        auto w = std::make_unique<Warp>(*ctx_.index);
        w->uid = static_cast<std::uint32_t>(warps_.size());
        w->core = core;
        w->subcore = j % cfg_.subcores;
        w->block = b;
        w->index_in_block = j;
        w->val.assign(ctx_.index->size(), Lanes{});
        w->pending.assign(ctx_.index->size(), 0);
        w->far_busy.assign(ctx_.ak->far_slots_used + 1, 0);
        w->near_busy.assign(ctx_.ak->near_slots_used + 1, 0);
        if (cfg_.check_shadow) {
            w->far_file.assign(ctx_.ak->far_slots_used + 1, Lanes{});
            w->near_file.assign(ctx_.ak->near_slots_used + 1, Lanes{});
        }
        blk.warps.push_back(w->uid);
        cores_[core].sub[w->subcore].push_back(w->uid);
        warps_.push_back(std::move(w));
    }
}

void Engine::release_barrier(Block& b) {
    b.arrived = 0;
    for (std::uint32_t uid : b.warps) {
        Warp& w = *warps_[uid];
        if (w.state != WarpState::Barrier) continue;
        w.stack.advance();
        w.state = WarpState::Ready;
    }
}

void Engine::warp_done(Warp& w) {
    w.state = WarpState::Done;
    auto& list = cores_[w.core].sub[w.subcore];
    list.erase(std::find(list.begin(), list.end(), w.uid));
    Block& b = blocks_[w.block];
    --b.live;
    if (b.live > 0) {
        if (b.arrived > 0 && b.arrived == b.live) release_barrier(b);
        return;
    }
    ++blocks_done_;
    CoreState& c = cores_[w.core];
    --c.resident;
    if (!c.pending_blocks.empty()) {
        const std::uint32_t next = c.pending_blocks.front();
        c.pending_blocks.pop_front();
        launch_block(w.core, next);
    }
}

bool Engine::can_issue(const Warp& w) const {
    if (w.state != WarpState::Ready) return false;
    const std::uint32_t pc = w.stack.pc();
    const Instruction& ins = ctx_.ak->kernel.instructions[pc];
    if ((ins.op == Opcode::BarSync || ins.op == Opcode::Exit) && w.in_flight > 0) return false;
    const Decoded& d = ctx_.code[pc];
    if (d.guard >= 0 && busy(w, d.guard)) return false;
    if (d.dst >= 0 && busy(w, d.dst)) return false;
    for (const auto& s : d.srcs)
        if (s.kind == Src::Reg && busy(w, s.index)) return false;
    return true;
}

bool Engine::busy(const Warp& w, int idx) const {
    if (w.pending[idx]) return true;
    const int f = ctx_.far_slot[idx], n = ctx_.near_slot[idx];
    return (f >= 0 && w.far_busy[f]) || (n >= 0 && w.near_busy[n]);
}

void Engine::set_pending(Warp& w, int idx, std::uint8_t v) {
    w.pending[idx] = v;
    if (const int f = ctx_.far_slot[idx]; f >= 0) w.far_busy[f] = v;
    if (const int n = ctx_.near_slot[idx]; n >= 0) w.near_busy[n] = v;
}

bool Engine::issue_all() {
    bool issued = false;
    std::vector<std::uint32_t> ready;
    for (auto& c : cores_) {
        if (c.resident == 0) continue;
        for (std::uint32_t s = 0; s < c.sub.size(); ++s) {
            ready.clear();
            for (std::uint32_t uid : c.sub[s])
                if (can_issue(*warps_[uid])) ready.push_back(uid);
            if (auto pick = c.sched[s].schedule_warp(ready)) {
                issue(*warps_[*pick]);
                issued = true;
            }
        }
    }
    return issued;
}

std::uint64_t Engine::src_value(const Warp& w, const Src& s, int lane) const {
    switch (s.kind) {
    case Src::Reg: return w.val[s.index][lane];
    case Src::Imm: return s.imm;
    case Src::Special: {
        const auto& g = ctx_.ak->kernel.grid;
        switch (s.special) {
        case isa::Special::TidX: return w.index_in_block * kWarpSize + static_cast<std::uint32_t>(lane);
        case isa::Special::NtidX: return g.threads_per_block;
        case isa::Special::CtaidX: return w.block;
        case isa::Special::NctaidX: return g.blocks;
        default: return 0;
        }
    }
    }
    return 0;
}

Lanes* Engine::phys(Warp& w, int idx, Location l) {
    const int slot = (l == Location::F ? ctx_.far_slot : ctx_.near_slot)[idx];
    if (slot < 0) return nullptr;
    return &(l == Location::F ? w.far_file : w.near_file)[slot];
}

void Engine::check_read(const Warp& cw, int idx, Location l, std::uint32_t pc) {
    if (idx < 0) return;
    Warp& w = const_cast<Warp&>(cw);
    if (!w.tt.at(idx).valid_at(l))
        throw SimulationFault("operand " + isa::to_string(ctx_.index->reg(idx)) + " not valid at " + isa::to_char(l) +
                              where(w, pc));
    if (!cfg_.check_shadow) return;
    const Lanes* p = phys(w, idx, l);
    if (p && *p != w.val[idx])
        throw SimulationFault("track table unsound: stale copy of " + isa::to_string(ctx_.index->reg(idx)) + " at " +
                              isa::to_char(l) + where(w, pc));
}

void Engine::apply_move(Warp& w, const core::MoveRequest& m) {
    const int idx = w.tt.index_of(m.reg);
    if (cfg_.check_shadow) {
        Lanes* from = phys(w, idx, m.from);
        Lanes* to = phys(w, idx, m.to);
        if (from && to) *to = *from;
    }
    w.tt.on_move(m.reg);
}

void Engine::issue(Warp& w) {
    const std::uint32_t pc = w.stack.pc();
    const Instruction& ins = ctx_.ak->kernel.instructions[pc];
    const Decoded& d = ctx_.code[pc];
    energy_.record(EnergyEvent::ICacheFetch);
    energy_.record(EnergyEvent::SchedulerIssue);
    ++rep_.warp_instructions;

    const LaneMask top = w.stack.mask();
    LaneMask exec = top;
    if (d.guard >= 0) {
        exec = 0;
        for (int l = 0; l < kWarpSize; ++l)
            if ((top >> l & 1u) && ((w.val[d.guard][l] != 0) != d.guard_negate)) exec |= 1u << l;
    }

    const Location loc = core::decide_instruction_location(ins, w.tt, cfg_.offload, cfg_.ponb);
    const auto req = core::decide_register_locations(ins, loc, cfg_.ponb);
    const bool partial = exec != kFullMask || ins.guard.has_value();
    std::vector<core::MoveRequest> moves;
    try {
        moves = core::plan_register_moves(req, w.tt, partial);
    } catch (const SimulationFault& e) {
        throw SimulationFault(e.what() + where(w, pc));
    }
    for (const auto& o : req) {
        const int idx = w.tt.index_of(o.reg);
        const int slot = (o.loc == Location::F ? ctx_.far_slot : ctx_.near_slot)[idx];
        if (slot < 0)
            throw SimulationFault("register " + isa::to_string(o.reg) + " has no slot in the " +
                                  (o.loc == Location::F ? "far" : "near") + "-bank register file" + where(w, pc));
    }

    w.state = WarpState::Blocked;
    trace(w, pc, loc, "issue");
    if (moves.empty()) {
        dispatch(w.uid, loc, exec);
        return;
    }
    auto remaining = std::make_shared<std::size_t>(moves.size());
    const std::uint32_t uid = w.uid;
    for (const auto& m : moves) {
        const std::uint64_t bits = m.reg.cls == isa::RegClass::Pred    ? kWarpSize
                                   : m.reg.cls == isa::RegClass::Int64 ? 64u * kWarpSize
                                                                        : 32u * kWarpSize;
        energy_.record(EnergyEvent::RfAccess, 2);
        ++rep_.register_moves;
        tsv_send(w.core, TsvClass::Move, bits, [this, uid, m, remaining, loc, exec, pc] {
            Warp& mw = *warps_[uid];
            apply_move(mw, m);
            trace(mw, pc, m.to, "move");
            if (--*remaining == 0) dispatch(uid, loc, exec);
        });
    }
}

void Engine::dispatch(std::uint32_t uid, Location loc, LaneMask exec) {
    Warp& w = *warps_[uid];
    const std::uint32_t pc = w.stack.pc();
    const Instruction& ins = ctx_.ak->kernel.instructions[pc];
    const Decoded& d = ctx_.code[pc];
    trace(w, pc, loc, "dispatch");
    (loc == Location::N ? rep_.instr_near : rep_.instr_far)++;

    for (const auto& o : core::decide_register_locations(ins, loc, cfg_.ponb)) {
        if (o.dest) continue;
        check_read(w, w.tt.index_of(o.reg), o.loc, pc);
        energy_.record(EnergyEvent::RfAccess);
        energy_.record(EnergyEvent::OperandCollector);
    }

    switch (ins.op) {
    case Opcode::Bra: {
        ++w.in_flight;
        const LaneMask taken = ins.guard ? exec : w.stack.mask();
        schedule(now_ + 1, [this, uid, taken, pc] {
            Warp& bw = *warps_[uid];
            bw.stack.branch(ctx_.ak->kernel.instructions[pc].target_index, taken, ctx_.code[pc].rpc);
            --bw.in_flight;
            bw.state = WarpState::Ready;
        });
        return;
    }
    case Opcode::Exit:
        schedule(now_ + 1, [this, uid, exec] {
            Warp& ew = *warps_[uid];
            ew.stack.exit(exec);
            if (ew.stack.done()) warp_done(ew);
            else ew.state = WarpState::Ready;
        });
        return;
    case Opcode::BarSync:
        schedule(now_ + 1, [this, uid] {
            Warp& bw = *warps_[uid];
            bw.state = WarpState::Barrier;
            Block& b = blocks_[bw.block];
            if (++b.arrived == b.live) release_barrier(b);
        });
        return;
    case Opcode::LdGlobal:
    case Opcode::StGlobal:
        global_access(w, ins, d, exec);
        return;
    case Opcode::LdShared:
    case Opcode::StShared:
        shared_access(w, ins, d, exec);
        return;
    default: break;
    }

    // Arithmetic, conversion and compare.
    Lanes result{};
    for (int l = 0; l < kWarpSize; ++l) {
        if (!(exec >> l & 1u)) continue;
        std::uint64_t ops[3] = {0, 0, 0};
        for (std::size_t s = 0; s < d.srcs.size(); ++s) ops[s] = src_value(w, d.srcs[s], l);
        try {
            result[l] = alu::execute(ins, ops[0], ops[1], ops[2]);
        } catch (const SimulationFault& e) {
            throw SimulationFault(e.what() + where(w, pc));
        }
    }
    energy_.record_alu(ins.op);
    set_pending(w, d.dst, 1);
    ++w.in_flight;
    w.stack.advance();
    w.state = WarpState::Ready;

    const Cycle lat = ins.op == Opcode::Div ? cfg_.div_latency : cfg_.alu_latency;
    const int dst = d.dst;
    if (loc == Location::F) {
        schedule(now_ + lat, [this, uid, dst, exec, result] { commit(uid, dst, Location::F, exec, result); });
        return;
    }
    const std::uint32_t nbu = w.core * cfg_.nbus + w.subcore % cfg_.nbus;
    const std::uint32_t core = w.core;
    tsv_send(core, TsvClass::Offload, cfg_.offload_packet_bits, [this, uid, dst, exec, result, nbu, core, lat] {
        const Cycle start = std::max(now_, nbu_free_[nbu]);
        nbu_free_[nbu] = start + 1;
        schedule(start + lat, [this, uid, dst, exec, result, core] {
            tsv_send(core, TsvClass::Offload, cfg_.ack_bits,
                     [this, uid, dst, exec, result] { commit(uid, dst, Location::N, exec, result); });
        });
    });
}

void Engine::commit(std::uint32_t uid, int dst, Location loc, LaneMask exec, const Lanes& v) {
    Warp& w = *warps_[uid];
    const core::TrackEntry before = w.tt.at(dst);
    for (int l = 0; l < kWarpSize; ++l)
        if (exec >> l & 1u) w.val[dst][l] = v[l];
    if (cfg_.check_shadow) {
        if (Lanes* p = phys(w, dst, loc)) {
            if (!before.fb && !before.nb) {
                *p = w.val[dst];
            } else {
                for (int l = 0; l < kWarpSize; ++l)
                    if (exec >> l & 1u) (*p)[l] = v[l];
            }
        }
    }
    w.tt.at(dst) = core::TrackEntry{loc == Location::F, loc == Location::N};
    set_pending(w, dst, 0);
    energy_.record(EnergyEvent::RfAccess);
    retire(uid);
}

void Engine::retire(std::uint32_t uid) {
    Warp& w = *warps_[uid];
    --w.in_flight;
    if (opt_.trace)
        trace_.push_back(std::to_string(now_) + "," + std::to_string(uid) + ",,,,commit");
}

void Engine::global_access(Warp& w, const Instruction& ins, const Decoded& d, LaneMask exec) {
    const std::uint32_t pc = w.stack.pc();
    const bool store = ins.op == Opcode::StGlobal;
    const unsigned width = d.width;
    ++memory_instructions_;

    lsu::MemoryAccess acc;
    acc.mask = exec;
    acc.width = width;
    acc.store = store;
    auto op = std::make_shared<MemOp>();
    op->warp = w.uid;
    op->mask = exec;
    op->store = store;
    op->width = width;
    op->dst = store ? -1 : d.dst;
    op->dst_loc = cfg_.ponb ? Location::F : Location::N;
    const std::uint32_t rc = w.core * cfg_.subcores + w.subcore;
    op->id = RequestId{w.core, w.subcore, request_counter_[rc]++};

    for (int l = 0; l < kWarpSize; ++l) {
        if (!(exec >> l & 1u)) continue;
        const Addr a = src_value(w, d.srcs[0], l);
        if (a % width != 0) throw SimulationFault("misaligned global access" + where(w, pc));
        if (a + width > map_.capacity() || a + width < a)
            throw SimulationFault("global address out of range" + where(w, pc));
        acc.addr[l] = a;
        if (store) mem_.write(a, width, alu::truncate(isa::class_of(ins.type), src_value(w, d.srcs[1], l)));
        else op->vals[l] = mem_.read(a, width);
    }
    rep_.lanes_requested += static_cast<std::uint64_t>(std::popcount(exec));
    if (!store) set_pending(w, d.dst, 1);
    ++w.in_flight;
    w.stack.advance();
    w.state = WarpState::Ready;

    if (exec == 0) {
        schedule(now_ + 1, [this, op] { finish_mem(op); });
        return;
    }

    const std::uint32_t core = w.core;
    const lsu::Split split = lsu::split_local_remote(acc, map_, core);
    const bool hybrid = !cfg_.ponb;

    if (hybrid && cfg_.lsu_fastpath && split.remote.empty()) {
        const lsu::Coalesced co = lsu::coalesce(acc, split.local);
        if (lsu::decide_nearbank_ldst_offload(acc, co.perfectly_coalesced, w.subcore % cfg_.nbus, core, map_, false)) {
            op->fastpath = true;
            op->parts = 1;
            rep_.lanes_fastpath += kWarpSize;
            ++rep_.offloaded_ldst;
            const Addr leading = acc.addr[0];
            tsv_send(core, TsvClass::Dram, cfg_.fastpath_header_bits, [this, op, leading, width, store, pc] {
                schedule(now_ + cfg_.lsu_ext_latency, [this, op, leading, width, store, pc] {
                    lsu::MemoryAccess ex;
                    try {
                        ex.addr = lsu::lsu_extension_expand(leading, width, map_);
                    } catch (const SimulationFault& e) {
                        throw SimulationFault(e.what() + where(*warps_[op->warp], pc));
                    }
                    ex.mask = kFullMask;
                    ex.width = width;
                    const auto txs = lsu::coalesce(ex, kFullMask).transactions;
                    energy_.record(EnergyEvent::LsuExtension, txs.size());
                    auto left = std::make_shared<std::size_t>(txs.size());
                    for (const auto& tx : txs)
                        dram_access(tx.base, store, [this, op, left] {
                            if (--*left == 0) part_done(op, kFullMask);
                        });
                });
            });
            return;
        }
    }

    // Transaction path for local lanes.
    if (split.local) {
        const auto txs = lsu::coalesce(acc, split.local).transactions;
        rep_.lanes_local += static_cast<std::uint64_t>(std::popcount(split.local));
        if (hybrid) energy_.record(EnergyEvent::LsuExtension, txs.size());
        op->parts += static_cast<std::uint32_t>(txs.size());
        for (const auto& tx : txs) {
            const Addr base = tx.base;
            const LaneMask lanes = tx.lanes;
            const std::uint64_t down =
                cfg_.dram_header_bits + (store && !hybrid ? cfg_.bank_io_bits : 0);
            tsv_send(core, TsvClass::Dram, down, [this, op, base, lanes, store, core] {
                dram_access(base, store, [this, op, lanes, store, core] {
                    if (store) part_done(op, lanes);
                    else tsv_send(core, TsvClass::Dram, cfg_.bank_io_bits, [this, op, lanes] { part_done(op, lanes); });
                });
            });
        }
    }

    // LSU-Remote: one request packet per remote core.
    for (const auto& [remote, lanes] : split.remote) {
        const auto txs = lsu::coalesce(acc, lanes).transactions;
        const std::uint64_t nseg = txs.size();
        rep_.lanes_remote += static_cast<std::uint64_t>(std::popcount(lanes));
        ++op->parts;
        std::vector<Addr> bases;
        for (const auto& tx : txs) bases.push_back(tx.base);
        const RequestId id = op->id;
        const std::uint32_t rcore = remote;
        const LaneMask rl = lanes;
        auto send = [this, op, id, rcore, rl, bases, nseg, store, core] {
            const std::uint64_t bits =
                cfg_.remote_header_bits + nseg * (cfg_.dram_header_bits + (store ? cfg_.bank_io_bits : 0));
            const Cycle arrive = noc_.send(core, rcore, bits, now_);
            schedule(arrive, [this, op, id, rcore, rl, bases, store, core] {
                auto left = std::make_shared<std::size_t>(bases.size());
                auto respond = [this, op, id, rcore, rl, store, core, n = bases.size()] {
                    const std::uint64_t bits = cfg_.remote_header_bits + (store ? 0 : n * cfg_.bank_io_bits);
                    const Cycle back = noc_.send(rcore, core, bits, now_);
                    schedule(back, [this, op, id, rl] {
                        if (!(op->id == id)) throw SimulationFault("remote response carries a foreign request id");
                        part_done(op, rl);
                    });
                };
                energy_.record(EnergyEvent::LsuExtension, bases.size());
                for (Addr base : bases) {
                    const std::uint64_t down = cfg_.dram_header_bits + (store ? cfg_.bank_io_bits : 0);
                    tsv_send(rcore, TsvClass::Dram, down, [this, base, store, rcore, left, respond] {
                        dram_access(base, store, [this, store, rcore, left, respond] {
                            auto seg_done = [left, respond] {
                                if (--*left == 0) respond();
                            };
                            if (store) seg_done();
                            else tsv_send(rcore, TsvClass::Dram, cfg_.bank_io_bits, seg_done);
                        });
                    });
                }
            });
        };
        if (store && hybrid)
            tsv_send(core, TsvClass::Dram, static_cast<std::uint64_t>(std::popcount(lanes)) * width * 8, send);
        else
            send();
    }
}

void Engine::part_done(const std::shared_ptr<MemOp>& op, LaneMask lanes) {
    if (op->serviced & lanes) throw SimulationFault("memory lane serviced twice");
    op->serviced |= lanes;
    if (--op->parts == 0) finish_mem(op);
}

void Engine::finish_mem(const std::shared_ptr<MemOp>& op) {
    if (op->serviced != op->mask) throw SimulationFault("memory lanes left unserviced");
    lanes_serviced_ += static_cast<std::uint64_t>(std::popcount(op->serviced));
    const std::uint32_t uid = op->warp;
    const std::uint32_t core = warps_[uid]->core;
    auto done = [this, op, uid] {
        if (op->store) retire(uid);
        else commit(uid, op->dst, op->dst_loc, op->mask, op->vals);
    };
    if (cfg_.ponb) {
        if (op->store) tsv_send(core, TsvClass::Dram, cfg_.ack_bits, done);
        else done();
        return;
    }
    if (op->store || op->fastpath) {
        tsv_send(core, TsvClass::Offload, cfg_.ack_bits, done);
        return;
    }
    // Gathered load data goes back down into the near-bank register file.
    tsv_send(core, TsvClass::Dram, static_cast<std::uint64_t>(std::popcount(op->mask)) * op->width * 8, done);
}

void Engine::shared_access(Warp& w, const Instruction& ins, const Decoded& d, LaneMask exec) {
    const std::uint32_t pc = w.stack.pc();
    const bool store = ins.op == Opcode::StShared;
    const unsigned width = d.width;
    Block& blk = blocks_[w.block];
    std::array<std::uint64_t, kWarpSize> addrs{};
    Lanes vals{};
    for (int l = 0; l < kWarpSize; ++l) {
        if (!(exec >> l & 1u)) continue;
        const std::uint64_t a = src_value(w, d.srcs[0], l);
        if (a % width != 0) throw SimulationFault("misaligned shared access" + where(w, pc));
        if (a + width > blk.smem.size()) throw SimulationFault("shared address out of range" + where(w, pc));
        addrs[l] = a;
        if (store) {
            const std::uint64_t x = src_value(w, d.srcs[1], l);
            for (unsigned b = 0; b < width; ++b) blk.smem[a + b] = static_cast<std::uint8_t>(x >> (8 * b));
        } else {
            std::uint64_t x = 0;
            for (unsigned b = 0; b < width; ++b) x |= static_cast<std::uint64_t>(blk.smem[a + b]) << (8 * b);
            vals[l] = x;
        }
    }
    const unsigned degree = smem_conflict_degree(addrs, exec, width, cfg_.smem_banks);
    ++rep_.smem_accesses;
    rep_.smem_cycles += degree;
    energy_.record(EnergyEvent::SmemAccess, degree);

    const int dst = store ? -1 : d.dst;
    if (!store) set_pending(w, dst, 1);
    ++w.in_flight;
    w.stack.advance();
    w.state = WarpState::Ready;

    const std::uint32_t uid = w.uid, core = w.core;
    const Location loc = cfg_.ponb ? Location::F : Location::N;
    auto done = [this, uid, dst, loc, exec, vals] {
        if (dst < 0) retire(uid);
        else commit(uid, dst, loc, exec, vals);
    };
    auto port = [this, core, degree](std::function<void()> then) {
        const Cycle start = std::max(now_, smem_free_[core]);
        smem_free_[core] = start + degree;
        schedule(start + degree + cfg_.smem_latency, std::move(then));
    };
    if (cfg_.ponb) {
        port(done);
        return;
    }
    energy_.record(EnergyEvent::LsuExtension);
    auto ack = [this, core, done] { tsv_send(core, TsvClass::Offload, cfg_.ack_bits, done); };
    if (cfg_.smem == SmemLocation::Near) {
        tsv_send(core, TsvClass::Offload, cfg_.offload_packet_bits, [port, ack] { port(ack); });
        return;
    }
    const std::uint64_t lane_bits = static_cast<std::uint64_t>(std::popcount(exec)) * width * 8;
    tsv_send(core, TsvClass::Offload, cfg_.offload_packet_bits, [this, core, lane_bits, port, ack] {
        tsv_send(core, TsvClass::Smem, lane_bits, [this, core, lane_bits, port, ack] {
            port([this, core, lane_bits, ack] { tsv_send(core, TsvClass::Smem, lane_bits, ack); });
        });
    });
}

void Engine::run(const AllocatedKernel& ak) {
    setup_launch(ak);
    const std::uint32_t total = ak.kernel.grid.blocks;
    while (blocks_done_ < total) {
        if (now_ > cfg_.max_cycles)
            throw SimulationFault("cycle budget of " + std::to_string(cfg_.max_cycles) + " exhausted in kernel " +
                                  ak.kernel.name);
        drain_events();
        tick_banks();
        const bool tsv_busy = tick_tsvs();
        drain_events();
        const bool issued = blocks_done_ < total && issue_all();
        if (blocks_done_ >= total) break;
        if (issued || tsv_busy || !active_banks_.empty()) {
            ++now_;
            continue;
        }
        bool tsv_pending = false;
        for (const auto& b : tsv_) tsv_pending = tsv_pending || !b.idle();
        if (tsv_pending) {
            ++now_;
            continue;
        }
        if (foreground_ == 0)
            throw SimulationFault("deadlock in kernel " + ak.kernel.name + " at cycle " + std::to_string(now_) +
                                  ": no warp can make progress");
        now_ = std::max(now_ + 1, events_.top().at);
    }
}

SimResult Engine::finish(const std::string& names) {
    SimResult out;
    RunReport& r = rep_;
    r.kernel = names;
    r.config_hash = cfg_.hash_hex();
    r.policy = to_string(cfg_.offload);
    r.smem = to_string(cfg_.smem);
    r.rowbufs = cfg_.rowbufs;
    r.ponb = cfg_.ponb;
    r.cycles = now_;
    for (const auto& bus : tsv_)
        for (int c = 0; c < kTsvClasses; ++c) r.tsv_bits[c] += bus.bits(static_cast<TsvClass>(c));
    r.tsv_bits_total = 0;
    for (auto b : r.tsv_bits) r.tsv_bits_total += b;
    for (const auto& b : banks_) {
        const BankStats& s = b.stats();
        r.row_hits += s.hits;
        r.row_misses += s.misses;
        r.dram_reads += s.reads;
        r.dram_writes += s.writes;
        r.dram_acts += s.acts;
        r.dram_pres += s.pres;
        r.dram_refs += s.refs;
    }
    const NocStats& ns = noc_.stats();
    r.noc_packets = ns.packets;
    r.noc_bits = ns.bits_injected;
    r.noc_bit_hops = ns.bit_hops;

    energy_.record(EnergyEvent::DramRdWr, r.dram_reads + r.dram_writes);
    energy_.record(EnergyEvent::DramActPre, r.dram_acts + r.dram_pres);
    energy_.record(EnergyEvent::DramRef, r.dram_refs);
    energy_.record(EnergyEvent::TsvBit, r.tsv_bits_total);
    energy_.record(EnergyEvent::OnChipBitHop, ns.bit_hops);
    energy_.record(EnergyEvent::OffChipBit, ns.offchip_bits);
    for (int c = 0; c < kEnergyCategories; ++c) r.energy_fj[c] = energy_.category_fj(static_cast<EnergyCategory>(c));
    r.energy_total_fj = energy_.total_fj();

    out.report = r;
    out.memory = std::move(mem_);
    out.commands = std::move(commands_);
    out.trace = std::move(trace_);
    out.lanes_serviced = lanes_serviced_;
    out.memory_instructions = memory_instructions_;
    return out;
}

}  // namespace

SimResult simulate(const SimConfig& cfg, const std::vector<AllocatedKernel>& launches, MemoryImage mem,
                   const SimOptions& opt) {
    Engine e(cfg, std::move(mem), opt);
    std::string names;
    for (const auto& k : launches) {
        e.run(k);
        if (!names.empty()) names += "+";
        names += k.kernel.name;
    }
    return e.finish(names);
}

}  // namespace mpu
