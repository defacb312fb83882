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

// mpu: command-line driver for the compiler, simulator and experiments.

#include "mpu/compiler.hpp"
#include "mpu/config.hpp"
#include "mpu/experiment.hpp"
#include "mpu/interpreter.hpp"
#include "mpu/isa.hpp"
#include "mpu/memory.hpp"
#include "mpu/simulator.hpp"
#include "mpu/workloads.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace mpu;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& data) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << data;
}

Addr parse_addr(const ordered_json& v) {
    if (v.is_number_unsigned()) return v.get<Addr>();
    return std::stoull(v.get<std::string>(), nullptr, 0);
}

std::string hex(Addr a) {
    std::ostringstream os;
    os << "0x" << std::hex << a;
    return os.str();
}

// Memory manifest: {"kernels": [file], "load": [{"base", "file"}],
// "outputs": [{"name", "base", "length", "expected"?}]}. Paths are relative
// to the manifest.
struct Manifest {
    std::vector<std::string> kernels;
    MemoryImage memory;
    std::vector<Region> outputs;
    std::map<std::string, std::string> expected;  // output name -> file
};

Manifest load_manifest(const fs::path& path) {
    const auto j = ordered_json::parse(read_file(path));
    const fs::path dir = path.parent_path();
    Manifest m;
    for (const auto& k : j.value("kernels", ordered_json::array())) m.kernels.push_back((dir / k.get<std::string>()).string());
    for (const auto& e : j.value("load", ordered_json::array())) {
        const std::string data = read_file(dir / e.at("file").get<std::string>());
        m.memory.write_bytes(parse_addr(e.at("base")), std::vector<std::uint8_t>(data.begin(), data.end()));
    }
    for (const auto& e : j.value("outputs", ordered_json::array())) {
        m.outputs.push_back(Region{e.at("name").get<std::string>(), parse_addr(e.at("base")), e.at("length").get<std::uint64_t>()});
        if (e.contains("expected")) m.expected[m.outputs.back().name] = (dir / e.at("expected").get<std::string>()).string();
    }
    return m;
}

// Kernels from the command line, else the manifest's launch list.
std::vector<std::string> kernel_files(const std::vector<std::string>& given, const Manifest& m) {
    if (!given.empty()) return given;
    if (m.kernels.empty()) throw std::invalid_argument("no kernels given and the manifest lists none");
    return m.kernels;
}

// Names of outputs whose bytes differ from the manifest's expected files.
std::vector<std::string> expected_mismatches(const Manifest& m, const MemoryImage& mem) {
    std::vector<std::string> bad;
    for (const auto& r : m.outputs) {
        auto it = m.expected.find(r.name);
        if (it == m.expected.end()) continue;
        const std::string want = read_file(it->second);
        const auto got = mem.read_bytes(r.base, r.length);
        if (want != std::string(got.begin(), got.end())) bad.push_back(r.name);
    }
    return bad;
}

void dump_regions(const fs::path& dir, const MemoryImage& mem, const std::vector<Region>& regions) {
    for (const auto& r : regions) {
        const auto bytes = mem.read_bytes(r.base, r.length);
        write_file(dir / (r.name + ".bin"), std::string(bytes.begin(), bytes.end()));
    }
}

SimConfig make_config(const std::string& file, const std::vector<std::string>& sets, bool desk) {
    SimConfig cfg = desk ? SimConfig::desk() : SimConfig();
    if (!file.empty()) cfg = SimConfig::load(file, cfg);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::vector<isa::Kernel> load_kernels(const std::vector<std::string>& files) {
    std::vector<isa::Kernel> ks;
    for (const auto& f : files) {
        try {
            ks.push_back(isa::parse_kernel(read_file(f)));
        } catch (const isa::ParseError& e) {
            throw std::runtime_error(f + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
        }
        isa::require_valid(ks.back());
    }
    return ks;
}

void write_reports(const fs::path& dir, const std::vector<RunReport>& reports) {
    fs::create_directories(dir);
    std::string csv = RunReport::csv_header() + "\n";
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) {
        csv += r.csv_row() + "\n";
        arr.push_back(ordered_json::parse(r.to_json()));
    }
    write_file(dir / "report.csv", csv);
    write_file(dir / "report.json", (reports.size() == 1 ? arr[0] : arr).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MPU near-bank GPU simulator"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> sets;
    bool full_topology = false;
    auto add_config_opts = [&](CLI::App* c) {
        c->add_option("--config", config_file, "Config file of key = value lines");
        c->add_option("--set", sets, "Override one config key (key=value), repeatable");
        c->add_flag("--full", full_topology, "Start from the 8-processor topology instead of the desk config");
    };

    // compile
    auto* compile = app.add_subcommand("compile", "Annotate and register-allocate a kernel");
    std::string asm_file, compile_out;
    bool unannotated = false;
    compile->add_option("asm", asm_file, "Kernel assembly")->required()->check(CLI::ExistingFile);
    compile->add_option("-o,--output", compile_out, "Write the annotated kernel here");
    compile->add_flag("--unannotated", unannotated, "Skip location annotation (every register in both files)");

    // run
    auto* run = app.add_subcommand("run", "Simulate kernels on a memory image and write reports");
    std::vector<std::string> run_kernels;
    std::string mem_manifest, report_dir = "report", trace_file;
    bool no_oracle = false;
    run->add_option("kernels", run_kernels, "Kernel files, launched in order (default: the manifest's list)")
        ->check(CLI::ExistingFile);
    run->add_option("--mem", mem_manifest, "Memory manifest (JSON)")->check(CLI::ExistingFile);
    run->add_option("--report", report_dir, "Report directory");
    run->add_option("--trace", trace_file, "Write the per-instruction pipeline trace here");
    run->add_flag("--no-oracle", no_oracle, "Skip the reference interpreter comparison");
    add_config_opts(run);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an ablation sweep over bundled workloads");
    std::string sweep_mode, sweep_out;
    std::vector<std::string> sweep_workloads{"all"};
    std::uint64_t seed = 1;
    sweep->add_option("mode", sweep_mode, "rowbuf | policy | smem | ponb | all")->required();
    sweep->add_option("-w,--workload", sweep_workloads, "Workload names or 'all'");
    sweep->add_option("-o,--output", sweep_out, "Comparative CSV path (default: stdout)");
    sweep->add_option("--seed", seed, "Input generation seed");
    add_config_opts(sweep);

    // check
    auto* check = app.add_subcommand("check", "Run the reference interpreter only");
    std::vector<std::string> check_kernels;
    std::string check_out;
    check->add_option("kernels", check_kernels, "Kernel files, launched in order (default: the manifest's list)")
        ->check(CLI::ExistingFile);
    check->add_option("--mem", mem_manifest, "Memory manifest (JSON)")->check(CLI::ExistingFile);
    check->add_option("-o,--output", check_out, "Directory for output region dumps");

    // legality
    auto* legality = app.add_subcommand("legality", "Check a DRAM command trace CSV against the timing rules");
    std::string trace_csv;
    legality->add_option("trace", trace_csv, "Command trace CSV")->required()->check(CLI::ExistingFile);
    add_config_opts(legality);

    // workload
    auto* workload = app.add_subcommand("workload", "Export a bundled workload: kernels, inputs, manifest, expected outputs");
    std::string wl_name, wl_dir;
    workload->add_option("name", wl_name, "axpy | gemv | pr | ttrans | hist | pingpong")->required();
    workload->add_option("-d,--dir", wl_dir, "Output directory")->required();
    workload->add_option("--seed", seed, "Input generation seed");

    // config
    auto* config = app.add_subcommand("config", "Print the effective configuration");
    add_config_opts(config);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compile) {
            const auto ks = load_kernels({asm_file});
            const auto ak = compiler::compile(ks[0], !unannotated);
            const std::string text = isa::print_kernel(compiler::apply_annotation(ak.kernel, ak.loc));
            if (compile_out.empty()) std::cout << text;
            else write_file(compile_out, text);
            std::cerr << compiler::location_report_csv(ks[0].name, compiler::location_report(ak.loc))
                      << "far_slots=" << ak.far_slots_used << " near_slots=" << ak.near_slots_used
                      << " passes=" << ak.loc.passes << "\n";
            return 0;
        }

        if (*run) {
            const SimConfig cfg = make_config(config_file, sets, !full_topology);
            Manifest m;
            if (!mem_manifest.empty()) m = load_manifest(mem_manifest);
            const auto files = kernel_files(run_kernels, m);
            Workload w;
            w.name = fs::path(files.back()).stem().string();
            w.kernels = load_kernels(files);
            w.memory = m.memory;
            w.outputs = m.outputs;
            experiment::RunOptions opt;
            opt.trace = !trace_file.empty();
            experiment::RunOutput out;
            if (no_oracle) {
                std::vector<compiler::AllocatedKernel> launches;
                for (const auto& k : w.kernels) launches.push_back(compile_for(cfg, k));
                out.sim = simulate(cfg, launches, w.memory, SimOptions{opt.trace});
            } else {
                out = experiment::run_workload(w, cfg, experiment::reference_memory(w), opt);
            }
            write_reports(report_dir, {out.sim.report});
            write_file(fs::path(report_dir) / "config.txt", cfg.dump());
            dump_regions(report_dir, out.sim.memory, w.outputs);
            if (opt.trace) {
                std::string t = "cycle,warp,pc,opcode,loc,event\n";
                for (const auto& l : out.sim.trace) t += l + "\n";
                write_file(trace_file, t);
            }
            const auto& r = out.sim.report;
            const auto bad = expected_mismatches(m, out.sim.memory);
            std::cout << w.name << ": cycles=" << r.cycles << " tsv_bytes=" << r.tsv_bytes_total()
                      << " miss_rate=" << r.miss_rate() << " energy_fj=" << r.energy_total_fj
                      << (no_oracle ? "" : " oracle=match");
            if (!m.expected.empty()) std::cout << " expected=" << (bad.empty() ? "match" : "MISMATCH");
            std::cout << "\n";
            for (const auto& n : bad) std::cerr << "output '" << n << "' differs from its expected file\n";
            return bad.empty() ? 0 : 1;
        }

        if (*sweep) {
            const SimConfig cfg = make_config(config_file, sets, !full_topology);
            const auto mode = experiment::parse_sweep_mode(sweep_mode);
            std::vector<std::string> names;
            for (const auto& n : sweep_workloads) {
                if (n == "all") {
                    auto all = workload_names();
                    names.insert(names.end(), all.begin(), all.end());
                } else {
                    names.push_back(n);
                }
            }
            std::vector<experiment::LegResult> rows;
            for (const auto& n : names) {
                auto part = experiment::run_sweep(make_workload(n, seed), mode, cfg);
                for (const auto& r : part)
                    std::cerr << n << " " << r.leg << ": cycles=" << r.report.cycles
                              << " tsv_bytes=" << r.report.tsv_bytes_total() << " miss_rate=" << r.report.miss_rate() << "\n";
                rows.insert(rows.end(), part.begin(), part.end());
            }
            const std::string csv = experiment::sweep_csv(rows);
            if (sweep_out.empty()) std::cout << csv;
            else write_file(sweep_out, csv);
            return 0;
        }

        if (*check) {
            Manifest m;
            if (!mem_manifest.empty()) m = load_manifest(mem_manifest);
            const auto ks = load_kernels(kernel_files(check_kernels, m));
            InterpreterStats total;
            for (const auto& k : ks) {
                const auto s = interpret_reference(k, m.memory);
                total.thread_instructions += s.thread_instructions;
                total.global_loads += s.global_loads;
                total.global_stores += s.global_stores;
            }
            if (!check_out.empty()) dump_regions(check_out, m.memory, m.outputs);
            std::cout << "thread_instructions=" << total.thread_instructions << " global_loads=" << total.global_loads
                      << " global_stores=" << total.global_stores << "\n";
            return 0;
        }

        if (*legality) {
            const SimConfig cfg = make_config(config_file, sets, !full_topology);
            const auto trace = parse_command_trace_csv(read_file(trace_csv));
            const auto rep = check_command_trace(trace, DramTiming::from(cfg), cfg.rowbufs);
            std::cout << "commands=" << rep.commands << " refreshes=" << rep.refreshes
                      << " violations=" << rep.violation_count << "\n";
            for (const auto& v : rep.violations) std::cout << "  " << v << "\n";
            return rep.ok() ? 0 : 1;
        }

        if (*workload) {
            const Workload w = make_workload(wl_name, seed);
            const fs::path dir = wl_dir;
            ordered_json manifest;
            manifest["workload"] = w.name;
            manifest["seed"] = seed;
            manifest["kernels"] = ordered_json::array();
            for (const auto& k : w.kernels) {
                write_file(dir / (k.name + ".mpu"), isa::print_kernel(k));
                manifest["kernels"].push_back(k.name + ".mpu");
            }
            manifest["load"] = ordered_json::array();
            for (const auto& r : w.inputs) {
                const auto bytes = w.memory.read_bytes(r.base, r.length);
                write_file(dir / (r.name + ".bin"), std::string(bytes.begin(), bytes.end()));
                manifest["load"].push_back({{"base", hex(r.base)}, {"file", r.name + ".bin"}});
            }
            manifest["outputs"] = ordered_json::array();
            for (const auto& r : w.outputs) {
                const auto bytes = w.expected.read_bytes(r.base, r.length);
                write_file(dir / "expected" / (r.name + ".bin"), std::string(bytes.begin(), bytes.end()));
                manifest["outputs"].push_back(
                    {{"name", r.name}, {"base", hex(r.base)}, {"length", r.length}, {"expected", "expected/" + r.name + ".bin"}});
            }
            write_file(dir / "manifest.json", manifest.dump(2) + "\n");
            std::cout << "wrote " << w.kernels.size() << " kernel(s) and " << w.inputs.size() << " input(s) to " << dir.string()
                      << "\n";
            return 0;
        }

        if (*config) {
            std::cout << make_config(config_file, sets, !full_topology).dump();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
