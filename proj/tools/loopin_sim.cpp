// loopin-sim: scenario runner, parameter sweeps, sequential-work benchmark
// and run report printer.
//
// Exit codes: 0 success, 1 user/config error, 2 environment/I-O error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loopin/loopin.hpp"

namespace fs = std::filesystem;
using loopin::Error;
using loopin::ErrorCode;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitIo = 2;

struct RunOutputs {
    std::string state_hash;
    loopin::engine::DetectionStats detection;
    std::string total_minted;
    std::string total_burned;
    std::size_t events = 0;
};

RunOutputs execute_run(const loopin::engine::ScenarioConfig& cfg, const fs::path& out) {
    loopin::engine::Engine engine(cfg);
    engine.run();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::ios_base::failure("cannot create " + out.string());
    {
        std::ofstream f(out / "events.jsonl", std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot write events.jsonl");
        f << engine.events_jsonl();
    }
    {
        std::ofstream f(out / "metrics.csv", std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot write metrics.csv");
        f << engine.metrics_csv();
    }
    {
        std::ofstream f(out / "summary.json", std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot write summary.json");
        f << engine.summary().dump(2) << '\n';
    }
    RunOutputs r;
    r.state_hash = engine.state_hash();
    r.detection = engine.detection();
    r.total_minted = engine.ledger().total_minted().str();
    r.total_burned = engine.ledger().total_burned().str();
    r.events = engine.events().size();
    return r;
}

json load_scenario_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("bad JSON: ") + e.what());
    }
    return j;
}

int cmd_run(const std::string& scenario, const std::string& out,
            std::optional<std::uint64_t> seed) {
    json j = load_scenario_json(scenario);
    if (seed) j["seed"] = *seed;
    auto cfg = loopin::engine::ScenarioConfig::from_json(j);
    execute_run(cfg, out);
    return kExitOk;
}

// Dotted parameter name -> JSON pointer; the parameter must already exist.
json::json_pointer param_pointer(const json& j, const std::string& name) {
    std::string ptr = "/";
    for (char c : name) ptr += (c == '.') ? '/' : c;
    const json::json_pointer p(ptr);
    if (!j.contains(p)) throw Error(ErrorCode::UnknownParameter, name);
    return p;
}

void assign_param(json& j, const json::json_pointer& p, const std::string& value) {
    const json& old = j.at(p);
    if (old.is_string()) j[p] = value;
    else if (old.is_boolean()) j[p] = (value == "true" || value == "1");
    else if (old.is_number_unsigned()) j[p] = std::stoull(value);
    else if (old.is_number_integer()) j[p] = std::stoll(value);
    else if (old.is_number_float()) j[p] = std::stod(value);
    else throw Error(ErrorCode::UnknownParameter, "parameter is not a scalar");
}

int cmd_sweep(const std::string& scenario, const std::string& param,
              const std::string& values_csv, const std::string& out,
              unsigned jobs) {
    json base = load_scenario_json(scenario);
    const auto pointer = param_pointer(base, param);

    std::vector<std::string> values;
    std::stringstream ss(values_csv);
    for (std::string v; std::getline(ss, v, ',');)
        if (!v.empty()) values.push_back(v);
    if (values.empty()) throw Error(ErrorCode::BadParams, "empty --values");

    struct Row {
        std::string value;
        RunOutputs outputs;
        std::string error;
    };
    std::vector<Row> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < values.size();
             i = next.fetch_add(1)) {
            rows[i].value = values[i];
            try {
                json j = base;
                assign_param(j, pointer, values[i]);
                auto cfg = loopin::engine::ScenarioConfig::from_json(j);
                rows[i].outputs = execute_run(
                    cfg, fs::path(out) / (param + "=" + values[i]));
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, values.size()));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& r : rows) {
        if (!r.error.empty())
            throw Error(ErrorCode::ConfigInvalid,
                        param + "=" + r.value + ": " + r.error);
    }

    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream agg(fs::path(out) / "sweep.csv", std::ios::binary);
    if (!agg) throw std::ios_base::failure("cannot write sweep.csv");
    agg << "param,value,state_hash,events,total_minted,total_burned,"
           "honest_pass,honest_fail,attacker_pass,attacker_fail,sybil_rejected\n";
    for (const auto& r : rows) {
        agg << param << ',' << r.value << ',' << r.outputs.state_hash << ','
            << r.outputs.events << ',' << r.outputs.total_minted << ','
            << r.outputs.total_burned << ',' << r.outputs.detection.honest_pass
            << ',' << r.outputs.detection.honest_fail << ','
            << r.outputs.detection.attacker_pass << ','
            << r.outputs.detection.attacker_fail << ','
            << r.outputs.detection.sybil_rejected << '\n';
    }
    return kExitOk;
}

std::uint64_t largest_prime_3mod4_below(unsigned bits) {
    if (bits < 4 || bits > 63) throw Error(ErrorCode::BadParams, "lambda-bits in [4,63]");
    std::uint64_t p = (std::uint64_t{1} << bits) - 1;
    while (p % 4 != 3 || !loopin::pocps::is_prime_u64(p)) --p;
    return p;
}

int cmd_pocps_bench(unsigned lambda_bits, unsigned chain_length, unsigned trials,
                    unsigned challenge_count) {
    if (trials == 0) throw Error(ErrorCode::BadParams, "trials must be > 0");
    loopin::pocps::SecurityParams params;
    params.modulus = largest_prime_3mod4_below(lambda_bits);
    params.chain_length = chain_length;
    params.challenge_count = std::min<unsigned>(challenge_count, chain_length - 1);
    params.validate();

    using clock = std::chrono::steady_clock;
    std::mt19937_64 rng(0xbeefcafe);
    std::vector<double> ratios;
    double setup_total = 0, respond_total = 0;
    for (unsigned i = 0; i < trials; ++i) {
        const std::uint64_t ek = 2 + rng() % (params.modulus - 3);
        const auto t0 = clock::now();
        const auto sr = loopin::pocps::setup(params, {ek}, 1);
        const auto t1 = clock::now();
        loopin::Hash256 nonce{};
        nonce[0] = static_cast<std::uint8_t>(i);
        const auto challenge = loopin::pocps::make_challenge(nonce, params);
        const auto t2 = clock::now();
        const auto proof = loopin::pocps::prove(sr.prover, challenge);
        const bool ok = loopin::pocps::verify(sr.verifier, challenge, proof);
        const auto t3 = clock::now();
        if (!ok) throw Error(ErrorCode::BadParams, "bench round failed to verify");
        const double setup_s = std::chrono::duration<double>(t1 - t0).count();
        const double respond_s = std::chrono::duration<double>(t3 - t2).count();
        setup_total += setup_s;
        respond_total += respond_s;
        ratios.push_back(respond_s > 0 ? setup_s / respond_s : 0.0);
    }
    std::sort(ratios.begin(), ratios.end());
    const double target =
        static_cast<double>(chain_length) /
        (params.challenge_count * std::log2(static_cast<double>(chain_length)));
    std::cout << "modulus: " << params.modulus << " (" << lambda_bits << " bits)\n"
              << "chain_length: " << chain_length
              << "  challenge_count: " << params.challenge_count
              << "  trials: " << trials << "\n"
              << "mean setup time:        " << setup_total / trials << " s\n"
              << "mean prove+verify time: " << respond_total / trials << " s\n"
              << "work factor min/median/max: " << ratios.front() << " / "
              << ratios[ratios.size() / 2] << " / " << ratios.back() << "\n"
              << "structural target L/(q*log2 L): " << target << "\n";
    if (ratios[ratios.size() / 2] < target)
        std::cout << "note: median work factor below structural target\n";
    return kExitOk;
}

int cmd_report(const std::string& in_dir) {
    std::ifstream sf(fs::path(in_dir) / "summary.json");
    if (!sf) throw std::ios_base::failure("cannot open summary.json in " + in_dir);
    json summary;
    sf >> summary;
    std::cout << "run summary (" << in_dir << ")\n"
              << "  state hash:   " << summary.value("state_hash", "?") << "\n"
              << "  events:       " << summary.value("events", 0) << "\n";
    if (summary.contains("supply")) {
        std::cout << "  total minted: " << summary["supply"].value("total_minted", "?")
                  << "\n  total burned: " << summary["supply"].value("total_burned", "?")
                  << "\n";
    }
    if (summary.contains("detection")) {
        const auto& d = summary["detection"];
        std::cout << "  challenges:   honest " << d.value("honest_pass", 0) << "/"
                  << d.value("honest_pass", 0) + d.value("honest_fail", 0)
                  << " passed, attackers " << d.value("attacker_fail", 0) << "/"
                  << d.value("attacker_pass", 0) + d.value("attacker_fail", 0)
                  << " caught, " << d.value("sybil_rejected", 0)
                  << " sybil registrations rejected\n";
    }
    if (summary.contains("net_flow")) {
        std::cout << "  net flows (atomic units):\n";
        for (auto it = summary["net_flow"].begin(); it != summary["net_flow"].end(); ++it)
            std::cout << "    " << it.key() << ": " << it.value().get<std::string>()
                      << "\n";
    }
    std::ifstream mf(fs::path(in_dir) / "metrics.csv");
    if (mf) {
        std::size_t lines = 0;
        for (std::string l; std::getline(mf, l);) ++lines;
        if (lines > 0) std::cout << "  metrics rows: " << lines - 1 << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LooPIN PinFi protocol simulator"};
    app.require_subcommand(1);

    std::string scenario, out_dir, param, values, in_dir;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1, lambda_bits = 61, chain_length = 4096, trials = 10,
             challenge_count = 16;

    const char* env_out = std::getenv("LOOPIN_OUT_DIR");
    const std::string default_out = env_out ? env_out : "out";

    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("--scenario", scenario, "scenario JSON path")->required();
    run->add_option("--out", out_dir, "output directory")->default_val(default_out);
    run->add_option("--seed", seed, "override the config seed");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--scenario", scenario)->required();
    sweep->add_option("--param", param, "dotted config path, e.g. fee_params.alpha")
        ->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--out", out_dir)->default_val(default_out);
    sweep->add_option("--jobs", jobs, "parallel sub-runs")->default_val(1u);

    auto* bench = app.add_subcommand("pocps-bench", "measure the setup/prove asymmetry");
    bench->add_option("--lambda-bits", lambda_bits)->default_val(61u);
    bench->add_option("--chain-length", chain_length)->default_val(4096u);
    bench->add_option("--trials", trials)->default_val(10u);
    bench->add_option("--challenge-count", challenge_count)->default_val(16u);

    auto* report = app.add_subcommand("report", "print a human-readable run report");
    report->add_option("--in", in_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUser;
    }

    try {
        if (run->parsed()) return cmd_run(scenario, out_dir, seed);
        if (sweep->parsed()) return cmd_sweep(scenario, param, values, out_dir, jobs);
        if (bench->parsed())
            return cmd_pocps_bench(lambda_bits, chain_length, trials, challenge_count);
        if (report->parsed()) return cmd_report(in_dir);
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    }
    return kExitUser;
}
