#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(LOOPIN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("loopin-cli-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static inline int counter = 0;
};

fs::path write_scenario(const fs::path& dir, int seed = 42) {
    const fs::path file = dir / "scenario.json";
    std::ofstream out(file);
    out << R"({
  "seed": )" << seed << R"(,
  "horizon": 7200000,
  "epoch": 3600000,
  "pools": [{"pool_id": "gpu", "fee_bps": 30,
             "power_reserve": "1000000000", "protocol_reserve": "1000000000"}],
  "actors": {
    "miners": [{"id": "miner1", "balance": "500000000"}],
    "clients": [{"id": "client1", "balance": "300000000"}],
    "verifiers": ["ver1"]
  },
  "fee_params": {"alpha": "10000000", "beta": "1000000", "gamma": "2000000"},
  "pocps": {"chain_length": 32, "challenge_count": 8},
  "challenge_rate": 2.0,
  "challenge_threshold": 100,
  "scripted_events": [
    {"time": 0, "action": "stake", "miner": "miner1", "pool": "gpu",
     "device_key": "12345", "power": "100000000", "duration": 7200000,
     "mode": "liquidity_provider"},
    {"time": 1000, "action": "swap", "client": "client1", "pool": "gpu",
     "amount_in": "50000000"}
  ]
})";
    return file;
}

} // namespace

TEST_CASE("run writes the three output artifacts and exits 0") {
    TempDir tmp;
    const auto scenario = write_scenario(tmp.path);
    const auto out = tmp.path / "out";
    REQUIRE(run_cli("run --scenario " + scenario.string() + " --out " +
                    out.string()) == 0);
    REQUIRE(fs::exists(out / "events.jsonl"));
    REQUIRE(fs::exists(out / "metrics.csv"));
    REQUIRE(fs::exists(out / "summary.json"));
    REQUIRE(slurp(out / "metrics.csv").starts_with("time,epoch,total_minted"));
}

TEST_CASE("identical runs are byte-identical; a seed override diverges") {
    TempDir tmp;
    const auto scenario = write_scenario(tmp.path);
    const auto a = tmp.path / "a", b = tmp.path / "b", c = tmp.path / "c";
    REQUIRE(run_cli("run --scenario " + scenario.string() + " --out " + a.string()) == 0);
    REQUIRE(run_cli("run --scenario " + scenario.string() + " --out " + b.string()) == 0);
    REQUIRE(run_cli("run --scenario " + scenario.string() + " --out " + c.string() +
                    " --seed 7") == 0);
    REQUIRE(slurp(a / "events.jsonl") == slurp(b / "events.jsonl"));
    REQUIRE(slurp(a / "summary.json") == slurp(b / "summary.json"));
    REQUIRE(slurp(a / "events.jsonl") != slurp(c / "events.jsonl"));
}

TEST_CASE("missing or unreadable inputs exit with the I/O code") {
    TempDir tmp;
    REQUIRE(run_cli("run --scenario " + (tmp.path / "absent.json").string() +
                    " --out " + (tmp.path / "o").string()) == 2);
}

TEST_CASE("invalid configuration exits with the usage code") {
    TempDir tmp;
    const fs::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << R"({"seed": 1, "horizon": 100, "epoch": 7,)"
                       << R"( "pools": [], "actors": {}, )"
                       << R"("fee_params": {"alpha":"1","beta":"0","gamma":"1"}})";
    REQUIRE(run_cli("run --scenario " + bad.string() + " --out " +
                    (tmp.path / "o").string()) == 1);
}

TEST_CASE("sweep runs every value and aggregates a csv") {
    TempDir tmp;
    const auto scenario = write_scenario(tmp.path);
    const auto out = tmp.path / "sweep";
    REQUIRE(run_cli("sweep --scenario " + scenario.string() +
                    " --param challenge_rate --values 1,2,4 --out " +
                    out.string()) == 0);
    const auto csv = slurp(out / "sweep.csv");
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4); // header + 3 rows
    REQUIRE(fs::exists(out / "challenge_rate=1" / "summary.json"));
    REQUIRE(fs::exists(out / "challenge_rate=4" / "events.jsonl"));
}

TEST_CASE("sweeping an unknown parameter is a usage error") {
    TempDir tmp;
    const auto scenario = write_scenario(tmp.path);
    REQUIRE(run_cli("sweep --scenario " + scenario.string() +
                    " --param no_such_knob --values 1,2 --out " +
                    (tmp.path / "s").string()) == 1);
}

TEST_CASE("pocps-bench runs and validates its arguments") {
    REQUIRE(run_cli("pocps-bench --lambda-bits 16 --chain-length 32"
                    " --challenge-count 8 --trials 3") == 0);
    REQUIRE(run_cli("pocps-bench --trials 0") != 0);
    REQUIRE(run_cli("pocps-bench --lambda-bits 2 --trials 1") != 0);
}

TEST_CASE("report summarizes an existing run directory") {
    TempDir tmp;
    const auto scenario = write_scenario(tmp.path);
    const auto out = tmp.path / "out";
    REQUIRE(run_cli("run --scenario " + scenario.string() + " --out " +
                    out.string()) == 0);
    REQUIRE(run_cli("report --in " + out.string()) == 0);
    REQUIRE(run_cli("report --in " + (tmp.path / "nowhere").string()) == 2);
}

TEST_CASE("unknown subcommands and missing required flags are usage errors") {
    REQUIRE(run_cli("frobnicate") != 0);
    REQUIRE(run_cli("run") != 0);
}
