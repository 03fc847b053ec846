#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

#include "mfmdp/capi.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    mfmdp_string_free(s);
    return out;
}

struct CliRun {
    int rc = -1;
    std::string output;  // stdout and stderr interleaved
};

CliRun cli(const std::string& args) {
    const std::string cmd = std::string(MFMDP_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliRun run;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) run.output.append(buf, n);
    const int status = pclose(pipe);
    run.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return run;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / leaf;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("version and error bookkeeping") {
    CHECK(std::string(mfmdp_version()) == "0.1.0");

    mfmdp_model* handle = nullptr;
    CHECK(mfmdp_model_create("machine_replacement", "{}", &handle) == MFMDP_OK);
    REQUIRE(handle != nullptr);
    CHECK(std::string(mfmdp_last_error_name()).empty());
    mfmdp_model_free(handle);

    handle = nullptr;
    CHECK(mfmdp_model_create("no_such_model", "{}", &handle) == MFMDP_ERR);
    CHECK(handle == nullptr);
    CHECK(std::string(mfmdp_last_error_name()) == "UnknownModel");
    CHECK_FALSE(std::string(mfmdp_last_error_message()).empty());
}

TEST_CASE("model handles expose info and assumption reports") {
    mfmdp_model* handle = nullptr;
    REQUIRE(mfmdp_model_create("machine_replacement", R"({"beta": 0.25})", &handle) == MFMDP_OK);

    char* out = nullptr;
    REQUIRE(mfmdp_model_info(handle, &out) == MFMDP_OK);
    const json info = json::parse(take(out));
    CHECK(info["name"] == "machine_replacement");
    CHECK(info["states"] == json::array({"working", "broken"}));
    CHECK(info["params"]["beta"] == 0.25);

    out = nullptr;
    REQUIRE(mfmdp_model_validate(handle, &out) == MFMDP_OK);
    const json report = json::parse(take(out));
    CHECK(report["hard_pass"] == true);
    mfmdp_model_free(handle);

    SUBCASE("hard violations still produce a report, with the assumption code") {
        mfmdp_model* broken = nullptr;
        REQUIRE(mfmdp_model_create("machine_replacement", R"({"lambda_wb": -1})", &broken) ==
                MFMDP_OK);
        out = nullptr;
        CHECK(mfmdp_model_validate(broken, &out) == MFMDP_ERR_ASSUMPTION);
        const json bad = json::parse(take(out));
        CHECK(bad["hard_pass"] == false);
        mfmdp_model_free(broken);
    }

    SUBCASE("bad parameter payloads are rejected") {
        mfmdp_model* h = nullptr;
        CHECK(mfmdp_model_create("machine_replacement", "not json", &h) == MFMDP_ERR);
        CHECK(h == nullptr);
        CHECK(mfmdp_model_create("machine_replacement", R"({"zeta": 1})", &h) == MFMDP_ERR);
        CHECK(std::string(mfmdp_last_error_name()) == "InvalidParameter");
    }
}

TEST_CASE("config resolution fills defaults and demands seeds for stochastic runs") {
    char* out = nullptr;
    REQUIRE(mfmdp_resolve_config(R"({"model": "machine_replacement"})", "exact", &out) == MFMDP_OK);
    const json resolved = json::parse(take(out));
    CHECK(resolved["command"] == "exact");
    CHECK(resolved["out_dir"] == "mfmdp_out");
    CHECK(resolved["jobs"] == 1);
    CHECK(resolved["params"] == json::object());

    out = nullptr;
    CHECK(mfmdp_resolve_config(R"({"model": "machine_replacement"})", "simulate", &out) ==
          MFMDP_ERR);
    CHECK(std::string(mfmdp_last_error_name()) == "InvalidParameter");

    SUBCASE("the seed environment variable backs stochastic commands") {
        setenv("MFCTMDP_SEED", "77", 1);
        out = nullptr;
        REQUIRE(mfmdp_resolve_config(R"({"model": "machine_replacement"})", "simulate", &out) ==
                MFMDP_OK);
        const json sim = json::parse(take(out));
        CHECK(sim["seed"] == 77);
        CHECK(sim["replications"] == 1);
        CHECK(sim["policy"]["type"] == "open_loop");
        unsetenv("MFCTMDP_SEED");
    }

    out = nullptr;
    REQUIRE(mfmdp_resolve_config(R"({"model": "machine_replacement", "seed": 3})", "optimize",
                                 &out) == MFMDP_OK);
    CHECK(json::parse(take(out))["family"] == "one_switch");

    out = nullptr;
    CHECK(mfmdp_resolve_config("{}", "validate", &out) == MFMDP_ERR);
}

TEST_CASE("command line end to end") {
    SUBCASE("validate") {
        const CliRun ok = cli("validate --model machine_replacement");
        CHECK(ok.rc == 0);
        CHECK(ok.output.find("machine_replacement") != std::string::npos);

        CHECK(cli("validate --model machine_replacement --set lambda_wb=-1").rc == 2);
        const CliRun unknown = cli("validate --model tarpit");
        CHECK(unknown.rc == 1);
        CHECK(unknown.output.find("UnknownModel") != std::string::npos);
    }

    SUBCASE("exact solve writes the value table") {
        const fs::path dir = fresh_dir("mfmdp_cli_exact");
        const CliRun run = cli("exact --model machine_replacement --N 2 --beta 1 "
                               "--horizon infinite --out " + dir.string());
        CHECK(run.rc == 0);
        CHECK(run.output.find("value_at_initial") != std::string::npos);
        REQUIRE(fs::exists(dir / "value_table.csv"));
        CHECK(fs::exists(dir / "value_table.json"));
        // Header plus one row per point of the 2-agent lattice.
        int lines = 0;
        for (char c : slurp(dir / "value_table.csv"))
            if (c == '\n') ++lines;
        CHECK(lines == 4);
        fs::remove_all(dir);
    }

    SUBCASE("optimize reports the switch location") {
        const fs::path dir = fresh_dir("mfmdp_cli_opt");
        const CliRun run = cli("optimize --model machine_replacement --family one_switch --out " +
                               dir.string());
        CHECK(run.rc == 0);
        CHECK(run.output.find("t1") != std::string::npos);
        CHECK(fs::exists(dir / "optimize_result.json"));
        CHECK(fs::exists(dir / "optimize_trajectory.csv"));
        fs::remove_all(dir);
    }

    SUBCASE("simulate writes trajectories with sidecars") {
        const fs::path dir = fresh_dir("mfmdp_cli_sim");
        const CliRun run = cli("simulate --model machine_replacement --N 50 --replications 2 "
                               "--seed 9 --out " + dir.string());
        CHECK(run.rc == 0);
        CHECK(fs::exists(dir / "trajectory_000.csv"));
        CHECK(fs::exists(dir / "trajectory_000.json"));
        CHECK(fs::exists(dir / "trajectory_001.csv"));
        fs::remove_all(dir);
    }

    SUBCASE("dry runs only resolve the configuration") {
        const fs::path dir = fresh_dir("mfmdp_cli_dry");
        const CliRun run = cli("simulate --model machine_replacement --seed 4 --dry-run --out " +
                               dir.string());
        CHECK(run.rc == 0);
        CHECK(run.output.find("\"command\"") != std::string::npos);
        CHECK_FALSE(fs::exists(dir));
    }

    SUBCASE("studies rerun byte-identically") {
        const fs::path dir = fresh_dir("mfmdp_cli_study");
        const std::string args = "study rate --model machine_replacement --Ns 10,20 --mode exact "
                                 "--seed 5 --out " + dir.string();
        CHECK(cli(args).rc == 0);
        REQUIRE(fs::exists(dir / "study.json"));
        const std::string first = slurp(dir / "study.json");
        CHECK(cli(args).rc == 0);
        CHECK(slurp(dir / "study.json") == first);
        CHECK_FALSE(first.empty());
        fs::remove_all(dir);
    }
}
