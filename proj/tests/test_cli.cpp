#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "wattprint/trace_io.hpp"

using namespace wattprint;
using testsupport::TempDir;
using nlohmann::json;

namespace {

const std::string kCli = WATTPRINT_CLI_PATH;
const std::string kSourceDir = WATTPRINT_SOURCE_DIR;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
    const std::string cmd =
        kCli + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe))
        r.output.append(buf, n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string catalog_flags() {
    return " --cpu-tdp-csv " + kSourceDir + "/data/cpu_tdp.csv" +
           " --gpu-tdp-csv " + kSourceDir + "/data/gpu_tdp.csv" +
           " --ci-csv " + kSourceDir + "/data/carbon_intensity.csv";
}

std::vector<json> json_rows(const std::string& text) {
    std::vector<json> rows;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(json::parse(line));
    return rows;
}

const json* find_row(const std::vector<json>& rows, const std::string& type,
                     const std::string& label = "") {
    for (const auto& row : rows) {
        if (row.value("type", "") != type) continue;
        if (!label.empty() && row.value("label", "") != label &&
            row.value("strategy", "") != label)
            continue;
        return &row;
    }
    return nullptr;
}

std::string full_trace_file(const TempDir& tmp) {
    SynthSpec spec;
    spec.hardware = testsupport::big_node();
    spec.hardware.region_code = "FR";
    spec.interval_s = 10.0;
    SynthSegment seg;
    seg.duration_s = 600.0;
    seg.levels.package_power_w = {120.0, 120.0};
    seg.levels.dram_power_w = {40.0, 40.0};
    seg.levels.gpu_power_w = {200.0, 200.0, 200.0, 200.0,
                              200.0, 200.0, 200.0, 200.0};
    seg.levels.gpu_utilization = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    seg.levels.process_cpu_load = 0.2;
    seg.levels.machine_cpu_load = 0.4;
    seg.levels.process_rss_gb = 32.0;
    seg.levels.machine_memory_gb = 200.0;
    seg.levels.wattmeter_w = 2000.0;
    spec.segments = {seg};
    const std::string path = (tmp.path() / "full.jsonl").string();
    save_trace(synth_trace(spec), path);
    return path;
}

} // namespace

TEST_CASE("estimate reproduces the offline calculator chain") {
    const auto r = run("estimate --cpu-model UnknownChip --sockets 1 "
                       "--cores-per-socket 16 --gpu-model UnknownGPU --gpus 1 "
                       "--memory-gb 64 --runtime 3600 --region FR" +
                       catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    const auto* ga = find_row(rows, "emission_report", "GA");
    REQUIRE(ga != nullptr);
    CHECK(ga->at("total_wh").get<double>() == doctest::Approx(415.84));
    CHECK(ga->at("energy_with_pue_wh").get<double>() ==
          doctest::Approx(694.453).epsilon(1e-4));
    CHECK(ga->at("pue").get<double>() == 1.67);
    CHECK(ga->at("carbon_intensity_g_per_kwh").get<double>() == 64.0);
}

TEST_CASE("estimate honors the pragmatic scaling factor") {
    const std::string base =
        "estimate --cpu-model X --sockets 1 --cores-per-socket 4 "
        "--memory-gb 16 --runtime 3600 --region FR" +
        catalog_flags();
    const auto once = run(base);
    const auto five = run(base + " --scaling-factor 5");
    REQUIRE(once.exit_code == 0);
    REQUIRE(five.exit_code == 0);
    const auto once_rows = json_rows(once.output);
    const auto five_rows = json_rows(five.output);
    const auto* a = find_row(once_rows, "emission_report", "GA");
    const auto* b = find_row(five_rows, "emission_report", "GA");
    REQUIRE(a != nullptr);
    REQUIRE(b != nullptr);
    CHECK(b->at("emissions_g").get<double>() ==
          doctest::Approx(5.0 * a->at("emissions_g").get<double>()));
}

TEST_CASE("mlco2 estimate without region or intensity fails") {
    const auto r = run("estimate --strategy mlco2 --gpu-model \"NVIDIA TITAN "
                       "V\" --gpus 1 --cpu-model X --memory-gb 8 "
                       "--runtime 3600" +
                       catalog_flags(),
                       true);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("intensity-required") != std::string::npos);
}

TEST_CASE("replay emits the full strategy column set") {
    TempDir tmp;
    const auto trace = full_trace_file(tmp);
    const auto r = run("replay " + trace + catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    for (const char* label : {"GA", "CC(P)", "CC(M)", "E2(P)", "E2(M)", "CT",
                              "EIT", "MLCO2", "CMLTR"}) {
        INFO("label ", label);
        CHECK(find_row(rows, "emission_report", label) != nullptr);
    }
    CHECK(find_row(rows, "wattmeter_comparison", "CC(M)") != nullptr);
}

TEST_CASE("replay is byte-identical across runs") {
    TempDir tmp;
    const auto trace = full_trace_file(tmp);
    const auto a = run("replay " + trace + catalog_flags());
    const auto b = run("replay " + trace + catalog_flags());
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(!a.output.empty());
}

TEST_CASE("replay of a counter-less trace degrades per strategy") {
    TempDir tmp;
    SynthSpec spec;
    spec.hardware = testsupport::small_spec(8, 0, 32.0);
    spec.interval_s = 10.0;
    SynthSegment seg;
    seg.duration_s = 300.0;
    seg.levels.process_cpu_load = 0.25;
    seg.levels.machine_cpu_load = 0.5;
    seg.levels.process_rss_gb = 4.0;
    seg.levels.machine_memory_gb = 16.0;
    spec.segments = {seg};
    const std::string path = (tmp.path() / "nocounters.jsonl").string();
    save_trace(synth_trace(spec), path);

    const auto r = run("replay " + path + " --region FR" + catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    const auto* eit = find_row(rows, "strategy_error", "EIT");
    REQUIRE(eit != nullptr);
    CHECK(eit->at("error_code").get<std::string>() == "rapl-required");
    const auto* ct = find_row(rows, "strategy_error", "CT");
    CHECK(ct != nullptr);
    const auto* cc = find_row(rows, "emission_report", "CC(M)");
    REQUIRE(cc != nullptr);
    // TDP fallback: 85 W x 0.5 x (300/3600) h
    CHECK(cc->at("cpu_wh").get<double>() == doctest::Approx(3.54167).epsilon(1e-4));
}

TEST_CASE("golden replay output") {
    const std::string golden_trace = kSourceDir + "/tests/golden/trace.jsonl";
    const std::string golden_report = kSourceDir + "/tests/golden/replay.jsonl";
    const auto r = run("replay " + golden_trace + " --region FR" +
                       catalog_flags());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(golden_report);
    REQUIRE(in.good());
    std::stringstream expected;
    expected << in.rdbuf();
    CHECK(r.output == expected.str());
}

TEST_CASE("replay of a channel-less trace keeps the offline strategies") {
    TempDir tmp;
    SynthSpec spec;
    spec.hardware = testsupport::small_spec(8, 1, 32.0);
    spec.hardware.gpus.model_name = "NVIDIA TITAN V";
    spec.interval_s = 10.0;
    SynthSegment seg;
    seg.duration_s = 120.0; // timestamps only, no sensor was available
    spec.segments = {seg};
    const std::string path = (tmp.path() / "bare.jsonl").string();
    save_trace(synth_trace(spec), path);

    const auto r = run("replay " + path + " --region FR" + catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    for (const char* label : {"GA", "MLCO2", "CMLTR", "CC(M)"}) {
        INFO("label ", label);
        CHECK(find_row(rows, "emission_report", label) != nullptr);
    }
    for (const char* strategy : {"E2", "CT", "EIT"}) {
        INFO("strategy ", strategy);
        CHECK(find_row(rows, "strategy_error", strategy) != nullptr);
    }
    const auto* cc = find_row(rows, "emission_report", "CC(M)");
    CHECK_FALSE(cc->at("warnings").empty());
}

TEST_CASE("a pue declared in the trace hardware drives the replay") {
    TempDir tmp;
    SynthSpec spec;
    spec.hardware = testsupport::small_spec(8, 1, 32.0);
    spec.hardware.pue = 1.0; // personal computer: no facility overhead
    spec.interval_s = 10.0;
    SynthSegment seg;
    seg.duration_s = 120.0;
    seg.levels.process_cpu_load = 0.5;
    seg.levels.machine_cpu_load = 0.5;
    spec.segments = {seg};
    const std::string path = (tmp.path() / "pc.jsonl").string();
    save_trace(synth_trace(spec), path);

    const auto r =
        run("replay " + path + " --strategy ga --region FR" + catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    const auto* ga = find_row(rows, "emission_report", "GA");
    REQUIRE(ga != nullptr);
    CHECK(ga->at("pue").get<double>() == 1.0);

    // without the declaration the strategy default applies
    auto unspecified = spec;
    unspecified.hardware.pue.reset();
    const std::string path2 = (tmp.path() / "dc.jsonl").string();
    save_trace(synth_trace(unspecified), path2);
    const auto r2 =
        run("replay " + path2 + " --strategy ga --region FR" + catalog_flags());
    const auto rows2 = json_rows(r2.output);
    CHECK(find_row(rows2, "emission_report", "GA")->at("pue").get<double>() ==
          1.67);
}

TEST_CASE("compare produces idle and overhead sections") {
    TempDir tmp;
    const auto active = full_trace_file(tmp);

    SynthSpec idle_spec;
    idle_spec.hardware = testsupport::big_node();
    idle_spec.interval_s = 10.0;
    SynthSegment idle_seg;
    idle_seg.duration_s = 600.0;
    idle_seg.levels.wattmeter_w = 745.0;
    idle_spec.segments = {idle_seg};
    const std::string idle_path = (tmp.path() / "idle.jsonl").string();
    save_trace(synth_trace(idle_spec), idle_path);

    SynthSpec base_spec = idle_spec;
    base_spec.segments[0].duration_s = 580.0;
    base_spec.segments[0].levels.wattmeter_w = 2000.0;
    const std::string base_path = (tmp.path() / "base.jsonl").string();
    save_trace(synth_trace(base_spec), base_path);

    const auto r = run("compare " + active + " --idle-trace " + idle_path +
                       " --baseline-trace " + base_path + " --region FR" +
                       catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    const auto* idle = find_row(rows, "idle_baseline");
    REQUIRE(idle != nullptr);
    CHECK(idle->at("idle_fraction").get<double>() ==
          doctest::Approx(745.0 / 2000.0).epsilon(1e-6));
    const auto* overhead = find_row(rows, "overhead");
    REQUIRE(overhead != nullptr);
    CHECK(overhead->at("extra_time_s").get<double>() ==
          doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("compare without a wattmeter exits nonzero") {
    TempDir tmp;
    SynthSpec spec;
    spec.hardware = testsupport::small_spec();
    spec.interval_s = 10.0;
    SynthSegment seg;
    seg.duration_s = 60.0;
    seg.levels.gpu_power_w = {100.0};
    seg.levels.gpu_utilization = {0.5};
    spec.segments = {seg};
    const std::string path = (tmp.path() / "nowm.jsonl").string();
    save_trace(synth_trace(spec), path);
    const auto r = run("compare " + path + catalog_flags(), true);
    CHECK(r.exit_code != 0);
}

TEST_CASE("report subcommand re-renders json-lines to csv and human") {
    TempDir tmp;
    const auto trace = full_trace_file(tmp);
    const std::string report_path = (tmp.path() / "report.jsonl").string();
    const auto r = run("replay " + trace + " --output " + report_path +
                       catalog_flags());
    REQUIRE(r.exit_code == 0);

    const auto csv = run("report " + report_path + " --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.output.find("strategy,mode,") != std::string::npos);
    CHECK(csv.output.find("GA,process,") != std::string::npos);

    const auto human = run("report " + report_path + " --format human");
    REQUIRE(human.exit_code == 0);
    CHECK(human.output.find("Energy w/o PUE (Wh)") != std::string::npos);
}

TEST_CASE("track records, reports and propagates the child exit code") {
    TempDir tmp;
    const std::string trace_path = (tmp.path() / "track.jsonl").string();
    const std::string report_path = (tmp.path() / "track-report.jsonl").string();

    SUBCASE("exit code propagation") {
        const auto r = run("track --interval 0.1 --trace " + trace_path +
                           " --output " + report_path + " --region FR" +
                           catalog_flags() +
                           " -- sh -c \"sleep 0.3; exit 3\"");
        CHECK(r.exit_code == 3);
        const auto trace = load_trace(trace_path);
        CHECK(trace.duration_s() >= 0.25);
        std::ifstream report(report_path);
        CHECK(report.good());
    }
    SUBCASE("spawn failure uses a distinct exit code") {
        const auto r = run("track --interval 0.1 --trace " + trace_path +
                           catalog_flags() + " -- " +
                           (tmp.path() / "missing-binary").string(),
                           true);
        CHECK(r.exit_code == 127);
    }
}

TEST_CASE("config precedence: flags beat environment beats config file") {
    TempDir tmp;
    const std::string env_catalog =
        tmp.file("env_cpu.csv", "model,tdp_watts\nZeta,44\n");
    const std::string cfg_catalog =
        tmp.file("cfg_cpu.csv", "model,tdp_watts\nZeta,66\n");
    const std::string config =
        tmp.file("wattprint.conf", "cpu_tdp_csv=" + cfg_catalog + "\n");
    const std::string base =
        "estimate --cpu-model Zeta --sockets 1 --cores-per-socket 4 "
        "--memory-gb 16 --runtime 3600 --region FR --config " +
        config + " --gpu-tdp-csv " + kSourceDir + "/data/gpu_tdp.csv" +
        " --ci-csv " + kSourceDir + "/data/carbon_intensity.csv";

    const auto cpu_wh_of = [&](const RunResult& r) {
        const auto rows = json_rows(r.output);
        const auto* ga = find_row(rows, "emission_report", "GA");
        REQUIRE(ga != nullptr);
        return ga->at("cpu_wh").get<double>();
    };

    // config file only
    const auto from_cfg = run(base);
    REQUIRE(from_cfg.exit_code == 0);
    CHECK(cpu_wh_of(from_cfg) == doctest::Approx(66.0));

    // environment overrides the config file
    RunResult from_env;
    {
        const std::string cmd = "WATTPRINT_CPU_TDP_CSV=" + env_catalog + " " +
                                kCli + " " + base + " 2>/dev/null";
        FILE* pipe = ::popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        char buf[4096];
        while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe))
            from_env.output.append(buf, n);
        const int status = ::pclose(pipe);
        from_env.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    REQUIRE(from_env.exit_code == 0);
    CHECK(cpu_wh_of(from_env) == doctest::Approx(44.0));

    // an explicit flag overrides both
    const std::string flag_catalog =
        tmp.file("flag_cpu.csv", "model,tdp_watts\nZeta,88\n");
    const auto from_flag = run(base + " --cpu-tdp-csv " + flag_catalog);
    REQUIRE(from_flag.exit_code == 0);
    CHECK(cpu_wh_of(from_flag) == doctest::Approx(88.0));
}

TEST_CASE("fixture-backed intensity provider drives replay lookups") {
    TempDir tmp;
    const auto trace = full_trace_file(tmp);
    const std::string fixture = kSourceDir + "/data/ci_fixture.csv";
    const auto r = run("replay " + trace + " --region FR --ci-fixture " +
                       fixture + " --ci-date 2023-03-29" + catalog_flags());
    REQUIRE(r.exit_code == 0);
    const auto rows = json_rows(r.output);
    const auto* ga = find_row(rows, "emission_report", "GA");
    REQUIRE(ga != nullptr);
    CHECK(ga->at("carbon_intensity_g_per_kwh").get<double>() == 137.0);
}

TEST_CASE("track derives the interval from a single selected strategy") {
    TempDir tmp;
    const std::string trace_path = (tmp.path() / "cc.jsonl").string();
    const auto r = run("track --strategy cc --trace " + trace_path +
                       " --region FR" + catalog_flags() +
                       " -- sh -c \"exit 0\"");
    REQUIRE(r.exit_code == 0);
    const auto trace = load_trace(trace_path);
    CHECK(trace.nominal_interval_s == 15.0);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("replay", true).exit_code == 1);
    CHECK(run("estimate --memory-gb 1 --runtime 10 --strategy nope" +
                  catalog_flags(),
              true)
              .exit_code == 1);
}
