// Batch front end: lmfg <subcommand> --config run.json [--out DIR] [--threads N] [--seed S] [--strict]
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "lmfg/parallel.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lmfg;
using namespace lmfg::cli;

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

int fail(const std::string& what, int code) {
    std::cerr << "lmfg: " << what << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Levy mean field game workbench"};
    std::string subcommand, config_path, out_dir;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    app.add_option("subcommand", subcommand, "kernel | hjb | fp | mfg | linsys | master | check")
        ->required()
        ->check(CLI::IsMember(kSubcommands));
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (default: the config's \"output\")");
    app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_flag("--strict", strict, "treat warnings as failures");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // Everything up to here can fail without leaving artifacts behind.
    RunConfig cfg;
    json raw;
    Setup setup;
    try {
        std::ifstream is(config_path);
        if (!is) return fail("cannot read config " + config_path, 2);
        try {
            raw = json::parse(is);
        } catch (const json::exception& e) {
            return fail(std::string("config is not valid JSON: ") + e.what(), 2);
        }
        cfg = parse_run_config(raw);
        if (seed) cfg.seed = *seed;
        validate_for(cfg, subcommand);
        setup = prepare(cfg, subcommand);
    } catch (const Error& e) {
        return fail(e.what(), exit_code_for(e.kind()) == 3 ? 3 : 2);
    }
    set_threads(threads);

    const fs::path out = out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) return fail("cannot create " + out.string() + ": " + ec.message(), 2);
    write_json(out / "run_config.json", raw);

    json report{{"subcommand", subcommand}, {"scenario", cfg.scenario}, {"seed", cfg.seed}, {"threads", thread_count()}};
    RunReport r;
    try {
        r = run_command(subcommand, cfg, setup, out);
    } catch (const Error& e) {
        // Partial artifacts stay; the error is recorded next to them.
        const int code = exit_code_for(e.kind());
        report["error"] = {{"message", e.what()}, {"exit_code", code}};
        report["exit_code"] = code;
        write_json(out / "report.json", report);
        return fail(e.what(), code);
    }
    if (strict && !r.warnings.empty())
        r.verdicts.push_back({"no warnings (strict)", static_cast<double>(r.warnings.size()), 0.0, false,
                              "run hygiene"});

    json verdicts = json::array();
    for (const auto& v : r.verdicts) {
        verdicts.push_back(to_json(v));
        std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": value " << v.value << ", tolerance " << v.tolerance
                  << '\n';
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    const int code = r.all_pass() ? 0 : 1;
    write_json(out / "verdicts.json", verdicts);
    report["verdicts"] = verdicts;
    report["notes"] = r.notes;
    report["warnings"] = r.warnings;
    report["exit_code"] = code;
    write_json(out / "report.json", report);
    return code;
}
