#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmfg/coupling.hpp"
#include "lmfg/errors.hpp"
#include "lmfg/hamiltonian.hpp"
#include "lmfg/heat_kernel.hpp"
#include "run_config.hpp"

namespace lmfg::cli {

struct Verdict {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    /// Which result of the theory the check exercises.
    std::string anchor;
};
nlohmann::json to_json(const Verdict& v);

struct RunReport {
    std::vector<Verdict> verdicts;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
    bool all_pass() const;
};

/// Objects built from a config before any artifact is written, so that a bad
/// kernel spec or grid still fails with no output.
struct Setup {
    Grid grid;
    LevyTriplet op;
    std::shared_ptr<const KernelCache> kernel;
    Hamiltonian H;
    Coupling F, G;
    std::optional<Measure> m0;
};
Setup prepare(const RunConfig& c, const std::string& subcommand);

RunReport run_command(const std::string& subcommand, const RunConfig& c, const Setup& s,
                      const std::filesystem::path& out);

/// 2 config, 3 divergence/instability, 4 budget.
int exit_code_for(ErrorKind kind);

/// Nearest grid node to a point (periodic).
std::size_t nearest_node(const Grid& g, const Vec2& x);

}  // namespace lmfg::cli
